#include "edgenet/idx.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace edgenet {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

std::vector<uint8_t> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

uint32_t read_be32(const std::vector<uint8_t>& b, size_t off, const std::string& path) {
    if (off + 4 > b.size()) {
        throw IdxTruncatedError("'" + path + "' truncated inside header");
    }
    return (static_cast<uint32_t>(b[off]) << 24) | (static_cast<uint32_t>(b[off + 1]) << 16) |
           (static_cast<uint32_t>(b[off + 2]) << 8) | static_cast<uint32_t>(b[off + 3]);
}

void write_be32(std::ofstream& out, uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

}  // namespace

std::vector<Sample> load_idx(const std::string& images_path,
                             const std::string& labels_path) {
    const std::vector<uint8_t> ib = read_all(images_path);
    const uint32_t im = read_be32(ib, 0, images_path);
    if (im != kImageMagic) {
        throw IdxMagicError("'" + images_path + "' has magic " + std::to_string(im) +
                            ", expected " + std::to_string(kImageMagic) +
                            " (IDX image file)");
    }
    const uint32_t count = read_be32(ib, 4, images_path);
    const uint32_t rows = read_be32(ib, 8, images_path);
    const uint32_t cols = read_be32(ib, 12, images_path);
    if (count > 0 && (rows == 0 || cols == 0)) {
        throw IdxError("'" + images_path + "' declares zero-extent images");
    }
    const size_t need = 16 + static_cast<size_t>(count) * rows * cols;
    if (ib.size() < need) {
        throw IdxTruncatedError("'" + images_path + "' holds " + std::to_string(ib.size()) +
                                " bytes, needs " + std::to_string(need) + " for " +
                                std::to_string(count) + " images");
    }

    const std::vector<uint8_t> lb = read_all(labels_path);
    const uint32_t lm = read_be32(lb, 0, labels_path);
    if (lm != kLabelMagic) {
        throw IdxMagicError("'" + labels_path + "' has magic " + std::to_string(lm) +
                            ", expected " + std::to_string(kLabelMagic) +
                            " (IDX label file)");
    }
    const uint32_t lcount = read_be32(lb, 4, labels_path);
    if (lcount != count) {
        throw IdxCountMismatchError("'" + images_path + "' has " + std::to_string(count) +
                                    " images but '" + labels_path + "' has " +
                                    std::to_string(lcount) + " labels");
    }
    if (lb.size() < 8 + static_cast<size_t>(lcount)) {
        throw IdxTruncatedError("'" + labels_path + "' truncated: needs " +
                                std::to_string(8 + lcount) + " bytes, has " +
                                std::to_string(lb.size()));
    }

    std::vector<Sample> samples(count);
    const uint8_t* px = ib.data() + 16;
    for (uint32_t i = 0; i < count; ++i) {
        Sample& s = samples[i];
        s.image = Image(static_cast<int>(rows), static_cast<int>(cols));
        const size_t base = static_cast<size_t>(i) * rows * cols;
        for (size_t j = 0; j < static_cast<size_t>(rows) * cols; ++j) {
            s.image.pixels[j] = static_cast<float>(px[base + j]) / 255.0f;
        }
        s.label = lb[8 + i];
    }
    return samples;
}

void save_idx(const std::vector<Sample>& samples, const std::string& images_path,
              const std::string& labels_path) {
    int rows = 0, cols = 0;
    if (!samples.empty()) {
        rows = samples[0].image.height;
        cols = samples[0].image.width;
        for (const Sample& s : samples) {
            if (s.image.height != rows || s.image.width != cols) {
                throw IdxError("save_idx: images must share one size; got " +
                               std::to_string(rows) + "x" + std::to_string(cols) + " and " +
                               std::to_string(s.image.height) + "x" +
                               std::to_string(s.image.width));
            }
        }
    }
    std::ofstream io(images_path, std::ios::binary | std::ios::trunc);
    if (!io) throw IdxError("cannot write '" + images_path + "'");
    write_be32(io, kImageMagic);
    write_be32(io, static_cast<uint32_t>(samples.size()));
    write_be32(io, static_cast<uint32_t>(rows));
    write_be32(io, static_cast<uint32_t>(cols));
    std::vector<char> buf;
    for (const Sample& s : samples) {
        buf.resize(s.image.size());
        for (size_t j = 0; j < s.image.size(); ++j) {
            const float p = std::min(1.0f, std::max(0.0f, s.image.pixels[j]));
            buf[j] = static_cast<char>(std::lround(p * 255.0f));
        }
        io.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!io) throw IdxError("short write on '" + images_path + "'");

    std::ofstream lo(labels_path, std::ios::binary | std::ios::trunc);
    if (!lo) throw IdxError("cannot write '" + labels_path + "'");
    write_be32(lo, kLabelMagic);
    write_be32(lo, static_cast<uint32_t>(samples.size()));
    for (const Sample& s : samples) {
        lo.put(static_cast<char>(s.label));
    }
    if (!lo) throw IdxError("short write on '" + labels_path + "'");
}

}  // namespace edgenet
