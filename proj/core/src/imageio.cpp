#include "edgenet/imageio.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace edgenet {

namespace {

Image load_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw ImageIoError("cannot read PNG '" + path + "': " + png.message);
    }
    png.format = PNG_FORMAT_GRAY;
    std::vector<uint8_t> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw ImageIoError("cannot decode PNG '" + path + "': " + msg);
    }
    Image img(static_cast<int>(png.height), static_cast<int>(png.width));
    for (size_t i = 0; i < img.size(); ++i) {
        img.pixels[i] = static_cast<float>(buf[i]) / 255.0f;
    }
    return img;
}

// Reads the next whitespace/comment-delimited token of a PGM header.
std::string next_pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw ImageIoError("'" + path + "' ends inside PGM header");
    return tok;
}

int parse_pgm_int(std::istream& in, const std::string& path) {
    const std::string tok = next_pgm_token(in, path);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw ImageIoError("'" + path + "' has non-numeric PGM header field '" + tok + "'");
    }
}

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path + "'");
    const std::string magic = next_pgm_token(in, path);
    if (magic != "P5" && magic != "P2") {
        throw ImageIoError("'" + path + "' is not a PGM file (magic '" + magic + "')");
    }
    const int width = parse_pgm_int(in, path);
    const int height = parse_pgm_int(in, path);
    const int maxval = parse_pgm_int(in, path);
    if (width < 1 || height < 1) {
        throw ImageIoError("'" + path + "' declares empty image " + std::to_string(width) +
                           "x" + std::to_string(height));
    }
    if (maxval < 1 || maxval > 255) {
        throw ImageIoError("'" + path + "' has unsupported PGM maxval " +
                           std::to_string(maxval) + " (expected 1..255)");
    }
    Image img(height, width);
    if (magic == "P5") {
        // Exactly one whitespace byte separates the header from the payload;
        // next_pgm_token has already consumed it.
        std::vector<char> buf(img.size());
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
            throw ImageIoError("'" + path + "' PGM payload truncated");
        }
        for (size_t i = 0; i < img.size(); ++i) {
            img.pixels[i] =
                static_cast<float>(static_cast<uint8_t>(buf[i])) / static_cast<float>(maxval);
        }
    } else {
        for (size_t i = 0; i < img.size(); ++i) {
            const int v = parse_pgm_int(in, path);
            if (v < 0 || v > maxval) {
                throw ImageIoError("'" + path + "' has PGM value " + std::to_string(v) +
                                   " outside 0.." + std::to_string(maxval));
            }
            img.pixels[i] = static_cast<float>(v) / static_cast<float>(maxval);
        }
    }
    return img;
}

}  // namespace

Image load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ImageIoError("cannot open '" + path + "'");
    unsigned char sig[8] = {0};
    probe.read(reinterpret_cast<char*>(sig), 8);
    probe.close();
    if (png_sig_cmp(sig, 0, 8) == 0) return load_png(path);
    if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2')) return load_pgm(path);
    throw ImageIoError("'" + path + "' is neither PNG nor PGM");
}

void save_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageIoError("cannot write '" + path + "'");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<char> buf(img.size());
    for (size_t i = 0; i < img.size(); ++i) {
        const float p = std::min(1.0f, std::max(0.0f, img.pixels[i]));
        buf[i] = static_cast<char>(std::lround(p * 255.0f));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ImageIoError("short write on '" + path + "'");
}

}  // namespace edgenet
