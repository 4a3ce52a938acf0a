#include "synth_digits.hpp"

#include <cmath>
#include <stdexcept>

#include "edgenet/rng.hpp"

namespace testsupport {

namespace {

// 5x7 font, one byte per row, bit 4 = leftmost column.
const uint8_t kFont[10][7] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x04, 0x04, 0x04},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
};

inline bool glyph_bit(int digit, int row, int col) {
    return (kFont[digit][row] >> (4 - col)) & 1;
}

}  // namespace

edgenet::Image render_digit(int digit, uint64_t seed) {
    if (digit < 0 || digit > 9) {
        throw std::invalid_argument("render_digit: digit out of range");
    }
    edgenet::Rng rng(seed);
    const double scale = 0.85 + 0.30 * rng.uniform01();
    const double theta = (rng.uniform01() * 24.0 - 12.0) * 3.14159265358979323846 / 180.0;
    const double shift_x = rng.uniform01() * 6.0 - 3.0;
    const double shift_y = rng.uniform01() * 6.0 - 3.0;
    const double cell = 19.0 * scale / 7.0;  // glyph height ~19px before jitter
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    edgenet::Image img(28, 28);
    const double subs[2] = {0.25, 0.75};
    for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
            double cover = 0.0;
            for (double sy : subs) {
                for (double sx : subs) {
                    // Undo shift and rotation about the image center, then map
                    // into glyph cells.
                    const double x = c + sx - 13.5 - shift_x;
                    const double y = r + sy - 13.5 - shift_y;
                    const double ux = ct * x + st * y;
                    const double uy = -st * x + ct * y;
                    const int gx = static_cast<int>(std::floor(ux / cell + 2.5));
                    const int gy = static_cast<int>(std::floor(uy / cell + 3.5));
                    if (gx >= 0 && gx < 5 && gy >= 0 && gy < 7 && glyph_bit(digit, gy, gx)) {
                        cover += 0.25;
                    }
                }
            }
            double v = 1.0 - cover + (rng.uniform01() * 0.10 - 0.05);
            if (v < 0.0) v = 0.0;
            if (v > 1.0) v = 1.0;
            img.at(r, c) = static_cast<float>(v);
        }
    }
    return img;
}

std::vector<edgenet::Sample> make_corpus(size_t n, uint64_t seed) {
    std::vector<edgenet::Sample> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        edgenet::Sample s;
        s.label = static_cast<uint8_t>(i % 10);
        s.id = i;
        s.source = "synthetic";
        s.image = render_digit(static_cast<int>(i % 10), edgenet::mix_seed(seed, i));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace testsupport
