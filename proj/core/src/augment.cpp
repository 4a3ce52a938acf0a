#include "edgenet/augment.hpp"

#include <cmath>

#include "edgenet/rng.hpp"
#include "edgenet/vision.hpp"

namespace edgenet {

namespace {

// Bilinear sample at (sy, sx); taps outside the frame read as white.
double sample_white_fill(const Image& img, double sy, double sx) {
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const double wy = sy - y0;
    const double wx = sx - x0;
    auto tap = [&](int r, int c) -> double {
        if (r < 0 || r >= img.height || c < 0 || c >= img.width) return 1.0;
        return img.at(r, c);
    };
    const double top = (1.0 - wx) * tap(y0, x0) + wx * tap(y0, x0 + 1);
    const double bot = (1.0 - wx) * tap(y0 + 1, x0) + wx * tap(y0 + 1, x0 + 1);
    return (1.0 - wy) * top + wy * bot;
}

constexpr uint64_t kTransformRotate = 1;
constexpr uint64_t kTransformTranslate = 3;

}  // namespace

Image rotate(const Image& img, double theta_degrees) {
    const double theta = theta_degrees * 3.14159265358979323846 / 180.0;
    // Inverse mapping: each output pixel pulls from the input at the
    // -theta-rotated position, so the image itself turns by +theta.
    const double ct = std::cos(-theta);
    const double st = std::sin(-theta);
    const double cx = (img.width - 1) * 0.5;
    const double cy = (img.height - 1) * 0.5;
    Image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double dx = c - cx;
            const double dy = r - cy;
            const double sx = ct * dx - st * dy + cx;
            const double sy = st * dx + ct * dy + cy;
            out.at(r, c) = static_cast<float>(sample_white_fill(img, sy, sx));
        }
    }
    return out;
}

Image rotate_random(const Image& img, uint64_t seed) {
    Rng rng(seed);
    return rotate(img, rng.uniform(-45.0, 45.0));
}

Image block_effect(const Image& img, int down_h, int down_w) {
    return resize(resize(img, down_h, down_w), img.height, img.width);
}

Image translate(const Image& img, int sx, int sy) {
    Image out(img.height, img.width, 1.0f);
    for (int r = 0; r < img.height; ++r) {
        const int src_r = r - sy;
        if (src_r < 0 || src_r >= img.height) continue;
        for (int c = 0; c < img.width; ++c) {
            const int src_c = c - sx;
            if (src_c < 0 || src_c >= img.width) continue;
            out.at(r, c) = img.at(src_r, src_c);
        }
    }
    return out;
}

Image translate_random(const Image& img, uint64_t seed) {
    Rng rng(seed);
    const int sx = static_cast<int>(rng.range(-5, 5));
    const int sy = static_cast<int>(rng.range(-5, 5));
    return translate(img, sx, sy);
}

std::vector<Sample> expand_training_set(const std::vector<Sample>& train,
                                        uint64_t master_seed) {
    std::vector<Sample> out;
    out.reserve(train.size() * 4);
    for (const Sample& s : train) {
        out.push_back(s);

        Sample rot = s;
        rot.tag = AugTag::rotated;
        rot.image = rotate_random(s.image, mix_seed(master_seed, s.id, kTransformRotate));
        out.push_back(std::move(rot));

        Sample blk = s;
        blk.tag = AugTag::blocked;
        blk.image = block_effect(s.image);
        out.push_back(std::move(blk));

        Sample tr = s;
        tr.tag = AugTag::translated;
        tr.image = translate_random(s.image, mix_seed(master_seed, s.id, kTransformTranslate));
        out.push_back(std::move(tr));
    }
    return out;
}

}  // namespace edgenet
