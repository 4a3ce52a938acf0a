#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgenet {

/// Grayscale image, row-major, intensities normalized to [0,1].
/// Stored as float: precise enough for 8-bit-derived pixel data and half the
/// footprint of double, which matters when the augmented training set holds
/// a quarter million images.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w) : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("image dimensions must be positive, got " +
                                        std::to_string(h) + "x" + std::to_string(w));
        }
        pixels.assign(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0f);
    }
    Image(int h, int w, float fill) : Image(h, w) {
        std::fill(pixels.begin(), pixels.end(), fill);
    }

    float& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }

    size_t size() const { return pixels.size(); }
    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

enum class AugTag : uint8_t { original, rotated, blocked, translated };

inline const char* aug_tag_name(AugTag t) {
    switch (t) {
        case AugTag::original: return "original";
        case AugTag::rotated: return "rotated";
        case AugTag::blocked: return "blocked";
        case AugTag::translated: return "translated";
    }
    return "?";
}

/// One labeled sample. `id` is assigned once when samples enter the pool and
/// survives shuffling, so augmentation seeds derived from it do not depend on
/// the order samples happen to be visited in.
struct Sample {
    Image image;
    uint8_t label = 0;
    uint64_t id = 0;
    std::string source;
    AugTag tag = AugTag::original;
};

}  // namespace edgenet
