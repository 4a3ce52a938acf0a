#pragma once

#include <stdexcept>
#include <string>

#include "edgenet/image.hpp"

namespace edgenet {

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads a grayscale image from PNG (color converted to luma) or PGM (P5
/// binary / P2 ascii, maxval <= 255). Dispatch is by file content, not name.
Image load_image(const std::string& path);

/// 8-bit binary PGM (P5); pixels quantized by round(clamp(p,0,1)*255).
void save_pgm(const Image& img, const std::string& path);

}  // namespace edgenet
