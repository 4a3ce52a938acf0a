#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "edgenet/image.hpp"

namespace edgenet {

struct IdxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Wrong magic number (file is not an IDX image/label file of the expected kind).
struct IdxMagicError : IdxError {
    using IdxError::IdxError;
};
/// File ends before the header or payload it promises.
struct IdxTruncatedError : IdxError {
    using IdxError::IdxError;
};
/// Image file and label file disagree on the number of items.
struct IdxCountMismatchError : IdxError {
    using IdxError::IdxError;
};

/// Reads an MNIST-style IDX pair: big-endian magic 0x00000803 + [count,rows,
/// cols] + unsigned bytes for images, 0x00000801 + [count] + bytes for labels.
/// Pixel bytes are scaled to [0,1]. Samples keep whatever polarity the file
/// has; background normalization happens later in preprocessing.
std::vector<Sample> load_idx(const std::string& images_path,
                             const std::string& labels_path);

/// Writes the same format (pixels quantized to bytes by round(p*255)).
/// All images must share one height/width.
void save_idx(const std::vector<Sample>& samples, const std::string& images_path,
              const std::string& labels_path);

}  // namespace edgenet
