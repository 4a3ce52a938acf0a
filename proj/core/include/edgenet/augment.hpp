#pragma once

#include <cstdint>
#include <vector>

#include "edgenet/image.hpp"

namespace edgenet {

/// Rotation about the image center ((W-1)/2, (H-1)/2) by theta degrees,
/// bilinear resampling via inverse mapping, out-of-frame samples filled white
/// (1.0). theta = 0 reproduces the input exactly.
Image rotate(const Image& img, double theta_degrees);

/// theta ~ Uniform(-45, +45) degrees derived from seed.
Image rotate_random(const Image& img, uint64_t seed);

/// Detail destruction: bilinear downsample to down_h x down_w, then bilinear
/// upsample back to the original extents.
Image block_effect(const Image& img, int down_h = 14, int down_w = 14);

/// Integer shift; sx moves content right, sy moves it down. Vacated pixels
/// are white (1.0).
Image translate(const Image& img, int sx, int sy);

/// sx, sy each ~ Uniform{-5..+5} from seed (sx drawn first).
Image translate_random(const Image& img, uint64_t seed);

/// Emits, per input sample in order: the original, a rotated copy, a blocked
/// copy, and a translated copy (4x expansion, labels preserved). Per-sample
/// randomness is keyed on (master_seed, sample.id, transform), so the result
/// is the same multiset no matter how the input list is ordered.
std::vector<Sample> expand_training_set(const std::vector<Sample>& train,
                                        uint64_t master_seed);

}  // namespace edgenet
