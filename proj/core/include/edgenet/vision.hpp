#pragma once

#include <string>

#include "edgenet/image.hpp"

namespace edgenet {

enum class EdgeMethod { canny, sobel3, log3, none };

std::string edge_method_name(EdgeMethod m);
EdgeMethod edge_method_from_name(const std::string& name);

/// Thresholds are on the 0-255 gradient-magnitude scale: images live in [0,1]
/// but the classical threshold values people quote assume 8-bit intensities,
/// so the extractors scale by 255 before differentiating.
struct EdgeParams {
    EdgeMethod method = EdgeMethod::canny;
    double min_val = 100.0;
    double max_val = 200.0;
    int aperture = 3;
};

/// Canny/Sobel keep the classical 100/200 defaults. The LoG response to a
/// clean 0-255 step edge is only ~35 per side of the zero crossing, so a 100
/// threshold would blank every map; 20 keeps real strokes while rejecting
/// quantization ripple.
EdgeParams default_edge_params(EdgeMethod m);

/// Bilinear resize with half-pixel-aligned sample centers; output clamped to
/// [0,1]. Resizing to the identical size reproduces the input exactly.
Image resize(const Image& img, int out_h, int out_w);

struct BackgroundResult {
    Image image;
    bool inverted = false;
};

/// Dark-background images (border mean < 0.5) are inverted so every sample
/// presents dark ink on a white field; a border mean of exactly 0.5 is left
/// alone.
BackgroundResult ensure_white_background(const Image& img);

/// 3x3 minimum filter with replicate borders: erodes the bright field, which
/// dilates (thickens) the dark strokes.
Image thicken_strokes(const Image& img);

/// 5x5 Gaussian blur, replicate borders. Exposed because the edge extractors
/// and their test references must share the exact same smoothing stage.
Image gaussian_blur5(const Image& img, double sigma = 1.4);

Image invert(const Image& img);

/// Blur -> Sobel gradients -> non-maximum suppression (4 direction bins) ->
/// double threshold -> hysteresis (weak pixels kept only when 8-connected to
/// a strong pixel). Output is binary {0,1}, 1 = edge. Images smaller than the
/// blur kernel (5x5) are rejected.
Image canny(const Image& img, const EdgeParams& p);

/// Sobel gradient magnitude (no pre-blur) thresholded at min_val.
Image sobel_edges(const Image& img, const EdgeParams& p);

/// Gaussian blur -> 3x3 Laplacian; a pixel is an edge when some 4-neighbor
/// has strictly opposite Laplacian sign and the value swing across the pair
/// is at least min_val.
Image log_edges(const Image& img, const EdgeParams& p);

/// Dispatch on p.method. EdgeMethod::none is an error here: callers that do
/// not use edges must not ask for an edge map.
Image extract_edges(const Image& img, const EdgeParams& p);

}  // namespace edgenet
