#include "edgenet/vision.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace edgenet {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Replicate-padded pixel fetch.
inline double px(const Image& img, int r, int c) {
    return img.at(clampi(r, 0, img.height - 1), clampi(c, 0, img.width - 1));
}

// 3x3 Sobel gradients on a 0-255-scaled double plane, replicate borders.
void sobel_gradients(const std::vector<double>& m, int h, int w,
                     std::vector<double>& gx, std::vector<double>& gy) {
    gx.assign(m.size(), 0.0);
    gy.assign(m.size(), 0.0);
    auto at = [&](int r, int c) {
        return m[static_cast<size_t>(clampi(r, 0, h - 1)) * w + clampi(c, 0, w - 1)];
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double tl = at(r - 1, c - 1), tc = at(r - 1, c), tr = at(r - 1, c + 1);
            const double ml = at(r, c - 1), mr = at(r, c + 1);
            const double bl = at(r + 1, c - 1), bc = at(r + 1, c), br = at(r + 1, c + 1);
            gx[static_cast<size_t>(r) * w + c] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[static_cast<size_t>(r) * w + c] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
}

std::vector<double> scaled255(const Image& img) {
    std::vector<double> m(img.size());
    for (size_t i = 0; i < img.size(); ++i) m[i] = static_cast<double>(img.pixels[i]) * 255.0;
    return m;
}

}  // namespace

std::string edge_method_name(EdgeMethod m) {
    switch (m) {
        case EdgeMethod::canny: return "canny";
        case EdgeMethod::sobel3: return "sobel";
        case EdgeMethod::log3: return "log";
        case EdgeMethod::none: return "none";
    }
    throw std::logic_error("unreachable edge method");
}

EdgeMethod edge_method_from_name(const std::string& name) {
    if (name == "canny") return EdgeMethod::canny;
    if (name == "sobel") return EdgeMethod::sobel3;
    if (name == "log") return EdgeMethod::log3;
    if (name == "none") return EdgeMethod::none;
    throw std::invalid_argument("unknown edge method '" + name +
                                "' (expected canny, sobel, log, or none)");
}

EdgeParams default_edge_params(EdgeMethod m) {
    EdgeParams p;
    p.method = m;
    if (m == EdgeMethod::log3) {
        p.min_val = 20.0;
        p.max_val = 200.0;
    }
    return p;
}

Image resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("resize: target extents must be >= 1, got " +
                                    std::to_string(out_h) + "x" + std::to_string(out_w));
    }
    Image out(out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        const double fy = (r + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        const int ya = clampi(y0, 0, img.height - 1);
        const int yb = clampi(y0 + 1, 0, img.height - 1);
        for (int c = 0; c < out_w; ++c) {
            const double fx = (c + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            const int xa = clampi(x0, 0, img.width - 1);
            const int xb = clampi(x0 + 1, 0, img.width - 1);
            const double top = (1.0 - wx) * img.at(ya, xa) + wx * img.at(ya, xb);
            const double bot = (1.0 - wx) * img.at(yb, xa) + wx * img.at(yb, xb);
            const double v = (1.0 - wy) * top + wy * bot;
            out.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

BackgroundResult ensure_white_background(const Image& img) {
    double sum = 0.0;
    int64_t count = 0;
    for (int c = 0; c < img.width; ++c) {
        sum += img.at(0, c);
        ++count;
        if (img.height > 1) {
            sum += img.at(img.height - 1, c);
            ++count;
        }
    }
    for (int r = 1; r + 1 < img.height; ++r) {
        sum += img.at(r, 0);
        ++count;
        if (img.width > 1) {
            sum += img.at(r, img.width - 1);
            ++count;
        }
    }
    BackgroundResult res;
    res.inverted = (sum / static_cast<double>(count)) < 0.5;
    if (res.inverted) {
        res.image = invert(img);
    } else {
        res.image = img;
    }
    return res;
}

Image thicken_strokes(const Image& img) {
    Image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double mn = 1.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    mn = std::min(mn, px(img, r + dr, c + dc));
                }
            }
            out.at(r, c) = static_cast<float>(mn);
        }
    }
    return out;
}

Image gaussian_blur5(const Image& img, double sigma) {
    double kernel[5][5];
    double total = 0.0;
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[dy + 2][dx + 2] = v;
            total += v;
        }
    }
    for (auto& row : kernel) {
        for (double& v : row) v /= total;
    }
    Image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    acc += kernel[dy + 2][dx + 2] * px(img, r + dy, c + dx);
                }
            }
            out.at(r, c) = static_cast<float>(acc);
        }
    }
    return out;
}

Image invert(const Image& img) {
    Image out(img.height, img.width);
    for (size_t i = 0; i < img.size(); ++i) out.pixels[i] = 1.0f - img.pixels[i];
    return out;
}

Image canny(const Image& img, const EdgeParams& p) {
    if (img.height < 5 || img.width < 5) {
        throw std::invalid_argument("canny: image must be at least 5x5, got " +
                                    std::to_string(img.height) + "x" +
                                    std::to_string(img.width));
    }
    const int h = img.height, w = img.width;
    const Image blurred = gaussian_blur5(img, 1.4);
    const std::vector<double> m = scaled255(blurred);
    std::vector<double> gx, gy;
    sobel_gradients(m, h, w, gx, gy);

    std::vector<double> mag(m.size());
    for (size_t i = 0; i < m.size(); ++i) mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);

    auto mag_at = [&](int r, int c) -> double {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
        return mag[static_cast<size_t>(r) * w + c];
    };

    // Non-maximum suppression. Direction folds to [0,180) and picks one of
    // four neighbor pairs; the survivor must beat the first neighbor strictly
    // and the second at least, so a symmetric two-pixel ridge keeps exactly
    // one side.
    std::vector<uint8_t> strong(m.size(), 0), weak(m.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const size_t i = static_cast<size_t>(r) * w + c;
            const double v = mag[i];
            double deg = std::atan2(gy[i], gx[i]) * 180.0 / 3.14159265358979323846;
            if (deg < 0.0) deg += 180.0;
            double n1, n2;
            if (deg < 22.5 || deg >= 157.5) {
                n1 = mag_at(r, c - 1);
                n2 = mag_at(r, c + 1);
            } else if (deg < 67.5) {
                n1 = mag_at(r - 1, c + 1);
                n2 = mag_at(r + 1, c - 1);
            } else if (deg < 112.5) {
                n1 = mag_at(r - 1, c);
                n2 = mag_at(r + 1, c);
            } else {
                n1 = mag_at(r - 1, c - 1);
                n2 = mag_at(r + 1, c + 1);
            }
            if (v > n1 && v >= n2) {
                if (v >= p.max_val) {
                    strong[i] = 1;
                } else if (v >= p.min_val) {
                    weak[i] = 1;
                }
            }
        }
    }

    // Hysteresis: flood from strong pixels through 8-connected weak pixels.
    Image out(h, w);
    std::vector<size_t> stack;
    for (size_t i = 0; i < strong.size(); ++i) {
        if (strong[i]) {
            out.pixels[i] = 1.0f;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const size_t i = stack.back();
        stack.pop_back();
        const int r = static_cast<int>(i) / w;
        const int c = static_cast<int>(i) % w;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int nr = r + dr, nc = c + dc;
                if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                const size_t j = static_cast<size_t>(nr) * w + nc;
                if (weak[j] && out.pixels[j] == 0.0f) {
                    out.pixels[j] = 1.0f;
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

Image sobel_edges(const Image& img, const EdgeParams& p) {
    const std::vector<double> m = scaled255(img);
    std::vector<double> gx, gy;
    sobel_gradients(m, img.height, img.width, gx, gy);
    Image out(img.height, img.width);
    for (size_t i = 0; i < m.size(); ++i) {
        out.pixels[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]) >= p.min_val ? 1.0f : 0.0f;
    }
    return out;
}

Image log_edges(const Image& img, const EdgeParams& p) {
    const int h = img.height, w = img.width;
    const std::vector<double> m = scaled255(gaussian_blur5(img, 1.4));
    std::vector<double> lap(m.size());
    auto at = [&](int r, int c) {
        return m[static_cast<size_t>(clampi(r, 0, h - 1)) * w + clampi(c, 0, w - 1)];
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            lap[static_cast<size_t>(r) * w + c] =
                at(r - 1, c) + at(r, c - 1) + at(r, c + 1) + at(r + 1, c) - 4.0 * at(r, c);
        }
    }
    Image out(h, w);
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = lap[static_cast<size_t>(r) * w + c];
            bool edge = false;
            for (int k = 0; k < 4 && !edge; ++k) {
                const int nr = r + dr[k], nc = c + dc[k];
                if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                const double n = lap[static_cast<size_t>(nr) * w + nc];
                const bool opposite = (v > 0.0 && n < 0.0) || (v < 0.0 && n > 0.0);
                if (opposite && std::abs(v - n) >= p.min_val) edge = true;
            }
            out.at(r, c) = edge ? 1.0f : 0.0f;
        }
    }
    return out;
}

Image extract_edges(const Image& img, const EdgeParams& p) {
    switch (p.method) {
        case EdgeMethod::canny: return canny(img, p);
        case EdgeMethod::sobel3: return sobel_edges(img, p);
        case EdgeMethod::log3: return log_edges(img, p);
        case EdgeMethod::none:
            throw std::invalid_argument(
                "extract_edges: method 'none' has no edge map; caller must not request one");
    }
    throw std::logic_error("unreachable edge method");
}

}  // namespace edgenet
