#include "edgenet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "edgenet/rng.hpp"

namespace edgenet {

namespace {

// Fixed-order dot product with eight running partial sums, one per vector
// lane. The lane arithmetic is explicit (GCC/Clang vector extension) rather
// than left to the auto-vectorizer, both for speed and so the reduction order
// is pinned by the source: lane sums combine in a fixed tree, results are
// identical from build to build and independent of how many samples run
// concurrently.
template <typename T>
T dot8(const T* a, const T* b, int64_t n) {
    typedef T vec8 __attribute__((vector_size(8 * sizeof(T))));
    vec8 acc = {};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        vec8 va, vb;
        std::memcpy(&va, a + i, sizeof(va));
        std::memcpy(&vb, b + i, sizeof(vb));
        acc += va * vb;
    }
    T tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
           tail;
}

// y[0..n) += s * x[0..n)
template <typename T>
void axpy(T* y, T s, const T* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += s * x[i];
}

template <typename T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                       const ConvSpec& s) {
    if (s.stride < 1 || s.dilation < 1 || s.pad < 0) {
        throw std::invalid_argument("conv2d: stride/dilation must be >= 1 and padding >= 0");
    }
    if (x.rank() != 3) {
        throw std::invalid_argument("conv2d: input must be [channels,height,width], got " +
                                    shape_to_string(x.shape()));
    }
    if (x.dim(0) != s.in_channels) {
        throw std::invalid_argument("conv2d: input has " + std::to_string(x.dim(0)) +
                                    " channels, layer expects " + std::to_string(s.in_channels));
    }
    std::vector<int> want_w = {s.out_channels, s.in_channels, s.kernel_h, s.kernel_w};
    if (w.shape() != want_w) {
        throw std::invalid_argument("conv2d: weight shape " + shape_to_string(w.shape()) +
                                    " does not match " + shape_to_string(want_w));
    }
    if (b.shape() != std::vector<int>{s.out_channels}) {
        throw std::invalid_argument("conv2d: bias shape " + shape_to_string(b.shape()) +
                                    " does not match [" + std::to_string(s.out_channels) + "]");
    }
    int oh = conv_out_extent(x.dim(1), s.kernel_h, s.stride, s.pad, s.dilation);
    int ow = conv_out_extent(x.dim(2), s.kernel_w, s.stride, s.pad, s.dilation);
    if (oh <= 0 || ow <= 0) {
        throw std::invalid_argument("conv2d: output extents would be nonpositive for input " +
                                    shape_to_string(x.shape()));
    }
}

// Unrolls receptive fields into col[IC*KH*KW][OH*OW]; out-of-bounds taps are
// zero (zero padding).
template <typename T>
void im2col(const T* x, int ic, int h, int w, const ConvSpec& s, int oh, int ow,
            T* col) {
    const int64_t plane = static_cast<int64_t>(oh) * ow;
    int64_t row = 0;
    for (int c = 0; c < ic; ++c) {
        const T* xc = x + static_cast<int64_t>(c) * h * w;
        for (int kh = 0; kh < s.kernel_h; ++kh) {
            for (int kw = 0; kw < s.kernel_w; ++kw, ++row) {
                T* dst = col + row * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s.stride - s.pad + kh * s.dilation;
                    T* drow = dst + static_cast<int64_t>(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        std::memset(drow, 0, sizeof(T) * static_cast<size_t>(ow));
                        continue;
                    }
                    const T* xrow = xc + static_cast<int64_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s.stride - s.pad + kw * s.dilation;
                        drow[ox] = (ix >= 0 && ix < w) ? xrow[ix] : T(0);
                    }
                }
            }
        }
    }
}

// Scatters col-layout gradients back onto the input plane. Accumulation runs
// in a fixed sequential order.
template <typename T>
void col2im(const T* col, int ic, int h, int w, const ConvSpec& s, int oh, int ow,
            T* x) {
    const int64_t plane = static_cast<int64_t>(oh) * ow;
    std::memset(x, 0, sizeof(T) * static_cast<size_t>(ic) * h * w);
    int64_t row = 0;
    for (int c = 0; c < ic; ++c) {
        T* xc = x + static_cast<int64_t>(c) * h * w;
        for (int kh = 0; kh < s.kernel_h; ++kh) {
            for (int kw = 0; kw < s.kernel_w; ++kw, ++row) {
                const T* src = col + row * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s.stride - s.pad + kh * s.dilation;
                    if (iy < 0 || iy >= h) continue;
                    T* xrow = xc + static_cast<int64_t>(iy) * w;
                    const T* srow = src + static_cast<int64_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s.stride - s.pad + kw * s.dilation;
                        if (ix >= 0 && ix < w) xrow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const ConvSpec& s) {
    check_conv_shapes(x, w, b, s);
    const int h = x.dim(1), wd = x.dim(2);
    const int oh = conv_out_extent(h, s.kernel_h, s.stride, s.pad, s.dilation);
    const int ow = conv_out_extent(wd, s.kernel_w, s.stride, s.pad, s.dilation);
    const int64_t k = static_cast<int64_t>(s.in_channels) * s.kernel_h * s.kernel_w;
    const int64_t n = static_cast<int64_t>(oh) * ow;

    std::vector<T> col(static_cast<size_t>(k * n));
    im2col(x.data(), s.in_channels, h, wd, s, oh, ow, col.data());

    Tensor<T> y({s.out_channels, oh, ow});
    T* yd = y.data();
    // Initialize with bias, then accumulate k rank-1 updates. Output rows are
    // processed four at a time so each col row load feeds four accumulations.
    for (int oc = 0; oc < s.out_channels; ++oc) {
        std::fill(yd + static_cast<int64_t>(oc) * n, yd + static_cast<int64_t>(oc + 1) * n,
                  b[oc]);
    }
    int oc = 0;
    for (; oc + 4 <= s.out_channels; oc += 4) {
        T* y0 = yd + static_cast<int64_t>(oc + 0) * n;
        T* y1 = yd + static_cast<int64_t>(oc + 1) * n;
        T* y2 = yd + static_cast<int64_t>(oc + 2) * n;
        T* y3 = yd + static_cast<int64_t>(oc + 3) * n;
        const T* w0 = w.data() + static_cast<int64_t>(oc + 0) * k;
        const T* w1 = w.data() + static_cast<int64_t>(oc + 1) * k;
        const T* w2 = w.data() + static_cast<int64_t>(oc + 2) * k;
        const T* w3 = w.data() + static_cast<int64_t>(oc + 3) * k;
        for (int64_t r = 0; r < k; ++r) {
            const T* c = col.data() + r * n;
            const T a0 = w0[r], a1 = w1[r], a2 = w2[r], a3 = w3[r];
            for (int64_t i = 0; i < n; ++i) {
                y0[i] += a0 * c[i];
                y1[i] += a1 * c[i];
                y2[i] += a2 * c[i];
                y3[i] += a3 * c[i];
            }
        }
    }
    for (; oc < s.out_channels; ++oc) {
        T* yo = yd + static_cast<int64_t>(oc) * n;
        const T* wo = w.data() + static_cast<int64_t>(oc) * k;
        for (int64_t r = 0; r < k; ++r) axpy(yo, wo[r], col.data() + r * n, n);
    }
    return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& grad_out, const ConvSpec& s) {
    Tensor<T> b({s.out_channels});  // shape probe only; values unused
    check_conv_shapes(x, w, b, s);
    const int h = x.dim(1), wd = x.dim(2);
    const int oh = conv_out_extent(h, s.kernel_h, s.stride, s.pad, s.dilation);
    const int ow = conv_out_extent(wd, s.kernel_w, s.stride, s.pad, s.dilation);
    if (grad_out.shape() != std::vector<int>{s.out_channels, oh, ow}) {
        throw std::invalid_argument(
            "conv2d_backward: grad shape " + shape_to_string(grad_out.shape()) +
            " does not match forward output [" + std::to_string(s.out_channels) + "," +
            std::to_string(oh) + "," + std::to_string(ow) + "]");
    }
    const int64_t k = static_cast<int64_t>(s.in_channels) * s.kernel_h * s.kernel_w;
    const int64_t n = static_cast<int64_t>(oh) * ow;

    std::vector<T> col(static_cast<size_t>(k * n));
    im2col(x.data(), s.in_channels, h, wd, s, oh, ow, col.data());

    ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({s.out_channels})};

    // db[oc] = sum of grad_out row oc.
    for (int oc = 0; oc < s.out_channels; ++oc) {
        const T* dyo = grad_out.data() + static_cast<int64_t>(oc) * n;
        T acc = 0;
        for (int64_t i = 0; i < n; ++i) acc += dyo[i];
        g.db[oc] = acc;
    }

    // dW[oc,r] = <grad_out row oc, col row r>. The col row is the outer loop
    // so each one is loaded once and consumed by every output channel; the
    // whole grad_out plane stays cache-resident.
    for (int64_t r = 0; r < k; ++r) {
        const T* cr = col.data() + r * n;
        for (int oc = 0; oc < s.out_channels; ++oc) {
            g.dw.data()[static_cast<int64_t>(oc) * k + r] =
                dot8(grad_out.data() + static_cast<int64_t>(oc) * n, cr, n);
        }
    }

    // dcol = W^T * grad_out, then fold the unrolled gradient back onto x.
    // Same loop order as dW for the same reason; per element the accumulation
    // still runs over output channels in ascending order.
    std::vector<T> dcol(static_cast<size_t>(k * n), T(0));
    for (int64_t r = 0; r < k; ++r) {
        T* dr = dcol.data() + r * n;
        for (int oc = 0; oc < s.out_channels; ++oc) {
            axpy(dr, w.data()[static_cast<int64_t>(oc) * k + r],
                 grad_out.data() + static_cast<int64_t>(oc) * n, n);
        }
    }
    col2im(dcol.data(), s.in_channels, h, wd, s, oh, ow, g.dx.data());
    return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    const T* xd = x.data();
    T* yd = y.data();
    for (int64_t i = 0; i < x.size(); ++i) yd[i] = xd[i] > T(0) ? xd[i] : T(0);
    return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    if (!x.same_shape(grad_out)) {
        throw std::invalid_argument("relu_backward: input shape " + shape_to_string(x.shape()) +
                                    " does not match grad shape " +
                                    shape_to_string(grad_out.shape()));
    }
    Tensor<T> dx(x.shape());
    const T* xd = x.data();
    const T* gd = grad_out.data();
    T* dd = dx.data();
    for (int64_t i = 0; i < x.size(); ++i) dd[i] = xd[i] > T(0) ? gd[i] : T(0);
    return dx;
}

template <typename T>
Tensor<T> avgpool2d_forward(const Tensor<T>& x) {
    if (x.rank() != 3) {
        throw std::invalid_argument("avgpool2d: input must be [channels,height,width], got " +
                                    shape_to_string(x.shape()));
    }
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw std::invalid_argument("avgpool2d: spatial extents must be even, got " +
                                    std::to_string(h) + "x" + std::to_string(w));
    }
    Tensor<T> y({c, h / 2, w / 2});
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < h / 2; ++oy) {
            for (int ox = 0; ox < w / 2; ++ox) {
                const T s = x.at(ch, 2 * oy, 2 * ox) + x.at(ch, 2 * oy, 2 * ox + 1) +
                            x.at(ch, 2 * oy + 1, 2 * ox) + x.at(ch, 2 * oy + 1, 2 * ox + 1);
                y.at(ch, oy, ox) = s * T(0.25);
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> avgpool2d_backward(const Tensor<T>& grad_out) {
    if (grad_out.rank() != 3) {
        throw std::invalid_argument("avgpool2d_backward: grad must be [channels,height,width]");
    }
    const int c = grad_out.dim(0), oh = grad_out.dim(1), ow = grad_out.dim(2);
    Tensor<T> dx({c, oh * 2, ow * 2});
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const T g = grad_out.at(ch, oy, ox) * T(0.25);
                dx.at(ch, 2 * oy, 2 * ox) = g;
                dx.at(ch, 2 * oy, 2 * ox + 1) = g;
                dx.at(ch, 2 * oy + 1, 2 * ox) = g;
                dx.at(ch, 2 * oy + 1, 2 * ox + 1) = g;
            }
        }
    }
    return dx;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (w.rank() != 2) {
        throw std::invalid_argument("dense: weights must be [out,in], got " +
                                    shape_to_string(w.shape()));
    }
    const int out = w.dim(0), in = w.dim(1);
    if (x.size() != in) {
        throw std::invalid_argument("dense: input length " + std::to_string(x.size()) +
                                    " does not match weight columns " + std::to_string(in));
    }
    if (b.shape() != std::vector<int>{out}) {
        throw std::invalid_argument("dense: bias shape " + shape_to_string(b.shape()) +
                                    " does not match [" + std::to_string(out) + "]");
    }
    Tensor<T> y({out});
    for (int o = 0; o < out; ++o) {
        y[o] = b[o] + dot8(w.data() + static_cast<int64_t>(o) * in, x.data(), in);
    }
    return y;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& grad_out) {
    const int out = w.dim(0), in = w.dim(1);
    if (grad_out.size() != out) {
        throw std::invalid_argument("dense_backward: grad length " +
                                    std::to_string(grad_out.size()) +
                                    " does not match outputs " + std::to_string(out));
    }
    if (x.size() != in) {
        throw std::invalid_argument("dense_backward: input length " + std::to_string(x.size()) +
                                    " does not match weight columns " + std::to_string(in));
    }
    DenseGrads<T> g{Tensor<T>({in}), Tensor<T>(w.shape()), Tensor<T>({out})};
    for (int o = 0; o < out; ++o) {
        const T gy = grad_out[o];
        g.db[o] = gy;
        T* dwo = g.dw.data() + static_cast<int64_t>(o) * in;
        const T* xd = x.data();
        for (int i = 0; i < in; ++i) dwo[i] = gy * xd[i];
        axpy(g.dx.data(), gy, w.data() + static_cast<int64_t>(o) * in,
             static_cast<int64_t>(in));
    }
    return g;
}

template <typename T>
Tensor<T> concat_channels_forward(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3) {
        throw std::invalid_argument("concat_channels: inputs must be [channels,height,width]");
    }
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
        throw std::invalid_argument("concat_channels: spatial extents differ, " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    }
    Tensor<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::memcpy(y.data(), a.data(), sizeof(T) * static_cast<size_t>(a.size()));
    std::memcpy(y.data() + a.size(), b.data(), sizeof(T) * static_cast<size_t>(b.size()));
    return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_channels_backward(const Tensor<T>& grad_out,
                                                         int ca, int cb) {
    if (grad_out.rank() != 3 || grad_out.dim(0) != ca + cb) {
        throw std::invalid_argument("concat_channels_backward: grad shape " +
                                    shape_to_string(grad_out.shape()) +
                                    " does not split into " + std::to_string(ca) + "+" +
                                    std::to_string(cb) + " channels");
    }
    const int h = grad_out.dim(1), w = grad_out.dim(2);
    Tensor<T> da({ca, h, w});
    Tensor<T> db({cb, h, w});
    std::memcpy(da.data(), grad_out.data(), sizeof(T) * static_cast<size_t>(da.size()));
    std::memcpy(db.data(), grad_out.data() + da.size(),
                sizeof(T) * static_cast<size_t>(db.size()));
    return {std::move(da), std::move(db)};
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, uint64_t seed,
                                 bool training) {
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("dropout: rate must be in [0,1), got " +
                                    std::to_string(rate));
    }
    DropoutResult<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape())};
    if (!training || rate == 0.0) {
        r.y = x;
        std::fill(r.mask.data(), r.mask.data() + r.mask.size(), T(1));
        return r;
    }
    // Survival decisions are made on the double-precision stream, so the same
    // seed drops the same units in single- and double-precision builds.
    Rng rng(seed);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    const T* xd = x.data();
    T* yd = r.y.data();
    T* md = r.mask.data();
    for (int64_t i = 0; i < x.size(); ++i) {
        const T m = rng.uniform01() >= rate ? scale : T(0);
        md[i] = m;
        yd[i] = xd[i] * m;
    }
    return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask) {
    if (!grad_out.same_shape(mask)) {
        throw std::invalid_argument("dropout_backward: grad shape " +
                                    shape_to_string(grad_out.shape()) +
                                    " does not match mask shape " +
                                    shape_to_string(mask.shape()));
    }
    Tensor<T> dx(grad_out.shape());
    const T* gd = grad_out.data();
    const T* md = mask.data();
    T* dd = dx.data();
    for (int64_t i = 0; i < dx.size(); ++i) dd[i] = gd[i] * md[i];
    return dx;
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
    return reshape(x, {static_cast<int>(x.size())});
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> shape) {
    if (shape_numel(shape) != x.size()) {
        throw std::invalid_argument("reshape: cannot view " + shape_to_string(x.shape()) +
                                    " as " + shape_to_string(shape));
    }
    return Tensor<T>(std::move(shape),
                     std::vector<T>(x.data(), x.data() + x.size()));
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    Tensor<T> p(logits.shape());
    const T* ld = logits.data();
    T* pd = p.data();
    T mx = ld[0];
    for (int64_t i = 1; i < logits.size(); ++i) mx = std::max(mx, ld[i]);
    T sum = 0;
    for (int64_t i = 0; i < logits.size(); ++i) {
        pd[i] = std::exp(ld[i] - mx);
        sum += pd[i];
    }
    const T inv = T(1) / sum;
    for (int64_t i = 0; i < logits.size(); ++i) pd[i] *= inv;
    return p;
}

template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& probs, int label) {
    if (label < 0 || label >= probs.size()) {
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " outside [0," + std::to_string(probs.size()) + ")");
    }
    CrossEntropyResult<T> r;
    const T p = std::max(probs[label], std::numeric_limits<T>::min());
    r.loss = -std::log(p);
    r.dlogits = probs;
    r.dlogits[label] -= T(1);
    return r;
}

// The library runs in single precision for training speed and double precision
// for gradient checking; both instantiations live here so headers stay light.
#define EDGENET_INSTANTIATE_LAYERS(T)                                                      \
    template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&,              \
                                         const Tensor<T>&, const ConvSpec&);              \
    template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,          \
                                             const Tensor<T>&, const ConvSpec&);          \
    template Tensor<T> relu_forward<T>(const Tensor<T>&);                                 \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);              \
    template Tensor<T> avgpool2d_forward<T>(const Tensor<T>&);                            \
    template Tensor<T> avgpool2d_backward<T>(const Tensor<T>&);                           \
    template Tensor<T> dense_forward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                        const Tensor<T>&);                                \
    template DenseGrads<T> dense_backward<T>(const Tensor<T>&, const Tensor<T>&,          \
                                             const Tensor<T>&);                           \
    template Tensor<T> concat_channels_forward<T>(const Tensor<T>&, const Tensor<T>&);    \
    template std::pair<Tensor<T>, Tensor<T>> concat_channels_backward<T>(const Tensor<T>&, \
                                                                         int, int);       \
    template DropoutResult<T> dropout_forward<T>(const Tensor<T>&, double, uint64_t,      \
                                                 bool);                                   \
    template Tensor<T> dropout_backward<T>(const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> flatten<T>(const Tensor<T>&);                                      \
    template Tensor<T> reshape<T>(const Tensor<T>&, std::vector<int>);                    \
    template Tensor<T> softmax<T>(const Tensor<T>&);                                      \
    template CrossEntropyResult<T> cross_entropy<T>(const Tensor<T>&, int);

EDGENET_INSTANTIATE_LAYERS(float)
EDGENET_INSTANTIATE_LAYERS(double)

#undef EDGENET_INSTANTIATE_LAYERS

}  // namespace edgenet
