#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "edgenet/tensor.hpp"

namespace edgenet {

/// Convolution hyperparameters. Weights live separately (see ModelWeights) so
/// the same descriptor can be reused across precisions.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    int pad = 1;
    int dilation = 1;
};

inline int conv_out_extent(int in, int kernel, int stride, int pad, int dilation) {
    return (in + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
}

template <typename T>
struct ConvGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    Tensor<T> db;
};

template <typename T>
struct DenseGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    Tensor<T> db;
};

template <typename T>
struct DropoutResult {
    Tensor<T> y;
    Tensor<T> mask;  // 0 where dropped, 1/(1-rate) where kept
};

template <typename T>
struct CrossEntropyResult {
    T loss;
    Tensor<T> dlogits;  // gradient of loss wrt the softmax *logits*
};

// ---- convolution -----------------------------------------------------------
// x: [IC,H,W]; w: [OC,IC,KH,KW]; b: [OC]; returns [OC,H',W'] with
// H' = (H + 2*pad - dilation*(KH-1) - 1)/stride + 1. Zero padding.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const ConvSpec& spec);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& grad_out, const ConvSpec& spec);

// ---- elementwise / shape ops -----------------------------------------------
template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

// Needs the forward *input* to know which units were active.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

// Non-overlapping 2x2 windows, stride 2. Odd spatial extents are rejected.
template <typename T>
Tensor<T> avgpool2d_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> avgpool2d_backward(const Tensor<T>& grad_out);

// x: [IN]; w: [OUT,IN]; b: [OUT] -> [OUT]
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& grad_out);

// Stacks along the channel axis, first argument first.
template <typename T>
Tensor<T> concat_channels_forward(const Tensor<T>& a, const Tensor<T>& b);

// Splits grad_out back into the two branches ([ca,...] then [cb,...]).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_channels_backward(const Tensor<T>& grad_out,
                                                         int ca, int cb);

// Inverted dropout: at training, each unit survives with probability 1-rate
// and is scaled by 1/(1-rate); at evaluation the op is the exact identity.
// The mask is returned so backward reuses the identical decisions.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, uint64_t seed,
                                 bool training);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask);

template <typename T>
Tensor<T> flatten(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> shape);

// ---- classification head ----------------------------------------------------
// Max-subtracted for stability; outputs sum to 1.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// probs must be a softmax output; label in [0, K). The returned gradient is
// wrt the logits that produced probs (the combined softmax+CE Jacobian),
// i.e. probs - onehot(label).
template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& probs, int label);

}  // namespace edgenet
