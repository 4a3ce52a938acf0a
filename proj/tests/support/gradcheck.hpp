#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "edgenet/rng.hpp"
#include "edgenet/tensor.hpp"

// Finite-difference gradient oracle. Lives in test code on purpose: it knows
// nothing about how the library computes gradients, only how to perturb
// inputs and difference a scalar loss.
namespace testsupport {

inline edgenet::Tensor<double> random_tensor(std::vector<int> shape, edgenet::Rng& rng,
                                             double lo = -1.0, double hi = 1.0) {
    edgenet::Tensor<double> t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Central finite differences of scalar-valued f around x, compared against
// the analytic gradient: returns the worst relative error, where
// rel = |a - fd| / max(|a|, |fd|, 1e-6).
inline double max_rel_error(const edgenet::Tensor<double>& analytic,
                            edgenet::Tensor<double> x,
                            const std::function<double(const edgenet::Tensor<double>&)>& f,
                            double step = 1e-5) {
    double worst = 0.0;
    for (int64_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x);
        x[i] = orig - step;
        const double down = f(x);
        x[i] = orig;
        const double fd = (up - down) / (2.0 * step);
        const double a = analytic[i];
        const double rel =
            std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
    }
    return worst;
}

// A generic scalar loss for gradient checks: weighted sum of the op output,
// with fixed pseudo-random weights so every output element influences the
// loss differently.
inline std::vector<double> loss_weights(int64_t n, uint64_t seed) {
    edgenet::Rng rng(seed);
    std::vector<double> w(static_cast<size_t>(n));
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    return w;
}

template <typename T>
double weighted_sum(const edgenet::Tensor<T>& t, const std::vector<double>& w) {
    double acc = 0.0;
    for (int64_t i = 0; i < t.size(); ++i) acc += w[static_cast<size_t>(i)] * t[i];
    return acc;
}

// The gradient of weighted_sum wrt the op output, as a tensor the backward
// pass can consume.
inline edgenet::Tensor<double> weights_as_grad(const std::vector<int>& shape,
                                               const std::vector<double>& w) {
    edgenet::Tensor<double> g(shape);
    for (int64_t i = 0; i < g.size(); ++i) g[i] = w[static_cast<size_t>(i)];
    return g;
}

}  // namespace testsupport
