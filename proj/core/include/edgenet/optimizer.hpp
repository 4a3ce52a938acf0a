#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/dataset.hpp"
#include "edgenet/model.hpp"
#include "edgenet/tensor.hpp"

namespace edgenet {

/// Seed used when the caller does not supply one; fixed (not wall-clock) so
/// unseeded runs are still reproducible.
inline constexpr uint64_t kDefaultSeed = 1729;

struct AdadeltaConfig {
    double rho = 0.95;
    double epsilon = 1e-6;
    double lr = 1.0;
};

/// One accumulator-decayed update:
///   Eg = rho*Eg + (1-rho)*g^2
///   dx = -(sqrt(Ex + eps) / sqrt(Eg + eps)) * g
///   Ex = rho*Ex + (1-rho)*dx^2
///   param += lr * dx
/// A non-finite gradient aborts, naming the parameter.
template <typename T>
void adadelta_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& acc_grad_sq,
                   Tensor<T>& acc_update_sq, const AdadeltaConfig& cfg,
                   const std::string& param_name);

enum class Precision { f32, f64 };

Precision precision_from_name(const std::string& name);
std::string precision_name(Precision p);

struct TrainConfig {
    int batch_size = 128;
    int epochs = 100;
    double lr = 1.0;
    double rho = 0.95;
    double epsilon = 1e-6;
    uint64_t master_seed = kDefaultSeed;
    Precision precision = Precision::f32;
    int threads = 1;
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    ModelWeights<float> best_weights;
    int best_epoch = 0;
    double best_val_accuracy = 0.0;
    std::vector<EpochMetrics> history;
};

/// Trains from a fresh fan-in-scaled initialization: shuffled mini-batches
/// (shuffle reseeded per epoch from master_seed), mean loss per batch, the
/// final partial batch included, validation accuracy after every epoch, and
/// the earliest snapshot with the highest validation accuracy retained.
/// Entirely deterministic given config + data, for any thread count: worker
/// results are folded in sample order.
TrainResult train_model(const ModelGraph& g, const std::vector<Sample>& train_split,
                        const std::vector<Sample>& val_split, const EdgeParams& edge_params,
                        const TrainConfig& cfg);

}  // namespace edgenet
