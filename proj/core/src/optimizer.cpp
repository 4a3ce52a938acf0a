#include "edgenet/optimizer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "edgenet/rng.hpp"

namespace edgenet {

namespace {

// Independent seed streams per consumer, so e.g. adding an epoch never shifts
// which dropout mask a given sample sees.
constexpr uint64_t kStreamInit = 0x11A7;
constexpr uint64_t kStreamShuffle = 0x5AFE;
constexpr uint64_t kStreamDropout = 0xD80F;

template <typename T>
struct SampleTensors {
    Tensor<T> image;
    Tensor<T> edge;
    uint8_t label = 0;
};

template <typename T>
std::vector<SampleTensors<T>> precompute_inputs(const ModelGraph& g,
                                                const std::vector<Sample>& split,
                                                const EdgeParams& ep) {
    std::vector<SampleTensors<T>> out;
    out.reserve(split.size());
    for (const Sample& s : split) {
        InputPair<T> p = make_input_pair<T>(s.image, g.variant, ep);
        out.push_back({std::move(p.image), std::move(p.edge), s.label});
    }
    return out;
}

// Runs fn(slot, index) for index in [begin, end), at most `threads` at a
// time, then merge(slot, index) strictly in index order. With threads == 1
// this degenerates to a plain loop; with more, results are identical because
// merging never depends on completion order.
template <typename Compute, typename Merge>
void run_waves(int begin, int end, int threads, Compute&& compute, Merge&& merge) {
    if (threads <= 1) {
        for (int i = begin; i < end; ++i) {
            compute(0, i);
            merge(0, i);
        }
        return;
    }
    for (int wave = begin; wave < end; wave += threads) {
        const int count = std::min(threads, end - wave);
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(count) - 1);
        for (int slot = 1; slot < count; ++slot) {
            workers.emplace_back([&, slot] { compute(slot, wave + slot); });
        }
        compute(0, wave);
        for (std::thread& t : workers) t.join();
        for (int slot = 0; slot < count; ++slot) merge(slot, wave + slot);
    }
}

template <typename T>
double validation_accuracy(const ModelGraph& g, const ModelWeights<T>& w,
                           const std::vector<SampleTensors<T>>& val, int threads) {
    std::vector<int> slot_correct(static_cast<size_t>(std::max(threads, 1)), 0);
    int64_t correct = 0;
    run_waves(
        0, static_cast<int>(val.size()), threads,
        [&](int slot, int i) {
            const SampleTensors<T>& s = val[static_cast<size_t>(i)];
            const Tensor<T> probs = forward(g, w, s.image, s.edge, false, 0);
            int arg = 0;
            for (int64_t k = 1; k < probs.size(); ++k) {
                if (probs[k] > probs[arg]) arg = static_cast<int>(k);
            }
            slot_correct[static_cast<size_t>(slot)] = (arg == s.label) ? 1 : 0;
        },
        [&](int slot, int) { correct += slot_correct[static_cast<size_t>(slot)]; });
    return static_cast<double>(correct) / static_cast<double>(val.size());
}

template <typename T>
TrainResult train_impl(const ModelGraph& g, const std::vector<Sample>& train_split,
                       const std::vector<Sample>& val_split, const EdgeParams& ep,
                       const TrainConfig& cfg) {
    const std::vector<ParamRef> params = list_params(g);
    audit_shapes(g);

    std::vector<SampleTensors<T>> train = precompute_inputs<T>(g, train_split, ep);
    std::vector<SampleTensors<T>> val = precompute_inputs<T>(g, val_split, ep);

    ModelWeights<T> w = init_weights<T>(g, mix_seed(cfg.master_seed, kStreamInit));

    AdadeltaConfig ad{cfg.rho, cfg.epsilon, cfg.lr};
    ModelWeights<T> acc_g, acc_x;  // Adadelta accumulators, zero-initialized
    acc_g.weight.resize(g.nodes.size());
    acc_g.bias.resize(g.nodes.size());
    acc_x.weight.resize(g.nodes.size());
    acc_x.bias.resize(g.nodes.size());
    for (const ParamRef& p : params) {
        const size_t n = static_cast<size_t>(p.node);
        if (p.is_bias) {
            acc_g.bias[n] = Tensor<T>(w.bias[n].shape());
            acc_x.bias[n] = Tensor<T>(w.bias[n].shape());
        } else {
            acc_g.weight[n] = Tensor<T>(w.weight[n].shape());
            acc_x.weight[n] = Tensor<T>(w.weight[n].shape());
        }
    }

    const int threads = std::max(1, cfg.threads);
    std::vector<ForwardContext<T>> ctx(static_cast<size_t>(threads));
    std::vector<GradBundle<T>> slot_grads(static_cast<size_t>(threads));
    std::vector<double> slot_loss(static_cast<size_t>(threads), 0.0);

    TrainResult result;
    result.best_val_accuracy = -1.0;
    ModelWeights<T> best;

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        seeded_shuffle(order, mix_seed(cfg.master_seed, kStreamShuffle,
                                       static_cast<uint64_t>(epoch)));
        double epoch_loss = 0.0;
        const int n = static_cast<int>(train.size());
        int batch_index = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const int stop = std::min(n, start + cfg.batch_size);
            GradBundle<T> batch_grads;
            batch_grads.dweight.assign(g.nodes.size(), Tensor<T>());
            batch_grads.dbias.assign(g.nodes.size(), Tensor<T>());
            for (const ParamRef& p : params) {
                const size_t k = static_cast<size_t>(p.node);
                if (p.is_bias) {
                    batch_grads.dbias[k] = Tensor<T>(w.bias[k].shape());
                } else {
                    batch_grads.dweight[k] = Tensor<T>(w.weight[k].shape());
                }
            }
            double batch_loss = 0.0;

            run_waves(
                start, stop, threads,
                [&](int slot, int i) {
                    const SampleTensors<T>& s =
                        train[static_cast<size_t>(order[static_cast<size_t>(i)])];
                    const uint64_t fwd_seed =
                        mix_seed(cfg.master_seed, kStreamDropout,
                                 static_cast<uint64_t>(epoch), static_cast<uint64_t>(i));
                    const Tensor<T> probs = forward(g, w, s.image, s.edge, true, fwd_seed,
                                                    &ctx[static_cast<size_t>(slot)]);
                    CrossEntropyResult<T> ce = cross_entropy(probs, s.label);
                    slot_loss[static_cast<size_t>(slot)] = static_cast<double>(ce.loss);
                    slot_grads[static_cast<size_t>(slot)] =
                        backward(g, w, ctx[static_cast<size_t>(slot)], ce.dlogits);
                },
                [&](int slot, int) {
                    batch_grads.add(slot_grads[static_cast<size_t>(slot)]);
                    batch_loss += slot_loss[static_cast<size_t>(slot)];
                });

            const int batch_count = stop - start;
            batch_loss /= batch_count;
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index));
            }
            epoch_loss += batch_loss * batch_count;

            batch_grads.scale(T(1) / static_cast<T>(batch_count));
            for (const ParamRef& p : params) {
                const size_t k = static_cast<size_t>(p.node);
                if (p.is_bias) {
                    adadelta_step(w.bias[k], batch_grads.dbias[k], acc_g.bias[k],
                                  acc_x.bias[k], ad, p.name);
                } else {
                    adadelta_step(w.weight[k], batch_grads.dweight[k], acc_g.weight[k],
                                  acc_x.weight[k], ad, p.name);
                }
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / static_cast<double>(train.size());
        m.val_accuracy = validation_accuracy(g, w, val, threads);
        result.history.push_back(m);

        if (m.val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = m.val_accuracy;
            result.best_epoch = epoch;
            best = w;
        }
    }

    result.best_weights = best.template cast<float>();
    return result;
}

}  // namespace

template <typename T>
void adadelta_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& acc_grad_sq,
                   Tensor<T>& acc_update_sq, const AdadeltaConfig& cfg,
                   const std::string& param_name) {
    if (!param.same_shape(grad) || !param.same_shape(acc_grad_sq) ||
        !param.same_shape(acc_update_sq)) {
        throw std::invalid_argument("adadelta_step: shape mismatch for parameter '" +
                                    param_name + "'");
    }
    const T rho = static_cast<T>(cfg.rho);
    const T one_minus_rho = static_cast<T>(1.0 - cfg.rho);
    const T eps = static_cast<T>(cfg.epsilon);
    const T lr = static_cast<T>(cfg.lr);
    T* p = param.data();
    const T* gr = grad.data();
    T* eg = acc_grad_sq.data();
    T* ex = acc_update_sq.data();
    for (int64_t i = 0; i < param.size(); ++i) {
        const T gi = gr[i];
        if (!std::isfinite(static_cast<double>(gi))) {
            throw std::runtime_error("non-finite gradient in parameter '" + param_name +
                                     "' at element " + std::to_string(i));
        }
        eg[i] = rho * eg[i] + one_minus_rho * gi * gi;
        const T dx = -(std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps)) * gi;
        ex[i] = rho * ex[i] + one_minus_rho * dx * dx;
        p[i] += lr * dx;
    }
}

template void adadelta_step<float>(Tensor<float>&, const Tensor<float>&, Tensor<float>&,
                                   Tensor<float>&, const AdadeltaConfig&, const std::string&);
template void adadelta_step<double>(Tensor<double>&, const Tensor<double>&, Tensor<double>&,
                                    Tensor<double>&, const AdadeltaConfig&,
                                    const std::string&);

Precision precision_from_name(const std::string& name) {
    if (name == "f32" || name == "float" || name == "single") return Precision::f32;
    if (name == "f64" || name == "double") return Precision::f64;
    throw std::invalid_argument("unknown precision '" + name + "' (expected f32 or f64)");
}

std::string precision_name(Precision p) {
    return p == Precision::f32 ? "f32" : "f64";
}

TrainResult train_model(const ModelGraph& g, const std::vector<Sample>& train_split,
                        const std::vector<Sample>& val_split, const EdgeParams& edge_params,
                        const TrainConfig& cfg) {
    if (train_split.empty()) throw std::invalid_argument("train: training split is empty");
    if (val_split.empty()) throw std::invalid_argument("train: validation split is empty");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.precision == Precision::f64) {
        return train_impl<double>(g, train_split, val_split, edge_params, cfg);
    }
    return train_impl<float>(g, train_split, val_split, edge_params, cfg);
}

}  // namespace edgenet
