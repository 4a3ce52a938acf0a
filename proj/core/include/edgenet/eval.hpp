#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/image.hpp"
#include "edgenet/model.hpp"

namespace edgenet {

struct Metrics {
    double accuracy = 0.0;
    double loss = 0.0;  // mean cross-entropy
    std::array<std::array<int64_t, 10>, 10> confusion{};  // [true][predicted]
    int64_t samples = 0;
};

/// Evaluation-mode forward over the split (dropout off); rows of the
/// confusion matrix are true classes. Deterministic for any thread count.
template <typename T>
Metrics evaluate(const ModelGraph& g, const ModelWeights<T>& w,
                 const std::vector<Sample>& split, const EdgeParams& edge_params,
                 int threads = 1);

struct ConfusionEntry {
    int true_label = 0;
    int predicted = 0;
    int64_t count = 0;
};

/// Off-diagonal confusion cells, largest first; equal counts order by
/// (true, predicted) ascending. At most n entries, zero-count cells omitted.
std::vector<ConfusionEntry> top_confusions(const Metrics& m, int n);

/// 11x11 CSV: header row and column carry the class labels, the top-left
/// cell is empty.
std::string confusion_csv(const Metrics& m);

/// Line-oriented key=value summary (accuracy, loss, samples).
std::string metrics_summary(const Metrics& m);

}  // namespace edgenet
