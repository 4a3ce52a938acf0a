#include "edgenet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "edgenet/layers.hpp"

namespace edgenet {

namespace {

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

template <typename T>
Metrics evaluate(const ModelGraph& g, const ModelWeights<T>& w,
                 const std::vector<Sample>& split, const EdgeParams& edge_params,
                 int threads) {
    if (split.empty()) throw std::invalid_argument("evaluate: split is empty");
    threads = std::max(1, threads);

    Metrics m;
    m.samples = static_cast<int64_t>(split.size());

    struct SlotResult {
        int predicted = 0;
        int label = 0;
        double loss = 0.0;
    };
    std::vector<SlotResult> slots(static_cast<size_t>(threads));

    auto compute = [&](int slot, int i) {
        const Sample& s = split[static_cast<size_t>(i)];
        InputPair<T> in = make_input_pair<T>(s.image, g.variant, edge_params);
        const Tensor<T> probs = forward(g, w, in.image, in.edge, false, 0);
        int arg = 0;
        for (int64_t k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[arg]) arg = static_cast<int>(k);
        }
        slots[static_cast<size_t>(slot)] = {
            arg, static_cast<int>(s.label),
            static_cast<double>(cross_entropy(probs, s.label).loss)};
    };
    auto merge = [&](int slot, int) {
        const SlotResult& r = slots[static_cast<size_t>(slot)];
        m.confusion[static_cast<size_t>(r.label)][static_cast<size_t>(r.predicted)] += 1;
        m.loss += r.loss;
    };

    const int n = static_cast<int>(split.size());
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            compute(0, i);
            merge(0, i);
        }
    } else {
        for (int wave = 0; wave < n; wave += threads) {
            const int count = std::min(threads, n - wave);
            std::vector<std::thread> workers;
            for (int slot = 1; slot < count; ++slot) {
                workers.emplace_back([&, slot] { compute(slot, wave + slot); });
            }
            compute(0, wave);
            for (std::thread& t : workers) t.join();
            for (int slot = 0; slot < count; ++slot) merge(slot, wave + slot);
        }
    }

    int64_t diag = 0;
    for (int i = 0; i < 10; ++i) diag += m.confusion[static_cast<size_t>(i)][static_cast<size_t>(i)];
    m.accuracy = static_cast<double>(diag) / static_cast<double>(m.samples);
    m.loss /= static_cast<double>(m.samples);
    return m;
}

template Metrics evaluate<float>(const ModelGraph&, const ModelWeights<float>&,
                                 const std::vector<Sample>&, const EdgeParams&, int);
template Metrics evaluate<double>(const ModelGraph&, const ModelWeights<double>&,
                                  const std::vector<Sample>&, const EdgeParams&, int);

std::vector<ConfusionEntry> top_confusions(const Metrics& m, int n) {
    if (n < 1) throw std::invalid_argument("top_confusions: n must be >= 1");
    std::vector<ConfusionEntry> entries;
    for (int t = 0; t < 10; ++t) {
        for (int p = 0; p < 10; ++p) {
            if (t == p) continue;
            const int64_t c = m.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)];
            if (c > 0) entries.push_back({t, p, c});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const ConfusionEntry& a, const ConfusionEntry& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.true_label != b.true_label) return a.true_label < b.true_label;
        return a.predicted < b.predicted;
    });
    if (static_cast<int>(entries.size()) > n) entries.resize(static_cast<size_t>(n));
    return entries;
}

std::string confusion_csv(const Metrics& m) {
    std::string out;
    for (int c = 0; c < 10; ++c) {
        out += ",";
        out += std::to_string(c);
    }
    out += "\n";
    for (int t = 0; t < 10; ++t) {
        out += std::to_string(t);
        for (int p = 0; p < 10; ++p) {
            out += ",";
            out += std::to_string(m.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)]);
        }
        out += "\n";
    }
    return out;
}

std::string metrics_summary(const Metrics& m) {
    std::string out;
    out += "accuracy=" + format_g9(m.accuracy) + "\n";
    out += "loss=" + format_g9(m.loss) + "\n";
    out += "samples=" + std::to_string(m.samples) + "\n";
    return out;
}

}  // namespace edgenet
