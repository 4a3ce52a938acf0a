#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/image.hpp"
#include "edgenet/layers.hpp"
#include "edgenet/tensor.hpp"
#include "edgenet/vision.hpp"

namespace edgenet {

/// Network variants: the full edge-connected model, the ablation without any
/// edge branch (wc), Sobel edges (se), inverted input polarity (id), and
/// Laplacian-of-Gaussian edges (log).
enum class Variant { edgenet, wc, se, id, log };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
EdgeMethod variant_edge_method(Variant v);
bool variant_inverts_input(Variant v);

enum class NodeKind { image_input, edge_input, conv, concat, avgpool, flatten, dense, softmax };

struct NodeDesc {
    std::string name;
    NodeKind kind = NodeKind::conv;
    std::vector<int> inputs;  // indices of producer nodes, in concat order
    ConvSpec conv;            // conv nodes only
    int dense_in = 0;         // dense nodes only
    int dense_out = 0;
    bool relu = false;
    double dropout = 0.0;
};

/// Topologically ordered layer graph. The structure is data, not code, so
/// variants and test toys are all driven through one executor.
struct ModelGraph {
    Variant variant = Variant::edgenet;
    int input_h = 28;
    int input_w = 28;
    std::vector<NodeDesc> nodes;
};

ModelGraph build(Variant v);

/// Output shape per node, with every wiring precondition checked (concat
/// extents match, dense widths match, pooling extents even, indices forward-
/// referencing only).
std::vector<std::vector<int>> audit_shapes(const ModelGraph& g);

/// Weight count as conventionally reported: (fan_in + 1) * fan_out per conv
/// (bias included) and (in + 1) * out per dense layer.
int64_t count_params_standard(const ModelGraph& g);

/// Connection-product count: channels_in * kernel^2 * channels_out * output
/// extent squared per conv (no bias term) plus (in + 1) * out per dense
/// layer. Kept alongside the standard count because the two disagree for any
/// convolutional graph.
int64_t count_params_eq1(const ModelGraph& g);

template <typename T>
struct ModelWeights {
    std::vector<Tensor<T>> weight;  // parallel to g.nodes; empty if none
    std::vector<Tensor<T>> bias;

    template <typename U>
    ModelWeights<U> cast() const {
        ModelWeights<U> out;
        out.weight.reserve(weight.size());
        out.bias.reserve(bias.size());
        for (const auto& t : weight) {
            out.weight.push_back(t.empty() ? Tensor<U>() : t.template cast<U>());
        }
        for (const auto& t : bias) {
            out.bias.push_back(t.empty() ? Tensor<U>() : t.template cast<U>());
        }
        return out;
    }
};

/// One entry per parameter tensor, in graph order; the names key checkpoints.
struct ParamRef {
    int node = 0;
    bool is_bias = false;
    std::string name;  // "<node>.weight" or "<node>.bias"
};

std::vector<ParamRef> list_params(const ModelGraph& g);

/// Fan-in-scaled uniform init, bound sqrt(6/fan_in); biases zero. Every
/// weight tensor draws from its own seed stream so the values do not depend
/// on other nodes' sizes.
template <typename T>
ModelWeights<T> init_weights(const ModelGraph& g, uint64_t seed);

/// Per-node forward state kept for the backward pass.
template <typename T>
struct ForwardContext {
    std::vector<Tensor<T>> out;   // post-activation, post-dropout
    std::vector<Tensor<T>> pre;   // pre-activation (conv/dense output + bias)
    std::vector<Tensor<T>> mask;  // dropout masks (empty when unused)
};

/// Runs the graph. `edge` may be an empty tensor when the graph has no edge
/// input. In training mode dropout masks derive from (seed, node index).
/// Returns the softmax output (class probabilities).
template <typename T>
Tensor<T> forward(const ModelGraph& g, const ModelWeights<T>& w, const Tensor<T>& image,
                  const Tensor<T>& edge, bool training, uint64_t seed,
                  ForwardContext<T>* ctx = nullptr);

template <typename T>
struct GradBundle {
    std::vector<Tensor<T>> dweight;  // parallel to g.nodes; empty if none
    std::vector<Tensor<T>> dbias;

    void add(const GradBundle& other);
    void scale(T factor);
};

/// dlogits is the loss gradient wrt the tensor feeding the softmax node (the
/// combined softmax + cross-entropy gradient, probs - onehot).
template <typename T>
GradBundle<T> backward(const ModelGraph& g, const ModelWeights<T>& w,
                       const ForwardContext<T>& ctx, const Tensor<T>& dlogits);

/// Image/edge tensors ready to feed forward(): polarity inverted for the id
/// variant, edge map extracted per `p` (skipped entirely for wc).
template <typename T>
struct InputPair {
    Tensor<T> image;
    Tensor<T> edge;
};

template <typename T>
InputPair<T> make_input_pair(const Image& img, Variant v, const EdgeParams& p);

struct Prediction {
    int label = 0;
    std::vector<double> probs;
};

/// Evaluation-mode forward + argmax; ties break toward the smaller label.
template <typename T>
Prediction predict(const ModelGraph& g, const ModelWeights<T>& w, const Image& img,
                   const EdgeParams& p);

}  // namespace edgenet
