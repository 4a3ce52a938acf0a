#include "edgenet/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edgenet/rng.hpp"

namespace edgenet {

namespace {

NodeDesc conv_node(std::string name, int in_ch, int out_ch, int pad, int dilation,
                   std::vector<int> inputs) {
    NodeDesc n;
    n.name = std::move(name);
    n.kind = NodeKind::conv;
    n.inputs = std::move(inputs);
    n.conv.in_channels = in_ch;
    n.conv.out_channels = out_ch;
    n.conv.kernel_h = 3;
    n.conv.kernel_w = 3;
    n.conv.stride = 1;
    n.conv.pad = pad;
    n.conv.dilation = dilation;
    n.relu = true;
    n.dropout = 0.25;
    return n;
}

NodeDesc simple_node(std::string name, NodeKind kind, std::vector<int> inputs) {
    NodeDesc n;
    n.name = std::move(name);
    n.kind = kind;
    n.inputs = std::move(inputs);
    return n;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::edgenet: return "edgenet";
        case Variant::wc: return "wc";
        case Variant::se: return "se";
        case Variant::id: return "id";
        case Variant::log: return "log";
    }
    throw std::logic_error("unreachable variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "edgenet") return Variant::edgenet;
    if (name == "wc") return Variant::wc;
    if (name == "se") return Variant::se;
    if (name == "id") return Variant::id;
    if (name == "log") return Variant::log;
    throw std::invalid_argument("unknown variant '" + name +
                                "' (expected edgenet, wc, se, id, or log)");
}

EdgeMethod variant_edge_method(Variant v) {
    switch (v) {
        case Variant::edgenet: return EdgeMethod::canny;
        case Variant::wc: return EdgeMethod::none;
        case Variant::se: return EdgeMethod::sobel3;
        case Variant::id: return EdgeMethod::canny;
        case Variant::log: return EdgeMethod::log3;
    }
    throw std::logic_error("unreachable variant");
}

bool variant_inverts_input(Variant v) { return v == Variant::id; }

ModelGraph build(Variant v) {
    ModelGraph g;
    g.variant = v;
    if (v == Variant::wc) {
        // No edge branch: the image stem feeds the trunk directly and the
        // final conv sees only the trunk's 32 channels.
        g.nodes.push_back(simple_node("image", NodeKind::image_input, {}));
        g.nodes.push_back(conv_node("iconv", 1, 16, 1, 1, {0}));
        g.nodes.push_back(conv_node("conv1", 16, 32, 1, 1, {1}));
        g.nodes.push_back(conv_node("conv2", 32, 32, 2, 2, {2}));
        g.nodes.push_back(conv_node("conv3", 32, 32, 2, 2, {3}));
        g.nodes.push_back(conv_node("conv4", 32, 32, 1, 1, {4}));
        g.nodes.push_back(simple_node("pool", NodeKind::avgpool, {5}));
        g.nodes.push_back(simple_node("flat", NodeKind::flatten, {6}));
    } else {
        g.nodes.push_back(simple_node("image", NodeKind::image_input, {}));
        g.nodes.push_back(simple_node("edge", NodeKind::edge_input, {}));
        g.nodes.push_back(conv_node("iconv", 1, 16, 1, 1, {0}));
        g.nodes.push_back(conv_node("econv", 1, 16, 1, 1, {1}));
        g.nodes.push_back(simple_node("concat_ie", NodeKind::concat, {2, 3}));
        g.nodes.push_back(conv_node("conv1", 32, 32, 1, 1, {4}));
        g.nodes.push_back(conv_node("conv2", 32, 32, 2, 2, {5}));
        g.nodes.push_back(conv_node("conv3", 32, 32, 2, 2, {6}));
        // The edge connection: eConv's low-level features rejoin the trunk.
        g.nodes.push_back(simple_node("concat_edge", NodeKind::concat, {7, 3}));
        g.nodes.push_back(conv_node("conv4", 48, 32, 1, 1, {8}));
        g.nodes.push_back(simple_node("pool", NodeKind::avgpool, {9}));
        g.nodes.push_back(simple_node("flat", NodeKind::flatten, {10}));
    }
    const int flat_index = static_cast<int>(g.nodes.size()) - 1;

    NodeDesc fc1;
    fc1.name = "fc1";
    fc1.kind = NodeKind::dense;
    fc1.inputs = {flat_index};
    fc1.dense_in = 32 * 14 * 14;
    fc1.dense_out = 128;
    fc1.relu = true;
    fc1.dropout = 0.25;
    g.nodes.push_back(fc1);

    NodeDesc fc2;
    fc2.name = "fc2";
    fc2.kind = NodeKind::dense;
    fc2.inputs = {flat_index + 1};
    fc2.dense_in = 128;
    fc2.dense_out = 10;
    g.nodes.push_back(fc2);

    g.nodes.push_back(simple_node("softmax", NodeKind::softmax, {flat_index + 2}));
    return g;
}

std::vector<std::vector<int>> audit_shapes(const ModelGraph& g) {
    std::vector<std::vector<int>> shapes(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeDesc& n = g.nodes[i];
        for (int in : n.inputs) {
            if (in < 0 || in >= static_cast<int>(i)) {
                throw std::invalid_argument("node '" + n.name +
                                            "' consumes node index " + std::to_string(in) +
                                            " which is not an earlier node");
            }
        }
        auto in_shape = [&](int slot) -> const std::vector<int>& {
            return shapes[static_cast<size_t>(n.inputs[static_cast<size_t>(slot)])];
        };
        switch (n.kind) {
            case NodeKind::image_input:
            case NodeKind::edge_input:
                shapes[i] = {1, g.input_h, g.input_w};
                break;
            case NodeKind::conv: {
                const std::vector<int>& s = in_shape(0);
                if (s.size() != 3 || s[0] != n.conv.in_channels) {
                    throw std::invalid_argument("node '" + n.name + "' expects " +
                                                std::to_string(n.conv.in_channels) +
                                                " channels, input is " + shape_to_string(s));
                }
                shapes[i] = {n.conv.out_channels,
                             conv_out_extent(s[1], n.conv.kernel_h, n.conv.stride, n.conv.pad,
                                             n.conv.dilation),
                             conv_out_extent(s[2], n.conv.kernel_w, n.conv.stride, n.conv.pad,
                                             n.conv.dilation)};
                if (shapes[i][1] <= 0 || shapes[i][2] <= 0) {
                    throw std::invalid_argument("node '" + n.name +
                                                "' output extents are nonpositive");
                }
                break;
            }
            case NodeKind::concat: {
                if (n.inputs.size() != 2) {
                    throw std::invalid_argument("node '" + n.name +
                                                "' must have exactly two inputs");
                }
                const std::vector<int>& a = in_shape(0);
                const std::vector<int>& b = in_shape(1);
                if (a.size() != 3 || b.size() != 3 || a[1] != b[1] || a[2] != b[2]) {
                    throw std::invalid_argument("node '" + n.name +
                                                "' concat extents differ: " +
                                                shape_to_string(a) + " vs " +
                                                shape_to_string(b));
                }
                shapes[i] = {a[0] + b[0], a[1], a[2]};
                break;
            }
            case NodeKind::avgpool: {
                const std::vector<int>& s = in_shape(0);
                if (s.size() != 3 || s[1] % 2 != 0 || s[2] % 2 != 0) {
                    throw std::invalid_argument("node '" + n.name +
                                                "' needs even spatial extents, input is " +
                                                shape_to_string(s));
                }
                shapes[i] = {s[0], s[1] / 2, s[2] / 2};
                break;
            }
            case NodeKind::flatten: {
                const std::vector<int>& s = in_shape(0);
                shapes[i] = {static_cast<int>(shape_numel(s))};
                break;
            }
            case NodeKind::dense: {
                const std::vector<int>& s = in_shape(0);
                if (shape_numel(s) != n.dense_in) {
                    throw std::invalid_argument("node '" + n.name + "' expects " +
                                                std::to_string(n.dense_in) +
                                                " inputs, gets " + shape_to_string(s));
                }
                shapes[i] = {n.dense_out};
                break;
            }
            case NodeKind::softmax:
                shapes[i] = in_shape(0);
                break;
        }
    }
    return shapes;
}

int64_t count_params_standard(const ModelGraph& g) {
    int64_t total = 0;
    for (const NodeDesc& n : g.nodes) {
        if (n.kind == NodeKind::conv) {
            total += (static_cast<int64_t>(n.conv.in_channels) * n.conv.kernel_h *
                          n.conv.kernel_w +
                      1) *
                     n.conv.out_channels;
        } else if (n.kind == NodeKind::dense) {
            total += (static_cast<int64_t>(n.dense_in) + 1) * n.dense_out;
        }
    }
    return total;
}

int64_t count_params_eq1(const ModelGraph& g) {
    const std::vector<std::vector<int>> shapes = audit_shapes(g);
    int64_t total = 0;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeDesc& n = g.nodes[i];
        if (n.kind == NodeKind::conv) {
            // channels_in * kernel² * channels_out * output-extent², no bias.
            const int64_t m = shapes[i][1];
            total += static_cast<int64_t>(n.conv.in_channels) * n.conv.kernel_h *
                     n.conv.kernel_w * n.conv.out_channels * m * m;
        } else if (n.kind == NodeKind::dense) {
            total += (static_cast<int64_t>(n.dense_in) + 1) * n.dense_out;
        }
    }
    return total;
}

std::vector<ParamRef> list_params(const ModelGraph& g) {
    std::vector<ParamRef> refs;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeDesc& n = g.nodes[i];
        if (n.kind == NodeKind::conv || n.kind == NodeKind::dense) {
            refs.push_back({static_cast<int>(i), false, n.name + ".weight"});
            refs.push_back({static_cast<int>(i), true, n.name + ".bias"});
        }
    }
    return refs;
}

template <typename T>
ModelWeights<T> init_weights(const ModelGraph& g, uint64_t seed) {
    ModelWeights<T> w;
    w.weight.resize(g.nodes.size());
    w.bias.resize(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeDesc& n = g.nodes[i];
        int64_t fan_in = 0;
        std::vector<int> wshape, bshape;
        if (n.kind == NodeKind::conv) {
            fan_in = static_cast<int64_t>(n.conv.in_channels) * n.conv.kernel_h * n.conv.kernel_w;
            wshape = {n.conv.out_channels, n.conv.in_channels, n.conv.kernel_h, n.conv.kernel_w};
            bshape = {n.conv.out_channels};
        } else if (n.kind == NodeKind::dense) {
            fan_in = n.dense_in;
            wshape = {n.dense_out, n.dense_in};
            bshape = {n.dense_out};
        } else {
            continue;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));
        Tensor<T> wt(wshape);
        for (int64_t j = 0; j < wt.size(); ++j) {
            wt[j] = static_cast<T>(rng.uniform(-bound, bound));
        }
        w.weight[i] = std::move(wt);
        w.bias[i] = Tensor<T>(bshape);  // zeros
    }
    return w;
}

template <typename T>
Tensor<T> forward(const ModelGraph& g, const ModelWeights<T>& w, const Tensor<T>& image,
                  const Tensor<T>& edge, bool training, uint64_t seed,
                  ForwardContext<T>* ctx) {
    const std::vector<int> want = {1, g.input_h, g.input_w};
    if (image.shape() != want) {
        throw std::invalid_argument("forward: image shape " + shape_to_string(image.shape()) +
                                    " does not match " + shape_to_string(want));
    }
    ForwardContext<T> local;
    ForwardContext<T>& c = ctx ? *ctx : local;
    c.out.assign(g.nodes.size(), Tensor<T>());
    c.pre.assign(g.nodes.size(), Tensor<T>());
    c.mask.assign(g.nodes.size(), Tensor<T>());

    for (size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeDesc& n = g.nodes[i];
        auto input = [&](int slot) -> const Tensor<T>& {
            return c.out[static_cast<size_t>(n.inputs[static_cast<size_t>(slot)])];
        };
        Tensor<T> pre;
        switch (n.kind) {
            case NodeKind::image_input:
                pre = image;
                break;
            case NodeKind::edge_input:
                if (edge.shape() != want) {
                    throw std::invalid_argument("forward: edge shape " +
                                                shape_to_string(edge.shape()) +
                                                " does not match " + shape_to_string(want));
                }
                pre = edge;
                break;
            case NodeKind::conv:
                pre = conv2d_forward(input(0), w.weight[i], w.bias[i], n.conv);
                break;
            case NodeKind::concat:
                pre = concat_channels_forward(input(0), input(1));
                break;
            case NodeKind::avgpool:
                pre = avgpool2d_forward(input(0));
                break;
            case NodeKind::flatten:
                pre = flatten(input(0));
                break;
            case NodeKind::dense:
                pre = dense_forward(input(0), w.weight[i], w.bias[i]);
                break;
            case NodeKind::softmax:
                pre = softmax(input(0));
                break;
        }
        Tensor<T> act = n.relu ? relu_forward(pre) : pre;
        c.pre[i] = std::move(pre);
        if (n.dropout > 0.0 && training) {
            auto dr = dropout_forward(act, n.dropout, mix_seed(seed, static_cast<uint64_t>(i)),
                                      true);
            c.mask[i] = std::move(dr.mask);
            c.out[i] = std::move(dr.y);
        } else {
            c.out[i] = std::move(act);
        }
    }
    return c.out.back();
}

template <typename T>
void GradBundle<T>::add(const GradBundle<T>& other) {
    for (size_t i = 0; i < dweight.size(); ++i) {
        if (dweight[i].empty()) continue;
        T* a = dweight[i].data();
        const T* b = other.dweight[i].data();
        for (int64_t j = 0; j < dweight[i].size(); ++j) a[j] += b[j];
        T* ab = dbias[i].data();
        const T* bb = other.dbias[i].data();
        for (int64_t j = 0; j < dbias[i].size(); ++j) ab[j] += bb[j];
    }
}

template <typename T>
void GradBundle<T>::scale(T factor) {
    for (size_t i = 0; i < dweight.size(); ++i) {
        if (dweight[i].empty()) continue;
        T* a = dweight[i].data();
        for (int64_t j = 0; j < dweight[i].size(); ++j) a[j] *= factor;
        T* b = dbias[i].data();
        for (int64_t j = 0; j < dbias[i].size(); ++j) b[j] *= factor;
    }
}

template <typename T>
GradBundle<T> backward(const ModelGraph& g, const ModelWeights<T>& w,
                       const ForwardContext<T>& ctx, const Tensor<T>& dlogits) {
    GradBundle<T> grads;
    grads.dweight.resize(g.nodes.size());
    grads.dbias.resize(g.nodes.size());

    // Accumulated gradient wrt each node's *output*.
    std::vector<Tensor<T>> dout(g.nodes.size());
    auto accumulate = [&](int node, Tensor<T>&& grad) {
        Tensor<T>& slot = dout[static_cast<size_t>(node)];
        if (slot.empty()) {
            slot = std::move(grad);
            return;
        }
        T* a = slot.data();
        const T* b = grad.data();
        for (int64_t j = 0; j < slot.size(); ++j) a[j] += b[j];
    };

    for (int i = static_cast<int>(g.nodes.size()) - 1; i >= 0; --i) {
        const NodeDesc& n = g.nodes[static_cast<size_t>(i)];
        if (n.kind == NodeKind::softmax) {
            // The caller supplies the combined softmax+loss gradient, which is
            // already wrt this node's input.
            accumulate(n.inputs[0], Tensor<T>(dlogits));
            continue;
        }
        if (dout[static_cast<size_t>(i)].empty()) continue;  // dead branch
        Tensor<T> dy = std::move(dout[static_cast<size_t>(i)]);

        if (n.dropout > 0.0 && !ctx.mask[static_cast<size_t>(i)].empty()) {
            dy = dropout_backward(dy, ctx.mask[static_cast<size_t>(i)]);
        }
        if (n.relu) {
            dy = relu_backward(ctx.pre[static_cast<size_t>(i)], dy);
        }

        switch (n.kind) {
            case NodeKind::image_input:
            case NodeKind::edge_input:
                break;
            case NodeKind::conv: {
                const Tensor<T>& x = ctx.out[static_cast<size_t>(n.inputs[0])];
                ConvGrads<T> cg = conv2d_backward(x, w.weight[static_cast<size_t>(i)], dy,
                                                  n.conv);
                grads.dweight[static_cast<size_t>(i)] = std::move(cg.dw);
                grads.dbias[static_cast<size_t>(i)] = std::move(cg.db);
                accumulate(n.inputs[0], std::move(cg.dx));
                break;
            }
            case NodeKind::concat: {
                const Tensor<T>& a = ctx.out[static_cast<size_t>(n.inputs[0])];
                const Tensor<T>& b = ctx.out[static_cast<size_t>(n.inputs[1])];
                auto parts = concat_channels_backward(dy, a.dim(0), b.dim(0));
                accumulate(n.inputs[0], std::move(parts.first));
                accumulate(n.inputs[1], std::move(parts.second));
                break;
            }
            case NodeKind::avgpool:
                accumulate(n.inputs[0], avgpool2d_backward(dy));
                break;
            case NodeKind::flatten: {
                const Tensor<T>& x = ctx.out[static_cast<size_t>(n.inputs[0])];
                accumulate(n.inputs[0], reshape(dy, x.shape()));
                break;
            }
            case NodeKind::dense: {
                const Tensor<T>& x = ctx.out[static_cast<size_t>(n.inputs[0])];
                DenseGrads<T> dg = dense_backward(x, w.weight[static_cast<size_t>(i)], dy);
                grads.dweight[static_cast<size_t>(i)] = std::move(dg.dw);
                grads.dbias[static_cast<size_t>(i)] = std::move(dg.db);
                accumulate(n.inputs[0], std::move(dg.dx));
                break;
            }
            case NodeKind::softmax:
                break;  // handled above
        }
    }
    return grads;
}

template <typename T>
InputPair<T> make_input_pair(const Image& img, Variant v, const EdgeParams& p) {
    InputPair<T> pair;
    const Image* source = &img;
    Image inverted_img;
    if (variant_inverts_input(v)) {
        inverted_img = invert(img);
        source = &inverted_img;
    }
    std::vector<T> data(source->size());
    for (size_t i = 0; i < source->size(); ++i) data[i] = static_cast<T>(source->pixels[i]);
    pair.image = Tensor<T>({1, source->height, source->width}, std::move(data));

    if (v != Variant::wc) {
        // Edges come from the stored (white-background) image; the id
        // variant's polarity flip does not change gradient magnitudes, so the
        // edge map is the same either way.
        const Image e = extract_edges(img, p);
        std::vector<T> ed(e.size());
        for (size_t i = 0; i < e.size(); ++i) ed[i] = static_cast<T>(e.pixels[i]);
        pair.edge = Tensor<T>({1, e.height, e.width}, std::move(ed));
    }
    return pair;
}

template <typename T>
Prediction predict(const ModelGraph& g, const ModelWeights<T>& w, const Image& img,
                   const EdgeParams& p) {
    InputPair<T> in = make_input_pair<T>(img, g.variant, p);
    const Tensor<T> probs = forward(g, w, in.image, in.edge, false, 0);
    Prediction pred;
    pred.probs.resize(static_cast<size_t>(probs.size()));
    for (int64_t i = 0; i < probs.size(); ++i) pred.probs[static_cast<size_t>(i)] = probs[i];
    pred.label = 0;
    for (size_t i = 1; i < pred.probs.size(); ++i) {
        if (pred.probs[i] > pred.probs[static_cast<size_t>(pred.label)]) {
            pred.label = static_cast<int>(i);
        }
    }
    return pred;
}

#define EDGENET_INSTANTIATE_MODEL(T)                                                        \
    template ModelWeights<T> init_weights<T>(const ModelGraph&, uint64_t);                  \
    template Tensor<T> forward<T>(const ModelGraph&, const ModelWeights<T>&,               \
                                  const Tensor<T>&, const Tensor<T>&, bool, uint64_t,      \
                                  ForwardContext<T>*);                                     \
    template struct GradBundle<T>;                                                         \
    template GradBundle<T> backward<T>(const ModelGraph&, const ModelWeights<T>&,          \
                                       const ForwardContext<T>&, const Tensor<T>&);        \
    template InputPair<T> make_input_pair<T>(const Image&, Variant, const EdgeParams&);    \
    template Prediction predict<T>(const ModelGraph&, const ModelWeights<T>&,              \
                                   const Image&, const EdgeParams&);

EDGENET_INSTANTIATE_MODEL(float)
EDGENET_INSTANTIATE_MODEL(double)

#undef EDGENET_INSTANTIATE_MODEL

}  // namespace edgenet
