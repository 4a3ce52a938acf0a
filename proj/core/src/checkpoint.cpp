#include "edgenet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace edgenet {

namespace {

constexpr char kMagic[4] = {'E', 'N', 'E', 'T'};
constexpr uint32_t kVersion = 1;

// The format is explicitly little-endian; these helpers keep it so even on a
// big-endian host.
void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > b.size()) {
            throw CheckpointError("'" + path + "' truncated at byte " + std::to_string(pos));
        }
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b.data() + pos), n);
        pos += n;
        return s;
    }
};

const Tensor<float>* param_tensor(const ModelWeights<float>& w, const ParamRef& r) {
    return r.is_bias ? &w.bias[static_cast<size_t>(r.node)]
                     : &w.weight[static_cast<size_t>(r.node)];
}

void save_checkpoint_f32(const ModelGraph& g, const ModelWeights<float>& w,
                         const std::string& path) {
    const std::vector<ParamRef> refs = list_params(g);

    std::string table;
    std::string payload;
    uint64_t offset = 0;
    for (const ParamRef& r : refs) {
        const Tensor<float>* t = param_tensor(w, r);
        if (t->empty()) {
            throw CheckpointError("parameter '" + r.name + "' has no values to save");
        }
        put_u32(table, static_cast<uint32_t>(r.name.size()));
        table += r.name;
        put_u32(table, static_cast<uint32_t>(t->shape().size()));
        for (int d : t->shape()) put_u32(table, static_cast<uint32_t>(d));
        put_u64(table, offset);
        for (int64_t i = 0; i < t->size(); ++i) put_f32(payload, (*t)[i]);
        offset += static_cast<uint64_t>(t->size()) * 4;
    }

    std::string head;
    head.append(kMagic, 4);
    put_u32(head, kVersion);
    put_u32(head, static_cast<uint32_t>(refs.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write '" + path + "'");
    out << head << table << payload;
    if (!out) throw CheckpointError("short write on '" + path + "'");
}

ModelWeights<float> load_checkpoint_f32(const ModelGraph& g, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    Reader r{bytes, 0, path};

    const std::string magic = r.str(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
    }
    const uint32_t version = r.u32();
    if (version != kVersion) {
        throw CheckpointError("'" + path + "' has format version " + std::to_string(version) +
                              ", this build reads version " + std::to_string(kVersion));
    }
    const std::vector<ParamRef> refs = list_params(g);
    const uint32_t count = r.u32();
    if (count != refs.size()) {
        throw CheckpointError("'" + path + "' holds " + std::to_string(count) +
                              " parameters, graph '" + variant_name(g.variant) + "' has " +
                              std::to_string(refs.size()));
    }

    struct Entry {
        std::vector<int> shape;
        uint64_t offset;
    };
    std::vector<Entry> entries(refs.size());
    for (size_t i = 0; i < refs.size(); ++i) {
        const uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        if (name != refs[i].name) {
            throw CheckpointError("'" + path + "' parameter " + std::to_string(i) + " is '" +
                                  name + "', graph expects '" + refs[i].name + "'");
        }
        const uint32_t ndim = r.u32();
        entries[i].shape.resize(ndim);
        for (uint32_t d = 0; d < ndim; ++d) {
            entries[i].shape[d] = static_cast<int>(r.u32());
        }
        entries[i].offset = r.u64();
    }

    const size_t payload_start = r.pos;
    ModelWeights<float> w;
    w.weight.resize(g.nodes.size());
    w.bias.resize(g.nodes.size());
    for (size_t i = 0; i < refs.size(); ++i) {
        Tensor<float> t(entries[i].shape);
        const size_t begin = payload_start + entries[i].offset;
        if (begin + static_cast<size_t>(t.size()) * 4 > bytes.size()) {
            throw CheckpointError("'" + path + "' payload truncated for '" + refs[i].name +
                                  "'");
        }
        for (int64_t j = 0; j < t.size(); ++j) {
            uint32_t bits = 0;
            for (int k = 0; k < 4; ++k) {
                bits |= static_cast<uint32_t>(bytes[begin + static_cast<size_t>(j) * 4 +
                                                    static_cast<size_t>(k)])
                        << (8 * k);
            }
            float v;
            std::memcpy(&v, &bits, 4);
            t[j] = v;
        }
        if (refs[i].is_bias) {
            w.bias[static_cast<size_t>(refs[i].node)] = std::move(t);
        } else {
            w.weight[static_cast<size_t>(refs[i].node)] = std::move(t);
        }
    }

    // Shapes must match what the graph would allocate.
    const ModelWeights<float> probe = init_weights<float>(g, 0);
    for (const ParamRef& ref : refs) {
        const Tensor<float>* have = param_tensor(w, ref);
        const Tensor<float>* want = param_tensor(probe, ref);
        if (have->shape() != want->shape()) {
            throw CheckpointError("'" + path + "' parameter '" + ref.name + "' has shape " +
                                  shape_to_string(have->shape()) + ", graph expects " +
                                  shape_to_string(want->shape()));
        }
    }
    return w;
}

}  // namespace

template <typename T>
void save_checkpoint(const ModelGraph& g, const ModelWeights<T>& w, const std::string& path) {
    if constexpr (std::is_same_v<T, float>) {
        save_checkpoint_f32(g, w, path);
    } else {
        save_checkpoint_f32(g, w.template cast<float>(), path);
    }
}

template <typename T>
ModelWeights<T> load_checkpoint(const ModelGraph& g, const std::string& path) {
    ModelWeights<float> w = load_checkpoint_f32(g, path);
    if constexpr (std::is_same_v<T, float>) {
        return w;
    } else {
        return w.template cast<T>();
    }
}

template void save_checkpoint<float>(const ModelGraph&, const ModelWeights<float>&,
                                     const std::string&);
template void save_checkpoint<double>(const ModelGraph&, const ModelWeights<double>&,
                                      const std::string&);
template ModelWeights<float> load_checkpoint<float>(const ModelGraph&, const std::string&);
template ModelWeights<double> load_checkpoint<double>(const ModelGraph&, const std::string&);

}  // namespace edgenet
