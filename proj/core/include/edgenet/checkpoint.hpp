#pragma once

#include <stdexcept>
#include <string>

#include "edgenet/model.hpp"

namespace edgenet {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Binary weight container: "ENET" magic, little-endian u32 format version,
/// u32 parameter count, a table of (name, dims, byte offset) entries in graph
/// order, then the raw little-endian float32 payload. Saving a loaded file
/// reproduces it byte for byte.
template <typename T>
void save_checkpoint(const ModelGraph& g, const ModelWeights<T>& w, const std::string& path);

/// Validates magic, version, and that the file's parameter names and shapes
/// match the graph exactly, in order.
template <typename T>
ModelWeights<T> load_checkpoint(const ModelGraph& g, const std::string& path);

}  // namespace edgenet
