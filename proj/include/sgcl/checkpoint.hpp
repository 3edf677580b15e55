#pragma once

#include <cstdint>
#include <string>

#include "sgcl/optim.hpp"

namespace sgcl {

// Checkpoint file: text header listing tensors (name, shape, byte offset into
// the payload) followed by a little-endian 32-bit float payload. Round trips
// are bit-exact. Optimizer moments are stored as "<param>.adam_m/.adam_v"
// entries when included.
struct CheckpointMeta {
    uint64_t config_hash = 0;
    int64_t step = 0;
    bool has_optimizer_state = false;
};

void save_checkpoint(const std::string& path, const ad::ParamStore& params,
                     const ad::AdamW* opt, uint64_t config_hash);

// Parameters must already be registered with matching names/shapes; values
// are filled in. `opt` may be null to skip stored optimizer state.
CheckpointMeta load_checkpoint(const std::string& path, ad::ParamStore& params,
                               ad::AdamW* opt);

// Header-only peek (for compatibility checks before building a model).
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace sgcl
