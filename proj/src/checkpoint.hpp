#pragma once

#include <string>
#include <utility>

#include "model.hpp"

namespace stcae {

// Binary checkpoint: magic "STCAE1", variant name, record count, then one
// record per parameterized layer (layer index, tensors as shape list +
// little-endian float32 data). Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ModelSpec& spec, const ModelParams& params);

// Rebuilds the spec from the stored variant name and validates every record
// against it; mismatches raise ErrorKind::checkpoint.
std::pair<ModelSpec, ModelParams> load_checkpoint(const std::string& path);

}  // namespace stcae
