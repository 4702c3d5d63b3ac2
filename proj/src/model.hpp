#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "layers.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace stcae {

enum class Variant {
    dstcae_upsampling,
    dstcae_deconv,
    dstcae_c3d,
    cae_upsampling,
    cae_deconv,
    dae,
};

enum class LayerKind {
    conv3d,
    maxpool3d,
    upsample3d,
    deconv3d,
    conv2d,
    maxpool2d,
    upsample2d,
    deconv2d,
    dense,
    flatten,
    reshape,
    dropout,
};

struct LayerSpec {
    LayerKind kind;
    Triple size{1, 1, 1};    // kernel extents, pool window, or upsample factor
    Triple stride{1, 1, 1};
    int units = 0;           // conv/deconv: output feature maps; dense: width
    Activation act = Activation::linear;
    float rate = 0.0f;       // dropout
    std::vector<int> target_shape;  // reshape (per-sample)
};

struct ModelSpec {
    Variant variant;
    std::string name;               // canonical CLI spelling, e.g. "dstcae-c3d"
    std::vector<int> input_shape;   // per sample: (8,64,64,1) or (64,64,1)
    std::vector<LayerSpec> layers;
};

// Weight/bias tensors aligned with ModelSpec::layers; layers without
// parameters hold empty tensors.
struct LayerParams {
    Tensor weights;
    Tensor bias;
};

struct ModelParams {
    std::vector<LayerParams> layers;
};

struct ModelGrads {
    ModelParams params;
    Tensor input;
};

ModelSpec build_model(Variant variant);
std::optional<Variant> variant_from_name(const std::string& name);
const char* variant_name(Variant variant);
bool is_dstcae(Variant variant);

// Glorot-uniform weights, zero biases; draw order is fixed so a seed fully
// determines the parameters.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

// Per-sample output shape of every layer, in order. Entry 0 is the input.
std::vector<std::pair<std::string, std::vector<int>>> shape_table(const ModelSpec& spec);

std::pair<Tensor, std::vector<LayerCache>> model_forward(const ModelSpec& spec,
                                                         const ModelParams& params,
                                                         const Tensor& input, bool training,
                                                         Rng& rng);

ModelGrads model_backward(const ModelSpec& spec, const ModelParams& params,
                          const std::vector<LayerCache>& caches, const Tensor& grad_output);

}  // namespace stcae
