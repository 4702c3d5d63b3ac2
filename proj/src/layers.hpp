#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace stcae {

enum class Activation { relu, tanh, linear };
enum class Padding { same, valid };

using Triple = std::array<int, 3>;

// Filter cube plus bias for 3D (de)convolution. Weights are laid out
// (out_channels, in_channels, S, P, Q) with S the temporal extent and P, Q
// the spatial extents. For a transposed convolution the same tensor is read
// with the channel axes swapped: the layer consumes `out_channels` channels
// and produces `in_channels` channels, and bias length must match the
// produced side.
struct Conv3DKernel {
    Tensor weights;
    Tensor bias;
    Triple stride{1, 1, 1};
    Padding padding = Padding::same;
};

// Saved forward state. Only the members a layer kind needs are populated:
// convolutions keep the input and the activation output, pooling keeps
// argmax indices, dropout keeps its mask.
struct LayerCache {
    Tensor input;
    Tensor out;
    std::vector<std::uint32_t> argmax;
    std::vector<int> in_shape;
    std::vector<std::uint8_t> keep;
    float rate = 0.0f;
};

struct KernelGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

// --- 3D convolution -------------------------------------------------------
// input (B, T, H, W, Cin), output (B, T', H', W', Cout). With padding=same,
// T' = ceil(T / stride) per axis; padding zeros are split evenly with the
// extra zero on the high-index side.
std::pair<Tensor, LayerCache> conv3d_forward(const Tensor& input, const Conv3DKernel& kernel,
                                             Activation act);
KernelGrads conv3d_backward(const Tensor& grad_out, const LayerCache& cache,
                            const Conv3DKernel& kernel, Activation act);

// --- 3D max pooling --------------------------------------------------------
// Non-overlapping windows (window == stride), output extent ceil(in/stride);
// ties resolve to the lowest linear index.
std::pair<Tensor, LayerCache> maxpool3d_forward(const Tensor& input, Triple window, Triple stride);
Tensor maxpool3d_backward(const Tensor& grad_out, const LayerCache& cache);

// --- 3D nearest-neighbour upsampling ---------------------------------------
Tensor upsample3d_forward(const Tensor& input, Triple factor);
Tensor upsample3d_backward(const Tensor& grad_out, Triple factor);

// --- 3D transposed convolution ---------------------------------------------
// Linear adjoint of conv3d_forward with the same kernel geometry: with
// stride s and same-padding every output extent is s times the input extent.
std::pair<Tensor, LayerCache> deconv3d_forward(const Tensor& input, const Conv3DKernel& kernel,
                                               Activation act);
KernelGrads deconv3d_backward(const Tensor& grad_out, const LayerCache& cache,
                              const Conv3DKernel& kernel, Activation act);

// --- dense ------------------------------------------------------------------
std::pair<Tensor, LayerCache> dense_forward(const Tensor& input, const Tensor& weights,
                                            const Tensor& bias, Activation act);
DenseGrads dense_backward(const Tensor& grad_out, const LayerCache& cache, const Tensor& weights,
                          Activation act);

// --- dropout ----------------------------------------------------------------
// Inverted dropout: training zeroes each element with probability rate and
// scales survivors by 1/(1-rate); inference is the identity.
std::pair<Tensor, LayerCache> dropout_forward(const Tensor& input, float rate, Rng& rng,
                                              bool training);
Tensor dropout_backward(const Tensor& grad_out, const LayerCache& cache);

// Elementwise activation helpers shared with the model driver.
float apply_activation(Activation act, float x);
float activation_deriv_from_out(Activation act, float y);

// Output spatial/temporal extents for the given padding mode.
std::array<int, 3> conv_output_extents(const std::array<int, 3>& in, const Triple& kernel,
                                       const Triple& stride, Padding padding);

}  // namespace stcae
