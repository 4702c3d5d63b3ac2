#pragma once

#include <utility>

#include "model.hpp"
#include "tensor.hpp"

namespace stcae {

// Batch-mean squared reconstruction cost: loss = (1/N) * sum_i |I_i - O_i|^2
// with N the batch count; grad_output = (2/N)(O - I).
std::pair<double, Tensor> mse_loss(const Tensor& input_batch, const Tensor& output_batch);

struct AdadeltaConfig {
    float rho = 0.95f;
    float epsilon = 1e-6f;
    float lr = 1.0f;  // scale on the computed update
};

// Decayed averages of squared gradients and squared updates, one pair per
// parameter tensor, shapes mirroring ModelParams.
struct AdadeltaState {
    struct Slot {
        Tensor grad_sq;
        Tensor update_sq;
    };
    std::vector<Slot> weights;
    std::vector<Slot> biases;

    static AdadeltaState zeros_for(const ModelParams& params);
};

// One update over every parameter tensor. Non-finite gradients abort with a
// diagnostic naming the layer.
void adadelta_step(ModelParams& params, const ModelParams& grads, AdadeltaState& state,
                   const AdadeltaConfig& cfg);

}  // namespace stcae
