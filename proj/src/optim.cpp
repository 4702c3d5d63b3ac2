#include "optim.hpp"

#include <cmath>
#include <string>

namespace stcae {

std::pair<double, Tensor> mse_loss(const Tensor& input_batch, const Tensor& output_batch) {
    check_contract(input_batch.same_shape(output_batch), "mse_loss shapes differ");
    check_contract(input_batch.rank() >= 1, "mse_loss needs a batch axis");
    const int n = input_batch.dim(0);
    const float* ip = input_batch.data();
    const float* op = output_batch.data();
    double acc = 0.0;
    for (std::int64_t i = 0; i < input_batch.size(); ++i) {
        const double d = static_cast<double>(ip[i]) - static_cast<double>(op[i]);
        acc += d * d;
    }
    const double loss = acc / n;
    Tensor grad(output_batch.shape());
    const float scale = 2.0f / static_cast<float>(n);
    float* gp = grad.data();
    for (std::int64_t i = 0; i < grad.size(); ++i) gp[i] = scale * (op[i] - ip[i]);
    return {loss, std::move(grad)};
}

AdadeltaState AdadeltaState::zeros_for(const ModelParams& params) {
    AdadeltaState st;
    st.weights.resize(params.layers.size());
    st.biases.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (params.layers[i].weights.empty()) continue;
        st.weights[i] = {Tensor(params.layers[i].weights.shape()),
                         Tensor(params.layers[i].weights.shape())};
        st.biases[i] = {Tensor(params.layers[i].bias.shape()),
                        Tensor(params.layers[i].bias.shape())};
    }
    return st;
}

namespace {

void adadelta_tensor(Tensor& param, const Tensor& grad, Tensor& grad_sq, Tensor& update_sq,
                     const AdadeltaConfig& cfg, std::size_t layer_idx) {
    check_contract(param.same_shape(grad), "gradient shape does not match parameter");
    float* p = param.data();
    const float* g = grad.data();
    float* eg = grad_sq.data();
    float* ed = update_sq.data();
    for (std::int64_t i = 0; i < param.size(); ++i) {
        if (!std::isfinite(g[i])) {
            fail(ErrorKind::divergence,
                 "non-finite gradient in layer " + std::to_string(layer_idx));
        }
        eg[i] = cfg.rho * eg[i] + (1.0f - cfg.rho) * g[i] * g[i];
        const float dx = -std::sqrt(ed[i] + cfg.epsilon) / std::sqrt(eg[i] + cfg.epsilon) * g[i];
        ed[i] = cfg.rho * ed[i] + (1.0f - cfg.rho) * dx * dx;
        p[i] += cfg.lr * dx;
    }
}

}  // namespace

void adadelta_step(ModelParams& params, const ModelParams& grads, AdadeltaState& state,
                   const AdadeltaConfig& cfg) {
    check_contract(params.layers.size() == grads.layers.size() &&
                       params.layers.size() == state.weights.size(),
                   "optimizer state does not match parameters");
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (params.layers[i].weights.empty()) continue;
        adadelta_tensor(params.layers[i].weights, grads.layers[i].weights, state.weights[i].grad_sq,
                        state.weights[i].update_sq, cfg, i);
        adadelta_tensor(params.layers[i].bias, grads.layers[i].bias, state.biases[i].grad_sq,
                        state.biases[i].update_sq, cfg, i);
    }
}

}  // namespace stcae
