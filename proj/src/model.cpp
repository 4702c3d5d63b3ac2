#include "model.hpp"

#include <cmath>

namespace stcae {

namespace {

LayerSpec conv3(int maps, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::conv3d;
    l.size = {5, 3, 3};
    l.units = maps;
    l.act = act;
    return l;
}

LayerSpec pool3(Triple window) {
    LayerSpec l;
    l.kind = LayerKind::maxpool3d;
    l.size = window;
    l.stride = window;
    return l;
}

LayerSpec up3(Triple factor) {
    LayerSpec l;
    l.kind = LayerKind::upsample3d;
    l.size = factor;
    return l;
}

LayerSpec deconv3(int maps, Triple stride, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::deconv3d;
    l.size = {5, 3, 3};
    l.stride = stride;
    l.units = maps;
    l.act = act;
    return l;
}

LayerSpec conv2(int maps, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.size = {1, 3, 3};
    l.units = maps;
    l.act = act;
    return l;
}

LayerSpec pool2() {
    LayerSpec l;
    l.kind = LayerKind::maxpool2d;
    l.size = {1, 2, 2};
    l.stride = {1, 2, 2};
    return l;
}

LayerSpec up2() {
    LayerSpec l;
    l.kind = LayerKind::upsample2d;
    l.size = {1, 2, 2};
    return l;
}

LayerSpec deconv2(int maps, int stride, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::deconv2d;
    l.size = {1, 3, 3};
    l.stride = {1, stride, stride};
    l.units = maps;
    l.act = act;
    return l;
}

LayerSpec dense(int units, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.units = units;
    l.act = act;
    return l;
}

LayerSpec drop(float rate) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.rate = rate;
    return l;
}

LayerSpec flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}

LayerSpec reshape(std::vector<int> shape) {
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.target_shape = std::move(shape);
    return l;
}

bool is_2d_kind(LayerKind k) {
    return k == LayerKind::conv2d || k == LayerKind::maxpool2d || k == LayerKind::upsample2d ||
           k == LayerKind::deconv2d;
}

}  // namespace

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::dstcae_upsampling: return "dstcae-upsampling";
        case Variant::dstcae_deconv: return "dstcae-deconv";
        case Variant::dstcae_c3d: return "dstcae-c3d";
        case Variant::cae_upsampling: return "cae-upsampling";
        case Variant::cae_deconv: return "cae-deconv";
        case Variant::dae: return "dae";
    }
    return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
    for (Variant v : {Variant::dstcae_upsampling, Variant::dstcae_deconv, Variant::dstcae_c3d,
                      Variant::cae_upsampling, Variant::cae_deconv, Variant::dae}) {
        if (name == variant_name(v)) return v;
    }
    return std::nullopt;
}

bool is_dstcae(Variant v) {
    return v == Variant::dstcae_upsampling || v == Variant::dstcae_deconv ||
           v == Variant::dstcae_c3d;
}

ModelSpec build_model(Variant variant) {
    ModelSpec spec;
    spec.variant = variant;
    spec.name = variant_name(variant);
    switch (variant) {
        case Variant::dstcae_upsampling:
            spec.input_shape = {8, 64, 64, 1};
            spec.layers = {
                conv3(16, Activation::relu),
                pool3({2, 2, 2}),
                drop(0.25f),
                conv3(8, Activation::relu),
                pool3({2, 2, 2}),
                // decode: the convolution feeding the last upsample widens to
                // 16 maps so the upsampled tensor is (8,64,64,16)
                conv3(8, Activation::relu),
                up3({2, 2, 2}),
                conv3(16, Activation::relu),
                up3({2, 2, 2}),
                conv3(1, Activation::tanh),
            };
            break;
        case Variant::dstcae_deconv:
            spec.input_shape = {8, 64, 64, 1};
            spec.layers = {
                conv3(16, Activation::relu),
                pool3({2, 2, 2}),
                drop(0.25f),
                conv3(8, Activation::relu),
                pool3({2, 2, 2}),
                deconv3(8, {2, 2, 2}, Activation::relu),
                deconv3(16, {2, 2, 2}, Activation::relu),
                deconv3(1, {1, 1, 1}, Activation::tanh),
            };
            break;
        case Variant::dstcae_c3d:
            spec.input_shape = {8, 64, 64, 1};
            spec.layers = {
                conv3(16, Activation::relu),
                pool3({1, 2, 2}),
                drop(0.25f),
                conv3(8, Activation::relu),
                pool3({2, 2, 2}),
                conv3(8, Activation::relu),
                pool3({2, 2, 2}),
                conv3(8, Activation::relu),
                up3({2, 2, 2}),
                conv3(8, Activation::relu),
                up3({2, 2, 2}),
                conv3(16, Activation::relu),
                up3({1, 2, 2}),
                conv3(1, Activation::tanh),
            };
            break;
        case Variant::cae_upsampling:
            spec.input_shape = {64, 64, 1};
            spec.layers = {
                conv2(16, Activation::relu),
                pool2(),
                conv2(8, Activation::relu),
                pool2(),
                conv2(8, Activation::relu),
                pool2(),
                conv2(8, Activation::relu),
                up2(),
                conv2(8, Activation::relu),
                up2(),
                conv2(16, Activation::relu),
                up2(),
                conv2(1, Activation::tanh),
            };
            break;
        case Variant::cae_deconv:
            spec.input_shape = {64, 64, 1};
            spec.layers = {
                conv2(16, Activation::relu),
                pool2(),
                conv2(8, Activation::relu),
                pool2(),
                conv2(8, Activation::relu),
                pool2(),
                deconv2(8, 2, Activation::relu),
                deconv2(8, 2, Activation::relu),
                deconv2(16, 2, Activation::relu),
                deconv2(1, 1, Activation::tanh),
            };
            break;
        case Variant::dae:
            spec.input_shape = {64, 64, 1};
            spec.layers = {
                flatten(),
                dense(150, Activation::relu),
                drop(0.25f),
                dense(100, Activation::relu),
                dense(50, Activation::relu),
                dense(100, Activation::relu),
                dense(150, Activation::relu),
                dense(4096, Activation::tanh),
                reshape({64, 64, 1}),
            };
            break;
    }
    return spec;
}

namespace {

// Per-sample shape propagation; the single source of truth for layer
// geometry, used by init, the shape table, and the forward driver.
std::vector<int> layer_output_shape(const LayerSpec& l, const std::vector<int>& in) {
    switch (l.kind) {
        case LayerKind::conv3d: {
            check_contract(in.size() == 4, "conv3d expects a (T,H,W,C) sample");
            auto e = conv_output_extents({in[0], in[1], in[2]}, l.size, l.stride, Padding::same);
            return {e[0], e[1], e[2], l.units};
        }
        case LayerKind::maxpool3d: {
            check_contract(in.size() == 4, "maxpool3d expects a (T,H,W,C) sample");
            auto c = [](int n, int s) { return (n + s - 1) / s; };
            return {c(in[0], l.stride[0]), c(in[1], l.stride[1]), c(in[2], l.stride[2]), in[3]};
        }
        case LayerKind::upsample3d:
            check_contract(in.size() == 4, "upsample3d expects a (T,H,W,C) sample");
            return {in[0] * l.size[0], in[1] * l.size[1], in[2] * l.size[2], in[3]};
        case LayerKind::deconv3d:
            check_contract(in.size() == 4, "deconv3d expects a (T,H,W,C) sample");
            return {in[0] * l.stride[0], in[1] * l.stride[1], in[2] * l.stride[2], l.units};
        case LayerKind::conv2d: {
            check_contract(in.size() == 3, "conv2d expects a (H,W,C) sample");
            auto e = conv_output_extents({1, in[0], in[1]}, l.size, l.stride, Padding::same);
            return {e[1], e[2], l.units};
        }
        case LayerKind::maxpool2d: {
            check_contract(in.size() == 3, "maxpool2d expects a (H,W,C) sample");
            auto c = [](int n, int s) { return (n + s - 1) / s; };
            return {c(in[0], l.stride[1]), c(in[1], l.stride[2]), in[2]};
        }
        case LayerKind::upsample2d:
            check_contract(in.size() == 3, "upsample2d expects a (H,W,C) sample");
            return {in[0] * l.size[1], in[1] * l.size[2], in[2]};
        case LayerKind::deconv2d:
            check_contract(in.size() == 3, "deconv2d expects a (H,W,C) sample");
            return {in[0] * l.stride[1], in[1] * l.stride[2], l.units};
        case LayerKind::dense: {
            check_contract(in.size() == 1, "dense expects a flattened sample");
            return {l.units};
        }
        case LayerKind::flatten: {
            int n = 1;
            for (int d : in) n *= d;
            return {n};
        }
        case LayerKind::reshape: {
            int n = 1, m = 1;
            for (int d : in) n *= d;
            for (int d : l.target_shape) m *= d;
            check_contract(n == m, "reshape target changes element count");
            return l.target_shape;
        }
        case LayerKind::dropout:
            return in;
    }
    fail(ErrorKind::contract, "unknown layer kind");
}

int channels_of(const std::vector<int>& shape) { return shape.back(); }

const char* layer_display_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv3d: return "3D Convolution";
        case LayerKind::maxpool3d: return "3D Max-pooling";
        case LayerKind::upsample3d: return "3D UpSampling";
        case LayerKind::deconv3d: return "3D Deconvolution";
        case LayerKind::conv2d: return "2D Convolution";
        case LayerKind::maxpool2d: return "2D Max-pooling";
        case LayerKind::upsample2d: return "2D UpSampling";
        case LayerKind::deconv2d: return "2D Deconvolution";
        case LayerKind::dense: return "Fully Connected";
        case LayerKind::flatten: return "Flatten";
        case LayerKind::reshape: return "Reshape";
        case LayerKind::dropout: return "Dropout";
    }
    return "?";
}

void glorot_fill(Tensor& w, int fan_in, int fan_out, Rng& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x1217'face'0001ULL));
    ModelParams params;
    params.layers.resize(spec.layers.size());
    std::vector<int> shape = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerParams& p = params.layers[i];
        const int taps = l.size[0] * l.size[1] * l.size[2];
        switch (l.kind) {
            case LayerKind::conv3d:
            case LayerKind::conv2d: {
                const int cin = channels_of(shape);
                p.weights = Tensor({l.units, cin, l.size[0], l.size[1], l.size[2]});
                glorot_fill(p.weights, cin * taps, l.units * taps, rng);
                p.bias = Tensor({l.units});
                break;
            }
            case LayerKind::deconv3d:
            case LayerKind::deconv2d: {
                const int cin = channels_of(shape);
                p.weights = Tensor({cin, l.units, l.size[0], l.size[1], l.size[2]});
                glorot_fill(p.weights, cin * taps, l.units * taps, rng);
                p.bias = Tensor({l.units});
                break;
            }
            case LayerKind::dense: {
                const int n = shape[0];
                p.weights = Tensor({n, l.units});
                glorot_fill(p.weights, n, l.units, rng);
                p.bias = Tensor({l.units});
                break;
            }
            default: break;
        }
        shape = layer_output_shape(l, shape);
    }
    return params;
}

std::vector<std::pair<std::string, std::vector<int>>> shape_table(const ModelSpec& spec) {
    std::vector<std::pair<std::string, std::vector<int>>> rows;
    rows.emplace_back("Input", spec.input_shape);
    std::vector<int> shape = spec.input_shape;
    for (const LayerSpec& l : spec.layers) {
        shape = layer_output_shape(l, shape);
        if (l.kind == LayerKind::dropout) continue;  // shape-neutral, not a table row
        rows.emplace_back(layer_display_name(l.kind), shape);
    }
    return rows;
}

namespace {

Conv3DKernel kernel_for(const LayerSpec& l, const LayerParams& p) {
    Conv3DKernel k;
    k.weights = p.weights;
    k.bias = p.bias;
    k.stride = l.stride;
    k.padding = Padding::same;
    return k;
}

Tensor lift_to_5d(const Tensor& x) {
    // (B,H,W,C) -> (B,1,H,W,C)
    return x.reshaped({x.dim(0), 1, x.dim(1), x.dim(2), x.dim(3)});
}

Tensor drop_to_4d(Tensor x) {
    return std::move(x).reshaped({x.dim(0), x.dim(2), x.dim(3), x.dim(4)});
}

}  // namespace

std::pair<Tensor, std::vector<LayerCache>> model_forward(const ModelSpec& spec,
                                                         const ModelParams& params,
                                                         const Tensor& input, bool training,
                                                         Rng& rng) {
    check_contract(params.layers.size() == spec.layers.size(), "params do not match model spec");
    check_contract(input.rank() == static_cast<int>(spec.input_shape.size()) + 1,
                   "model input must be a batch of samples");
    for (std::size_t i = 0; i < spec.input_shape.size(); ++i) {
        check_contract(input.dim(static_cast<int>(i) + 1) == spec.input_shape[i],
                       "model input sample shape mismatch");
    }
    const bool two_d = spec.input_shape.size() == 3;
    const int B = input.dim(0);

    std::vector<LayerCache> caches(spec.layers.size());
    Tensor x = input;
    bool lifted = false;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const LayerParams& p = params.layers[i];
        if (two_d && is_2d_kind(l.kind) && !lifted) {
            x = lift_to_5d(x);
            lifted = true;
        }
        switch (l.kind) {
            case LayerKind::conv3d:
            case LayerKind::conv2d: {
                auto [y, cache] = conv3d_forward(x, kernel_for(l, p), l.act);
                caches[i] = std::move(cache);
                x = std::move(y);
                break;
            }
            case LayerKind::maxpool3d:
            case LayerKind::maxpool2d: {
                auto [y, cache] = maxpool3d_forward(x, l.size, l.stride);
                caches[i] = std::move(cache);
                x = std::move(y);
                break;
            }
            case LayerKind::upsample3d:
            case LayerKind::upsample2d:
                x = upsample3d_forward(x, l.size);
                break;
            case LayerKind::deconv3d:
            case LayerKind::deconv2d: {
                auto [y, cache] = deconv3d_forward(x, kernel_for(l, p), l.act);
                caches[i] = std::move(cache);
                x = std::move(y);
                break;
            }
            case LayerKind::dense: {
                auto [y, cache] = dense_forward(x, p.weights, p.bias, l.act);
                caches[i] = std::move(cache);
                x = std::move(y);
                break;
            }
            case LayerKind::flatten: {
                caches[i].in_shape = x.shape();
                if (lifted) {
                    caches[i].in_shape = {x.dim(0), x.dim(2), x.dim(3), x.dim(4)};
                    lifted = false;
                }
                x = std::move(x).reshaped({B, static_cast<int>(x.size() / B)});
                break;
            }
            case LayerKind::reshape: {
                caches[i].in_shape = x.shape();
                std::vector<int> s{B};
                s.insert(s.end(), l.target_shape.begin(), l.target_shape.end());
                x = std::move(x).reshaped(std::move(s));
                break;
            }
            case LayerKind::dropout: {
                auto [y, cache] = dropout_forward(x, l.rate, rng, training);
                caches[i] = std::move(cache);
                x = std::move(y);
                break;
            }
        }
    }
    if (lifted) x = drop_to_4d(std::move(x));
    return {std::move(x), std::move(caches)};
}

ModelGrads model_backward(const ModelSpec& spec, const ModelParams& params,
                          const std::vector<LayerCache>& caches, const Tensor& grad_output) {
    check_contract(caches.size() == spec.layers.size(), "cache list does not match model spec");
    const bool two_d = spec.input_shape.size() == 3;
    ModelGrads grads;
    grads.params.layers.resize(spec.layers.size());

    Tensor g = grad_output;
    // Mirror of the forward lift: the last 2D block ran on 5D tensors.
    bool lifted_region = false;
    if (two_d && !spec.layers.empty() && is_2d_kind(spec.layers.back().kind)) {
        g = lift_to_5d(g);
        lifted_region = true;
    }
    for (std::size_t ri = spec.layers.size(); ri-- > 0;) {
        const LayerSpec& l = spec.layers[ri];
        const LayerParams& p = params.layers[ri];
        switch (l.kind) {
            case LayerKind::conv3d:
            case LayerKind::conv2d: {
                KernelGrads kg = conv3d_backward(g, caches[ri], kernel_for(l, p), l.act);
                grads.params.layers[ri].weights = std::move(kg.weights);
                grads.params.layers[ri].bias = std::move(kg.bias);
                g = std::move(kg.input);
                break;
            }
            case LayerKind::maxpool3d:
            case LayerKind::maxpool2d:
                g = maxpool3d_backward(g, caches[ri]);
                break;
            case LayerKind::upsample3d:
            case LayerKind::upsample2d:
                g = upsample3d_backward(g, l.size);
                break;
            case LayerKind::deconv3d:
            case LayerKind::deconv2d: {
                KernelGrads kg = deconv3d_backward(g, caches[ri], kernel_for(l, p), l.act);
                grads.params.layers[ri].weights = std::move(kg.weights);
                grads.params.layers[ri].bias = std::move(kg.bias);
                g = std::move(kg.input);
                break;
            }
            case LayerKind::dense: {
                DenseGrads dg = dense_backward(g, caches[ri], p.weights, l.act);
                grads.params.layers[ri].weights = std::move(dg.weights);
                grads.params.layers[ri].bias = std::move(dg.bias);
                g = std::move(dg.input);
                break;
            }
            case LayerKind::flatten:
            case LayerKind::reshape:
                g = std::move(g).reshaped(caches[ri].in_shape);
                break;
            case LayerKind::dropout:
                g = dropout_backward(g, caches[ri]);
                break;
        }
        // Entering (in reverse) a 2D block from a flat region lifts again.
        if (two_d && ri > 0 && is_2d_kind(spec.layers[ri - 1].kind) && g.rank() == 4) {
            g = lift_to_5d(g);
            lifted_region = true;
        }
    }
    if (lifted_region && g.rank() == 5) g = drop_to_4d(std::move(g));
    grads.input = std::move(g);
    return grads;
}

}  // namespace stcae
