#include "layers.hpp"

#include <cmath>
#include <cstring>

#include "gemm.hpp"
#include "parallel.hpp"

namespace stcae {

namespace {

// Geometry of one (de)convolution, expressed on the convolution side:
// Ti/Hi/Wi/Ci is the conv input, To/Ho/Wo/Co the conv output. A transposed
// convolution runs the same geometry backwards.
struct Geom {
    int B;
    int Ti, Hi, Wi, Ci;
    int To, Ho, Wo, Co;
    int S, P, Q;
    int st, sh, sw;
    int padt, padh, padw;
};

int out_extent(int in, int k, int stride, Padding pad) {
    if (pad == Padding::same) return (in + stride - 1) / stride;
    check_contract(in >= k, "valid padding requires input extent >= kernel extent");
    return (in - k) / stride + 1;
}

int lead_pad(int in, int out, int k, int stride, Padding pad) {
    if (pad == Padding::valid) return 0;
    int total = (out - 1) * stride + k - in;
    if (total < 0) total = 0;
    return total / 2;  // extra zero goes to the high-index side
}

Geom make_geom(int B, int Ti, int Hi, int Wi, int Ci, int Co, int S, int P, int Q,
               const Triple& stride, Padding pad) {
    Geom g;
    g.B = B;
    g.Ti = Ti;
    g.Hi = Hi;
    g.Wi = Wi;
    g.Ci = Ci;
    g.Co = Co;
    g.S = S;
    g.P = P;
    g.Q = Q;
    g.st = stride[0];
    g.sh = stride[1];
    g.sw = stride[2];
    check_contract(g.st > 0 && g.sh > 0 && g.sw > 0, "stride components must be positive");
    g.To = out_extent(Ti, S, g.st, pad);
    g.Ho = out_extent(Hi, P, g.sh, pad);
    g.Wo = out_extent(Wi, Q, g.sw, pad);
    g.padt = lead_pad(Ti, g.To, S, g.st, pad);
    g.padh = lead_pad(Hi, g.Ho, P, g.sh, pad);
    g.padw = lead_pad(Wi, g.Wo, Q, g.sw, pad);
    return g;
}

// (out,in,S,P,Q) -> (S,P,Q,in,out): the forward GEMM layout.
std::vector<float> pack_forward(const Tensor& w) {
    const int Co = w.dim(0), Ci = w.dim(1), S = w.dim(2), P = w.dim(3), Q = w.dim(4);
    std::vector<float> packed(static_cast<std::size_t>(w.size()));
    const float* src = w.data();
    for (int co = 0; co < Co; ++co)
        for (int ci = 0; ci < Ci; ++ci)
            for (int s = 0; s < S; ++s)
                for (int p = 0; p < P; ++p)
                    for (int q = 0; q < Q; ++q)
                        packed[(((((static_cast<std::size_t>(s) * P + p) * Q + q) * Ci + ci) * Co) +
                                co)] = *src++;
    return packed;
}

// (out,in,S,P,Q) -> (S,P,Q,out,in): the adjoint-gather layout.
std::vector<float> pack_gather(const Tensor& w) {
    const int Co = w.dim(0), Ci = w.dim(1), S = w.dim(2), P = w.dim(3), Q = w.dim(4);
    std::vector<float> packed(static_cast<std::size_t>(w.size()));
    const float* src = w.data();
    for (int co = 0; co < Co; ++co)
        for (int ci = 0; ci < Ci; ++ci)
            for (int s = 0; s < S; ++s)
                for (int p = 0; p < P; ++p)
                    for (int q = 0; q < Q; ++q)
                        packed[(((((static_cast<std::size_t>(s) * P + p) * Q + q) * Co + co) * Ci) +
                                ci)] = *src++;
    return packed;
}

thread_local std::vector<float> tl_cols;
thread_local std::vector<float> tl_row;

// One output slab (fixed b, to) unfolded to rows of taps: row r = (yo,xo),
// column layout (s,p,q,ci).
void fill_columns(const Geom& g, const float* in, int b, int to, float* cols) {
    const int K = g.S * g.P * g.Q * g.Ci;
    const std::size_t in_t = static_cast<std::size_t>(g.Hi) * g.Wi * g.Ci;
    const std::size_t in_b = static_cast<std::size_t>(g.Ti) * in_t;
    for (int yo = 0; yo < g.Ho; ++yo) {
        for (int xo = 0; xo < g.Wo; ++xo) {
            float* row = cols + (static_cast<std::size_t>(yo) * g.Wo + xo) * K;
            for (int s = 0; s < g.S; ++s) {
                const int ti = to * g.st - g.padt + s;
                const bool t_ok = ti >= 0 && ti < g.Ti;
                for (int p = 0; p < g.P; ++p) {
                    const int yi = yo * g.sh - g.padh + p;
                    const bool y_ok = t_ok && yi >= 0 && yi < g.Hi;
                    float* dst = row + ((s * g.P + p) * g.Q) * g.Ci;
                    for (int q = 0; q < g.Q; ++q, dst += g.Ci) {
                        const int xi = xo * g.sw - g.padw + q;
                        if (y_ok && xi >= 0 && xi < g.Wi) {
                            const float* src = in + b * in_b + ti * in_t +
                                               (static_cast<std::size_t>(yi) * g.Wi + xi) * g.Ci;
                            std::memcpy(dst, src, sizeof(float) * static_cast<std::size_t>(g.Ci));
                        } else {
                            std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(g.Ci));
                        }
                    }
                }
            }
        }
    }
}

void apply_bias_act(float* slab, std::size_t rows, int C, const float* bias, Activation act) {
    for (std::size_t r = 0; r < rows; ++r) {
        float* v = slab + r * C;
        if (bias) {
            for (int c = 0; c < C; ++c) v[c] += bias[c];
        }
        if (act == Activation::relu) {
            for (int c = 0; c < C; ++c) v[c] = v[c] > 0.0f ? v[c] : 0.0f;
        } else if (act == Activation::tanh) {
            for (int c = 0; c < C; ++c) v[c] = std::tanh(v[c]);
        }
    }
}

// out[b,to,ho,wo,:] = act(W * taps + bias), W packed (S,P,Q,Ci,Co).
void core_forward(const Geom& g, const float* in, const std::vector<float>& wf, const float* bias,
                  Activation act, float* out) {
    const int K = g.S * g.P * g.Q * g.Ci;
    const std::size_t n_pos = static_cast<std::size_t>(g.Ho) * g.Wo;
    const std::size_t slab = n_pos * g.Co;
    parallel_chunks(static_cast<std::int64_t>(g.B) * g.To, 1, [&](std::int64_t s0, std::int64_t s1) {
        tl_cols.resize(n_pos * K);
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / g.To);
            const int to = static_cast<int>(sl % g.To);
            fill_columns(g, in, b, to, tl_cols.data());
            float* dst = out + static_cast<std::size_t>(sl) * slab;
            sgemm(static_cast<int>(n_pos), g.Co, K, tl_cols.data(), K, wf.data(), g.Co, dst, g.Co,
                  false);
            apply_bias_act(dst, n_pos, g.Co, bias, act);
        }
    });
}

// Exact adjoint of core_forward's linear part, used for conv grad-input and
// for the transposed convolution itself. g lives on the conv-output side,
// result on the conv-input side. W packed (S,P,Q,Co,Ci).
void core_adjoint(const Geom& g, const float* gout, const std::vector<float>& wg,
                  const float* bias, Activation act, float* res) {
    const std::size_t out_y = static_cast<std::size_t>(g.Wo) * g.Co;
    const std::size_t out_t = static_cast<std::size_t>(g.Ho) * out_y;
    const std::size_t out_b = static_cast<std::size_t>(g.To) * out_t;
    const std::size_t in_row = static_cast<std::size_t>(g.Ci);
    parallel_chunks(static_cast<std::int64_t>(g.B) * g.Ti, 1, [&](std::int64_t s0, std::int64_t s1) {
        tl_row.resize(in_row);
        float* acc = tl_row.data();
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / g.Ti);
            const int ti = static_cast<int>(sl % g.Ti);
            float* out_slab =
                res + (static_cast<std::size_t>(b) * g.Ti + ti) * g.Hi * g.Wi * g.Ci;
            for (int yi = 0; yi < g.Hi; ++yi) {
                for (int xi = 0; xi < g.Wi; ++xi) {
                    if (bias) {
                        std::memcpy(acc, bias, sizeof(float) * in_row);
                    } else {
                        std::memset(acc, 0, sizeof(float) * in_row);
                    }
                    for (int s = 0; s < g.S; ++s) {
                        const int tn = ti + g.padt - s;
                        if (tn < 0) break;
                        if (tn % g.st) continue;
                        const int to = tn / g.st;
                        if (to >= g.To) continue;
                        for (int p = 0; p < g.P; ++p) {
                            const int yn = yi + g.padh - p;
                            if (yn < 0) break;
                            if (yn % g.sh) continue;
                            const int yo = yn / g.sh;
                            if (yo >= g.Ho) continue;
                            for (int q = 0; q < g.Q; ++q) {
                                const int xn = xi + g.padw - q;
                                if (xn < 0) break;
                                if (xn % g.sw) continue;
                                const int xo = xn / g.sw;
                                if (xo >= g.Wo) continue;
                                const float* grow =
                                    gout + static_cast<std::size_t>(b) * out_b + to * out_t +
                                    static_cast<std::size_t>(yo) * out_y + xo * g.Co;
                                const float* wbase =
                                    wg.data() +
                                    ((static_cast<std::size_t>(s) * g.P + p) * g.Q + q) * g.Co *
                                        g.Ci;
                                for (int co = 0; co < g.Co; ++co) {
                                    const float gv = grow[co];
                                    const float* wrow = wbase + static_cast<std::size_t>(co) * g.Ci;
                                    for (int ci = 0; ci < g.Ci; ++ci) acc[ci] += gv * wrow[ci];
                                }
                            }
                        }
                    }
                    float* dst = out_slab + (static_cast<std::size_t>(yi) * g.Wi + xi) * g.Ci;
                    if (act == Activation::relu) {
                        for (int c = 0; c < g.Ci; ++c) dst[c] = acc[c] > 0.0f ? acc[c] : 0.0f;
                    } else if (act == Activation::tanh) {
                        for (int c = 0; c < g.Ci; ++c) dst[c] = std::tanh(acc[c]);
                    } else {
                        std::memcpy(dst, acc, sizeof(float) * in_row);
                    }
                }
            }
        }
    });
}

// dW[(s,p,q,ci),co] = sum over positions of tap * dpre. Per-slab partials
// are reduced in slab order so the result is thread-count independent.
std::vector<double> core_wgrad(const Geom& g, const float* in, const float* dpre) {
    const int K = g.S * g.P * g.Q * g.Ci;
    const std::size_t n_pos = static_cast<std::size_t>(g.Ho) * g.Wo;
    const std::size_t wsize = static_cast<std::size_t>(K) * g.Co;
    const std::int64_t n_slabs = static_cast<std::int64_t>(g.B) * g.To;
    std::vector<float> partial(static_cast<std::size_t>(n_slabs) * wsize);
    parallel_chunks(n_slabs, 1, [&](std::int64_t s0, std::int64_t s1) {
        tl_cols.resize(n_pos * K);
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / g.To);
            const int to = static_cast<int>(sl % g.To);
            fill_columns(g, in, b, to, tl_cols.data());
            float* dst = partial.data() + static_cast<std::size_t>(sl) * wsize;
            std::memset(dst, 0, sizeof(float) * wsize);
            const float* dp = dpre + static_cast<std::size_t>(sl) * n_pos * g.Co;
            sgemm_atb_acc(K, g.Co, static_cast<int>(n_pos), tl_cols.data(), K, dp, g.Co, dst,
                          g.Co);
        }
    });
    std::vector<double> acc(wsize, 0.0);
    for (std::int64_t sl = 0; sl < n_slabs; ++sl) {
        const float* src = partial.data() + static_cast<std::size_t>(sl) * wsize;
        for (std::size_t i = 0; i < wsize; ++i) acc[i] += src[i];
    }
    return acc;
}

// Sum over all but the trailing channel axis, chunk-ordered for determinism.
std::vector<double> channel_sum(const Tensor& t, int C) {
    const std::int64_t rows = t.size() / C;
    const std::int64_t grain = 8192;
    const std::int64_t n_chunks = (rows + grain - 1) / grain;
    std::vector<double> partial(static_cast<std::size_t>(n_chunks) * C, 0.0);
    parallel_chunks(rows, grain, [&](std::int64_t r0, std::int64_t r1) {
        double* p = partial.data() + static_cast<std::size_t>(r0 / grain) * C;
        const float* src = t.data() + r0 * C;
        for (std::int64_t r = r0; r < r1; ++r) {
            for (int c = 0; c < C; ++c) p[c] += *src++;
        }
    });
    std::vector<double> total(static_cast<std::size_t>(C), 0.0);
    for (std::int64_t ch = 0; ch < n_chunks; ++ch) {
        for (int c = 0; c < C; ++c) total[static_cast<std::size_t>(c)] +=
            partial[static_cast<std::size_t>(ch) * C + c];
    }
    return total;
}

Tensor elementwise_dpre(const Tensor& grad_out, const Tensor& out, Activation act) {
    check_contract(grad_out.same_shape(out), "grad_out shape does not match forward output");
    if (act == Activation::linear) return grad_out;
    Tensor dpre(grad_out.shape());
    const float* gp = grad_out.data();
    const float* yp = out.data();
    float* dp = dpre.data();
    parallel_chunks(grad_out.size(), 1 << 16, [&](std::int64_t i0, std::int64_t i1) {
        if (act == Activation::relu) {
            for (std::int64_t i = i0; i < i1; ++i) dp[i] = yp[i] > 0.0f ? gp[i] : 0.0f;
        } else {
            for (std::int64_t i = i0; i < i1; ++i) dp[i] = gp[i] * (1.0f - yp[i] * yp[i]);
        }
    });
    return dpre;
}

// (S,P,Q,Ci,Co) accumulator -> (Co,Ci,S,P,Q) tensor.
Tensor unpack_wgrad(const std::vector<double>& acc, int Co, int Ci, int S, int P, int Q) {
    Tensor w({Co, Ci, S, P, Q});
    float* dst = w.data();
    for (int co = 0; co < Co; ++co)
        for (int ci = 0; ci < Ci; ++ci)
            for (int s = 0; s < S; ++s)
                for (int p = 0; p < P; ++p)
                    for (int q = 0; q < Q; ++q)
                        *dst++ = static_cast<float>(
                            acc[((((static_cast<std::size_t>(s) * P + p) * Q + q) * Ci + ci) * Co) +
                                co]);
    return w;
}

void validate_kernel(const Conv3DKernel& k) {
    check_contract(k.weights.rank() == 5, "conv kernel weights must be rank 5");
    check_contract(k.bias.rank() == 1, "conv kernel bias must be rank 1");
}

}  // namespace

float apply_activation(Activation act, float x) {
    switch (act) {
        case Activation::relu: return x > 0.0f ? x : 0.0f;
        case Activation::tanh: return std::tanh(x);
        default: return x;
    }
}

float activation_deriv_from_out(Activation act, float y) {
    switch (act) {
        case Activation::relu: return y > 0.0f ? 1.0f : 0.0f;
        case Activation::tanh: return 1.0f - y * y;
        default: return 1.0f;
    }
}

std::array<int, 3> conv_output_extents(const std::array<int, 3>& in, const Triple& kernel,
                                       const Triple& stride, Padding padding) {
    return {out_extent(in[0], kernel[0], stride[0], padding),
            out_extent(in[1], kernel[1], stride[1], padding),
            out_extent(in[2], kernel[2], stride[2], padding)};
}

std::pair<Tensor, LayerCache> conv3d_forward(const Tensor& input, const Conv3DKernel& kernel,
                                             Activation act) {
    validate_kernel(kernel);
    check_contract(input.rank() == 5, "conv3d input must be (B,T,H,W,C)");
    const int Co = kernel.weights.dim(0), Ci = kernel.weights.dim(1);
    const int S = kernel.weights.dim(2), P = kernel.weights.dim(3), Q = kernel.weights.dim(4);
    check_contract(input.dim(4) == Ci, "conv3d input channels do not match kernel");
    check_contract(kernel.bias.dim(0) == Co, "conv3d bias length must equal out_channels");
    const Geom g = make_geom(input.dim(0), input.dim(1), input.dim(2), input.dim(3), Ci, Co, S, P,
                             Q, kernel.stride, kernel.padding);
    Tensor out({g.B, g.To, g.Ho, g.Wo, g.Co});
    const std::vector<float> wf = pack_forward(kernel.weights);
    core_forward(g, input.data(), wf, kernel.bias.data(), act, out.data());
    LayerCache cache;
    cache.input = input;
    cache.out = out;
    return {std::move(out), std::move(cache)};
}

KernelGrads conv3d_backward(const Tensor& grad_out, const LayerCache& cache,
                            const Conv3DKernel& kernel, Activation act) {
    validate_kernel(kernel);
    check_contract(cache.input.rank() == 5 && cache.out.rank() == 5,
                   "conv3d cache does not hold forward tensors");
    const int Co = kernel.weights.dim(0), Ci = kernel.weights.dim(1);
    const int S = kernel.weights.dim(2), P = kernel.weights.dim(3), Q = kernel.weights.dim(4);
    check_contract(cache.input.dim(4) == Ci && cache.out.dim(4) == Co,
                   "conv3d cache/kernel mismatch");
    const Geom g = make_geom(cache.input.dim(0), cache.input.dim(1), cache.input.dim(2),
                             cache.input.dim(3), Ci, Co, S, P, Q, kernel.stride, kernel.padding);
    check_contract(grad_out.same_shape(cache.out), "conv3d grad_out shape mismatch");

    const Tensor dpre = elementwise_dpre(grad_out, cache.out, act);

    KernelGrads grads;
    const std::vector<double> db = channel_sum(dpre, Co);
    grads.bias = Tensor({Co});
    for (int c = 0; c < Co; ++c) grads.bias[c] = static_cast<float>(db[static_cast<std::size_t>(c)]);

    grads.weights = unpack_wgrad(core_wgrad(g, cache.input.data(), dpre.data()), Co, Ci, S, P, Q);

    grads.input = Tensor(cache.input.shape());
    const std::vector<float> wg = pack_gather(kernel.weights);
    core_adjoint(g, dpre.data(), wg, nullptr, Activation::linear, grads.input.data());
    return grads;
}

std::pair<Tensor, LayerCache> maxpool3d_forward(const Tensor& input, Triple window,
                                                Triple stride) {
    check_contract(input.rank() == 5, "maxpool3d input must be (B,T,H,W,C)");
    check_contract(window == stride, "maxpool3d requires window == stride");
    for (int i = 0; i < 3; ++i)
        check_contract(window[static_cast<std::size_t>(i)] == 1 || window[static_cast<std::size_t>(i)] == 2,
                       "maxpool3d window components must be 1 or 2");
    const int B = input.dim(0), Ti = input.dim(1), Hi = input.dim(2), Wi = input.dim(3),
              C = input.dim(4);
    const int wt = window[0], wh = window[1], ww = window[2];
    const int To = (Ti + wt - 1) / wt, Ho = (Hi + wh - 1) / wh, Wo = (Wi + ww - 1) / ww;
    Tensor out({B, To, Ho, Wo, C});
    LayerCache cache;
    cache.in_shape = input.shape();
    cache.argmax.resize(static_cast<std::size_t>(out.size()));
    const float* in = input.data();
    float* op = out.data();
    std::uint32_t* am = cache.argmax.data();
    const std::size_t in_y = static_cast<std::size_t>(Wi) * C;
    const std::size_t in_t = static_cast<std::size_t>(Hi) * in_y;
    const std::size_t in_b = static_cast<std::size_t>(Ti) * in_t;
    parallel_chunks(static_cast<std::int64_t>(B) * To, 1, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / To);
            const int to = static_cast<int>(sl % To);
            std::size_t o = static_cast<std::size_t>(sl) * Ho * Wo * C;
            for (int yo = 0; yo < Ho; ++yo) {
                for (int xo = 0; xo < Wo; ++xo) {
                    for (int c = 0; c < C; ++c, ++o) {
                        float best = 0.0f;
                        std::uint32_t best_idx = 0;
                        bool first = true;
                        for (int dt = 0; dt < wt; ++dt) {
                            const int ti = to * wt + dt;
                            if (ti >= Ti) break;
                            for (int dy = 0; dy < wh; ++dy) {
                                const int yi = yo * wh + dy;
                                if (yi >= Hi) break;
                                for (int dx = 0; dx < ww; ++dx) {
                                    const int xi = xo * ww + dx;
                                    if (xi >= Wi) break;
                                    const std::size_t idx = static_cast<std::size_t>(b) * in_b +
                                                            ti * in_t + yi * in_y +
                                                            static_cast<std::size_t>(xi) * C + c;
                                    const float v = in[idx];
                                    if (first || v > best) {
                                        best = v;
                                        best_idx = static_cast<std::uint32_t>(idx);
                                        first = false;
                                    }
                                }
                            }
                        }
                        op[o] = best;
                        am[o] = best_idx;
                    }
                }
            }
        }
    });
    return {std::move(out), std::move(cache)};
}

Tensor maxpool3d_backward(const Tensor& grad_out, const LayerCache& cache) {
    check_contract(grad_out.size() == static_cast<std::int64_t>(cache.argmax.size()),
                   "maxpool3d grad_out does not match cached argmax");
    Tensor grad_in(cache.in_shape);
    float* gi = grad_in.data();
    const float* go = grad_out.data();
    const std::uint32_t* am = cache.argmax.data();
    // Windows are disjoint, so argmax targets never collide across chunks.
    parallel_chunks(grad_out.size(), 1 << 16, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) gi[am[i]] += go[i];
    });
    return grad_in;
}

Tensor upsample3d_forward(const Tensor& input, Triple factor) {
    check_contract(input.rank() == 5, "upsample3d input must be (B,T,H,W,C)");
    for (int f : factor) check_contract(f >= 1, "upsample3d factors must be >= 1");
    const int B = input.dim(0), Ti = input.dim(1), Hi = input.dim(2), Wi = input.dim(3),
              C = input.dim(4);
    const int ft = factor[0], fh = factor[1], fw = factor[2];
    Tensor out({B, Ti * ft, Hi * fh, Wi * fw, C});
    const float* in = input.data();
    float* op = out.data();
    const int To = Ti * ft, Ho = Hi * fh, Wo = Wi * fw;
    const std::size_t in_y = static_cast<std::size_t>(Wi) * C;
    const std::size_t in_t = static_cast<std::size_t>(Hi) * in_y;
    const std::size_t in_b = static_cast<std::size_t>(Ti) * in_t;
    parallel_chunks(static_cast<std::int64_t>(B) * To, 1, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / To);
            const int to = static_cast<int>(sl % To);
            const int ti = to / ft;
            float* dst = op + static_cast<std::size_t>(sl) * Ho * Wo * C;
            for (int yo = 0; yo < Ho; ++yo) {
                const int yi = yo / fh;
                const float* src_row = in + static_cast<std::size_t>(b) * in_b + ti * in_t +
                                       static_cast<std::size_t>(yi) * in_y;
                for (int xo = 0; xo < Wo; ++xo, dst += C) {
                    std::memcpy(dst, src_row + static_cast<std::size_t>(xo / fw) * C,
                                sizeof(float) * static_cast<std::size_t>(C));
                }
            }
        }
    });
    return out;
}

Tensor upsample3d_backward(const Tensor& grad_out, Triple factor) {
    check_contract(grad_out.rank() == 5, "upsample3d grad must be (B,T,H,W,C)");
    const int ft = factor[0], fh = factor[1], fw = factor[2];
    const int B = grad_out.dim(0), To = grad_out.dim(1), Ho = grad_out.dim(2),
              Wo = grad_out.dim(3), C = grad_out.dim(4);
    check_contract(To % ft == 0 && Ho % fh == 0 && Wo % fw == 0,
                   "upsample3d grad extents not divisible by factor");
    const int Ti = To / ft, Hi = Ho / fh, Wi = Wo / fw;
    Tensor grad_in({B, Ti, Hi, Wi, C});
    const float* go = grad_out.data();
    float* gi = grad_in.data();
    const std::size_t out_y = static_cast<std::size_t>(Wo) * C;
    const std::size_t out_t = static_cast<std::size_t>(Ho) * out_y;
    const std::size_t out_b = static_cast<std::size_t>(To) * out_t;
    parallel_chunks(static_cast<std::int64_t>(B) * Ti, 1, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t sl = s0; sl < s1; ++sl) {
            const int b = static_cast<int>(sl / Ti);
            const int ti = static_cast<int>(sl % Ti);
            float* dst = gi + static_cast<std::size_t>(sl) * Hi * Wi * C;
            for (int yi = 0; yi < Hi; ++yi) {
                for (int xi = 0; xi < Wi; ++xi, dst += C) {
                    for (int c = 0; c < C; ++c) {
                        float acc = 0.0f;
                        for (int dt = 0; dt < ft; ++dt)
                            for (int dy = 0; dy < fh; ++dy)
                                for (int dx = 0; dx < fw; ++dx)
                                    acc += go[static_cast<std::size_t>(b) * out_b +
                                              (ti * ft + dt) * out_t +
                                              (static_cast<std::size_t>(yi) * fh + dy) * out_y +
                                              (static_cast<std::size_t>(xi) * fw + dx) * C + c];
                        dst[c] = acc;
                    }
                }
            }
        }
    });
    return grad_in;
}

std::pair<Tensor, LayerCache> deconv3d_forward(const Tensor& input, const Conv3DKernel& kernel,
                                               Activation act) {
    validate_kernel(kernel);
    check_contract(input.rank() == 5, "deconv3d input must be (B,T,H,W,C)");
    const int C1 = kernel.weights.dim(0), C2 = kernel.weights.dim(1);
    const int S = kernel.weights.dim(2), P = kernel.weights.dim(3), Q = kernel.weights.dim(4);
    check_contract(input.dim(4) == C1, "deconv3d input channels do not match kernel");
    check_contract(kernel.bias.dim(0) == C2,
                   "deconv3d bias length must equal produced channel count");
    check_contract(kernel.padding == Padding::same, "deconv3d supports same padding only");
    // Output is the conv-input side of the geometry.
    const int B = input.dim(0);
    const int Ti = input.dim(1) * kernel.stride[0];
    const int Hi = input.dim(2) * kernel.stride[1];
    const int Wi = input.dim(3) * kernel.stride[2];
    const Geom g = make_geom(B, Ti, Hi, Wi, C2, C1, S, P, Q, kernel.stride, kernel.padding);
    Tensor out({B, Ti, Hi, Wi, C2});
    const std::vector<float> wg = pack_gather(kernel.weights);
    core_adjoint(g, input.data(), wg, kernel.bias.data(), act, out.data());
    LayerCache cache;
    cache.input = input;
    cache.out = out;
    return {std::move(out), std::move(cache)};
}

KernelGrads deconv3d_backward(const Tensor& grad_out, const LayerCache& cache,
                              const Conv3DKernel& kernel, Activation act) {
    validate_kernel(kernel);
    const int C1 = kernel.weights.dim(0), C2 = kernel.weights.dim(1);
    const int S = kernel.weights.dim(2), P = kernel.weights.dim(3), Q = kernel.weights.dim(4);
    check_contract(cache.input.rank() == 5 && cache.out.rank() == 5,
                   "deconv3d cache does not hold forward tensors");
    check_contract(cache.input.dim(4) == C1 && cache.out.dim(4) == C2,
                   "deconv3d cache/kernel mismatch");
    check_contract(grad_out.same_shape(cache.out), "deconv3d grad_out shape mismatch");
    const int B = cache.out.dim(0);
    const Geom g = make_geom(B, cache.out.dim(1), cache.out.dim(2), cache.out.dim(3), C2, C1, S, P,
                             Q, kernel.stride, kernel.padding);
    check_contract(g.To == cache.input.dim(1) && g.Ho == cache.input.dim(2) &&
                       g.Wo == cache.input.dim(3),
                   "deconv3d cache geometry mismatch");

    const Tensor dpre = elementwise_dpre(grad_out, cache.out, act);

    KernelGrads grads;
    const std::vector<double> db = channel_sum(dpre, C2);
    grads.bias = Tensor({C2});
    for (int c = 0; c < C2; ++c) grads.bias[c] = static_cast<float>(db[static_cast<std::size_t>(c)]);

    // Gradients flow through the defining convolution: dInput is a plain
    // convolution of dpre, dW accumulates taps of dpre against the input.
    grads.input = Tensor(cache.input.shape());
    const std::vector<float> wf = pack_forward(kernel.weights);
    core_forward(g, dpre.data(), wf, nullptr, Activation::linear, grads.input.data());

    grads.weights = unpack_wgrad(core_wgrad(g, dpre.data(), cache.input.data()), C1, C2, S, P, Q);
    return grads;
}

std::pair<Tensor, LayerCache> dense_forward(const Tensor& input, const Tensor& weights,
                                            const Tensor& bias, Activation act) {
    check_contract(input.rank() == 2, "dense input must be (B, n)");
    check_contract(weights.rank() == 2, "dense weights must be (n, m)");
    const int B = input.dim(0), n = input.dim(1), m = weights.dim(1);
    check_contract(weights.dim(0) == n, "dense weights do not match input width");
    check_contract(bias.rank() == 1 && bias.dim(0) == m, "dense bias must have length m");
    Tensor out({B, m});
    sgemm(B, m, n, input.data(), n, weights.data(), m, out.data(), m, false);
    apply_bias_act(out.data(), static_cast<std::size_t>(B), m, bias.data(), act);
    LayerCache cache;
    cache.input = input;
    cache.out = out;
    return {std::move(out), std::move(cache)};
}

DenseGrads dense_backward(const Tensor& grad_out, const LayerCache& cache, const Tensor& weights,
                          Activation act) {
    check_contract(cache.input.rank() == 2 && cache.out.rank() == 2,
                   "dense cache does not hold forward tensors");
    check_contract(grad_out.same_shape(cache.out), "dense grad_out shape mismatch");
    const int B = cache.input.dim(0), n = cache.input.dim(1), m = cache.out.dim(1);
    check_contract(weights.rank() == 2 && weights.dim(0) == n && weights.dim(1) == m,
                   "dense cache/weights mismatch");
    const Tensor dpre = elementwise_dpre(grad_out, cache.out, act);
    DenseGrads grads;
    grads.weights = Tensor({n, m});
    sgemm_atb_acc(n, m, B, cache.input.data(), n, dpre.data(), m, grads.weights.data(), m);
    grads.bias = Tensor({m});
    const std::vector<double> db = channel_sum(dpre, m);
    for (int j = 0; j < m; ++j) grads.bias[j] = static_cast<float>(db[static_cast<std::size_t>(j)]);
    grads.input = Tensor({B, n});
    sgemm_abt(B, n, m, dpre.data(), m, weights.data(), m, grads.input.data(), n, false);
    return grads;
}

std::pair<Tensor, LayerCache> dropout_forward(const Tensor& input, float rate, Rng& rng,
                                              bool training) {
    check_contract(rate >= 0.0f && rate < 1.0f, "dropout rate must be in [0, 1)");
    LayerCache cache;
    cache.rate = rate;
    if (!training || rate == 0.0f) {
        return {input, std::move(cache)};
    }
    Tensor out(input.shape());
    cache.keep.resize(static_cast<std::size_t>(input.size()));
    const float scale = 1.0f / (1.0f - rate);
    const float* in = input.data();
    float* op = out.data();
    // Mask draws are sequential in element order so results are independent
    // of kernel threading.
    for (std::int64_t i = 0; i < input.size(); ++i) {
        const bool keep = rng.next_float() >= rate;
        cache.keep[static_cast<std::size_t>(i)] = keep ? 1 : 0;
        op[i] = keep ? in[i] * scale : 0.0f;
    }
    return {std::move(out), std::move(cache)};
}

Tensor dropout_backward(const Tensor& grad_out, const LayerCache& cache) {
    if (cache.keep.empty()) return grad_out;
    check_contract(grad_out.size() == static_cast<std::int64_t>(cache.keep.size()),
                   "dropout grad_out does not match cached mask");
    Tensor grad_in(grad_out.shape());
    const float scale = 1.0f / (1.0f - cache.rate);
    const float* go = grad_out.data();
    float* gi = grad_in.data();
    for (std::int64_t i = 0; i < grad_out.size(); ++i) {
        gi[i] = cache.keep[static_cast<std::size_t>(i)] ? go[i] * scale : 0.0f;
    }
    return grad_in;
}

}  // namespace stcae
