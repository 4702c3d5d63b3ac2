// Shared test helpers: independent brute-force oracles and a central
// finite-difference checker. Everything here is deliberately written as
// plain nested loops against the documented contracts, not via the library's
// own kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "layers.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace testsup {

inline stcae::Tensor random_tensor(std::vector<int> shape, stcae::Rng& rng, float lo = -1.0f,
                                   float hi = 1.0f) {
    stcae::Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Seven-nested-loop reference for 3D convolution, double accumulation.
inline stcae::Tensor naive_conv3d(const stcae::Tensor& in, const stcae::Tensor& w,
                                  const stcae::Tensor& bias, std::array<int, 3> stride,
                                  bool same_padding, stcae::Activation act) {
    const int B = in.dim(0), Ti = in.dim(1), Hi = in.dim(2), Wi = in.dim(3), Ci = in.dim(4);
    const int Co = w.dim(0), S = w.dim(2), P = w.dim(3), Q = w.dim(4);
    const int st = stride[0], sh = stride[1], sw = stride[2];
    auto out_extent = [&](int n, int k, int s) {
        return same_padding ? (n + s - 1) / s : (n - k) / s + 1;
    };
    auto lead_pad = [&](int n, int o, int k, int s) {
        if (!same_padding) return 0;
        const int total = std::max((o - 1) * s + k - n, 0);
        return total / 2;
    };
    const int To = out_extent(Ti, S, st), Ho = out_extent(Hi, P, sh), Wo = out_extent(Wi, Q, sw);
    const int padt = lead_pad(Ti, To, S, st), padh = lead_pad(Hi, Ho, P, sh),
              padw = lead_pad(Wi, Wo, Q, sw);
    stcae::Tensor out({B, To, Ho, Wo, Co});
    auto in_at = [&](int b, int t, int y, int x, int c) -> double {
        if (t < 0 || t >= Ti || y < 0 || y >= Hi || x < 0 || x >= Wi) return 0.0;
        return in[((((static_cast<std::int64_t>(b) * Ti + t) * Hi + y) * Wi + x) * Ci + c)];
    };
    std::int64_t o = 0;
    for (int b = 0; b < B; ++b)
        for (int to = 0; to < To; ++to)
            for (int yo = 0; yo < Ho; ++yo)
                for (int xo = 0; xo < Wo; ++xo)
                    for (int co = 0; co < Co; ++co, ++o) {
                        double acc = bias[co];
                        for (int ci = 0; ci < Ci; ++ci)
                            for (int s = 0; s < S; ++s)
                                for (int p = 0; p < P; ++p)
                                    for (int q = 0; q < Q; ++q)
                                        acc += w[((((static_cast<std::int64_t>(co) * Ci + ci) * S +
                                                    s) * P + p) * Q + q)] *
                                               in_at(b, to * st - padt + s, yo * sh - padh + p,
                                                     xo * sw - padw + q, ci);
                        out[o] = stcae::apply_activation(act, static_cast<float>(acc));
                    }
    return out;
}

inline double dot(const stcae::Tensor& a, const stcae::Tensor& b) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

// |a-b| relative to max(1, |a|, |b|), the usual gradient-check normalizer.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences of `loss` w.r.t. every element of `theta`,
// compared against `analytic`. Returns the worst relative error.
inline double check_gradient(stcae::Tensor& theta, const stcae::Tensor& analytic,
                             const std::function<double()>& loss, float eps = 1e-3f) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < theta.size(); ++i) {
        const float orig = theta[i];
        theta[i] = orig + eps;
        const double fp = loss();
        theta[i] = orig - eps;
        const double fm = loss();
        theta[i] = orig;
        const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
        worst = std::max(worst, rel_err(analytic[i], fd));
    }
    return worst;
}

// In-memory moving-blob windows, (T, H, H, 1) each, for small training runs.
inline std::vector<stcae::Tensor> blob_windows(int count, int length, int extent,
                                               stcae::Rng& rng) {
    std::vector<stcae::Tensor> windows;
    windows.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        const double cy = rng.uniform(2.0f, extent - 3.0f);
        double cx = rng.uniform(1.5f, extent - 2.5f);
        const double vx = rng.uniform(-0.8f, 0.8f);
        stcae::Tensor w({length, extent, extent, 1});
        std::int64_t i = 0;
        for (int t = 0; t < length; ++t) {
            const double px = cx + vx * t;
            for (int y = 0; y < extent; ++y)
                for (int x = 0; x < extent; ++x, ++i) {
                    const double d2 = (x - px) * (x - px) + (y - cy) * (y - cy);
                    w[i] = static_cast<float>(std::exp(-d2 / 2.0) - 0.1);
                }
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace testsup
