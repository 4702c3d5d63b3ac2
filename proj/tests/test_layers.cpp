#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "layers.hpp"
#include "support.hpp"

using namespace stcae;
using testsup::check_gradient;
using testsup::naive_conv3d;
using testsup::random_tensor;

namespace {

Conv3DKernel make_kernel(Tensor w, Triple stride = {1, 1, 1}, Padding pad = Padding::same) {
    Conv3DKernel k;
    k.bias = Tensor({w.dim(0)});
    k.weights = std::move(w);
    k.stride = stride;
    k.padding = pad;
    return k;
}

}  // namespace

TEST_CASE("conv3d: 1x1x1 identity kernel reproduces the input") {
    Rng rng(1);
    const Tensor in = random_tensor({2, 3, 4, 4, 1}, rng);
    Conv3DKernel k = make_kernel(Tensor({1, 1, 1, 1, 1}, {1.0f}));
    auto [out, cache] = conv3d_forward(in, k, Activation::linear);
    REQUIRE(out.same_shape(in));
    for (std::int64_t i = 0; i < in.size(); ++i) CHECK(out[i] == doctest::Approx(in[i]));
}

TEST_CASE("conv3d: all-ones field sums to the filter volume in the interior") {
    Tensor in({1, 8, 8, 8, 1});
    in.fill(1.0f);
    Tensor w({1, 1, 5, 3, 3});
    w.fill(1.0f);
    auto [out, cache] = conv3d_forward(in, make_kernel(std::move(w)), Activation::linear);
    REQUIRE(out.shape() == std::vector<int>{1, 8, 8, 8, 1});
    for (int t = 2; t <= 5; ++t)
        for (int y = 2; y <= 5; ++y)
            for (int x = 2; x <= 5; ++x) {
                const std::int64_t idx = ((static_cast<std::int64_t>(t) * 8 + y) * 8 + x);
                CHECK(out[idx] == doctest::Approx(45.0f).epsilon(1e-6));
            }
}

TEST_CASE("conv3d matches the seven-loop oracle") {
    Rng rng(2);
    const Tensor in = random_tensor({1, 4, 6, 6, 2}, rng);
    Tensor w = random_tensor({2, 2, 5, 3, 3}, rng);
    Tensor bias = random_tensor({2}, rng);

    SUBCASE("same padding, stride 1, relu") {
        Conv3DKernel k = make_kernel(w);
        k.bias = bias;
        auto [out, cache] = conv3d_forward(in, k, Activation::relu);
        const Tensor ref = naive_conv3d(in, w, bias, {1, 1, 1}, true, Activation::relu);
        REQUIRE(out.same_shape(ref));
        for (std::int64_t i = 0; i < out.size(); ++i)
            CHECK(std::abs(out[i] - ref[i]) < 1e-5);
    }
    SUBCASE("same padding, stride 2") {
        Conv3DKernel k = make_kernel(w, {2, 2, 2});
        k.bias = bias;
        auto [out, cache] = conv3d_forward(in, k, Activation::linear);
        const Tensor ref = naive_conv3d(in, w, bias, {2, 2, 2}, true, Activation::linear);
        REQUIRE(out.shape() == std::vector<int>{1, 2, 3, 3, 2});
        for (std::int64_t i = 0; i < out.size(); ++i)
            CHECK(std::abs(out[i] - ref[i]) < 1e-5);
    }
    SUBCASE("valid padding") {
        Tensor w3 = random_tensor({2, 2, 3, 3, 3}, rng);
        Conv3DKernel k = make_kernel(w3, {1, 1, 1}, Padding::valid);
        auto [out, cache] = conv3d_forward(in, k, Activation::linear);
        const Tensor ref = naive_conv3d(in, w3, k.bias, {1, 1, 1}, false, Activation::linear);
        REQUIRE(out.shape() == std::vector<int>{1, 2, 4, 4, 2});
        for (std::int64_t i = 0; i < out.size(); ++i)
            CHECK(std::abs(out[i] - ref[i]) < 1e-5);
    }
}

TEST_CASE("conv3d rejects channel mismatches") {
    Tensor in({1, 4, 4, 4, 3});
    Conv3DKernel k = make_kernel(Tensor({2, 2, 3, 3, 3}));
    CHECK_THROWS_AS(conv3d_forward(in, k, Activation::linear), Error);
}

TEST_CASE("conv3d backward: zero grad gives zero gradients; identity chain rule") {
    Rng rng(3);
    const Tensor in = random_tensor({1, 3, 4, 4, 2}, rng);
    Conv3DKernel k = make_kernel(random_tensor({2, 2, 3, 3, 3}, rng));
    auto [out, cache] = conv3d_forward(in, k, Activation::linear);

    Tensor zeros(out.shape());
    const KernelGrads g0 = conv3d_backward(zeros, cache, k, Activation::linear);
    for (std::int64_t i = 0; i < g0.input.size(); ++i) CHECK(g0.input[i] == 0.0f);
    for (std::int64_t i = 0; i < g0.weights.size(); ++i) CHECK(g0.weights[i] == 0.0f);
    for (std::int64_t i = 0; i < g0.bias.size(); ++i) CHECK(g0.bias[i] == 0.0f);

    // loss = sum(output) through a 1x1x1 identity kernel -> dL/dinput = 1
    Conv3DKernel id = make_kernel(Tensor({1, 1, 1, 1, 1}, {1.0f}));
    auto [out1, cache1] = conv3d_forward(in.reshaped({1, 3, 4, 4, 2}).reshaped({1, 3, 4, 8, 1}),
                                         id, Activation::linear);
    Tensor ones(out1.shape());
    ones.fill(1.0f);
    const KernelGrads g1 = conv3d_backward(ones, cache1, id, Activation::linear);
    for (std::int64_t i = 0; i < g1.input.size(); ++i) CHECK(g1.input[i] == 1.0f);
}

TEST_CASE("conv3d gradients match central finite differences") {
    Rng rng(4);
    Tensor in = random_tensor({1, 3, 4, 4, 2}, rng);
    Tensor w = random_tensor({2, 2, 3, 3, 3}, rng, -0.5f, 0.5f);
    Tensor bias = random_tensor({2}, rng, -0.2f, 0.2f);
    const Tensor coeff = random_tensor({1, 3, 4, 4, 2}, rng);

    for (Activation act : {Activation::linear, Activation::relu, Activation::tanh}) {
        CAPTURE(static_cast<int>(act));
        Conv3DKernel k;
        k.weights = w;
        k.bias = bias;
        auto loss = [&]() {
            auto [out, cache] = conv3d_forward(in, k, act);
            return testsup::dot(coeff, out);
        };
        auto [out, cache] = conv3d_forward(in, k, act);
        const KernelGrads g = conv3d_backward(coeff, cache, k, act);
        CHECK(check_gradient(k.weights, g.weights, loss) <= 1e-3);
        CHECK(check_gradient(k.bias, g.bias, loss) <= 1e-3);
        CHECK(check_gradient(in, g.input, loss) <= 1e-3);
    }
}

TEST_CASE("maxpool3d reproduces the architecture table extents") {
    Tensor big({1, 8, 64, 64, 16});
    auto [out222, c1] = maxpool3d_forward(big, {2, 2, 2}, {2, 2, 2});
    CHECK(out222.shape() == std::vector<int>{1, 4, 32, 32, 16});
    auto [out122, c2] = maxpool3d_forward(big, {1, 2, 2}, {1, 2, 2});
    CHECK(out122.shape() == std::vector<int>{1, 8, 32, 32, 16});

    // ceil semantics on odd extents
    Tensor odd({1, 3, 5, 5, 2});
    auto [out_odd, c3] = maxpool3d_forward(odd, {2, 2, 2}, {2, 2, 2});
    CHECK(out_odd.shape() == std::vector<int>{1, 2, 3, 3, 2});
}

TEST_CASE("maxpool3d: constant input ties resolve to the first window element") {
    Tensor in({1, 4, 4, 4, 1});
    in.fill(3.5f);
    auto [out, cache] = maxpool3d_forward(in, {2, 2, 2}, {2, 2, 2});
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 3.5f);
    Tensor ones(out.shape());
    ones.fill(1.0f);
    const Tensor gin = maxpool3d_backward(ones, cache);
    // first element of each 2x2x2 window is at even (t,y,x)
    for (int t = 0; t < 4; ++t)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const float expect = (t % 2 == 0 && y % 2 == 0 && x % 2 == 0) ? 1.0f : 0.0f;
                CHECK(gin[(static_cast<std::int64_t>(t) * 4 + y) * 4 + x] == expect);
            }
}

TEST_CASE("maxpool3d backward routes exactly one unit per window and passes FD") {
    Rng rng(5);
    Tensor in = random_tensor({1, 4, 6, 6, 2}, rng);
    auto [out, cache] = maxpool3d_forward(in, {2, 2, 2}, {2, 2, 2});

    Tensor ones(out.shape());
    ones.fill(1.0f);
    const Tensor gin = maxpool3d_backward(ones, cache);
    double total = 0.0;
    for (std::int64_t i = 0; i < gin.size(); ++i) {
        CHECK((gin[i] == 0.0f || gin[i] == 1.0f));
        total += gin[i];
    }
    CHECK(total == doctest::Approx(static_cast<double>(out.size())));

    Tensor zero(out.shape());
    const Tensor gz = maxpool3d_backward(zero, cache);
    for (std::int64_t i = 0; i < gz.size(); ++i) CHECK(gz[i] == 0.0f);

    const Tensor coeff = random_tensor(out.shape(), rng);
    auto loss = [&]() {
        auto [o, c] = maxpool3d_forward(in, {2, 2, 2}, {2, 2, 2});
        return testsup::dot(coeff, o);
    };
    const Tensor g = maxpool3d_backward(coeff, cache);
    CHECK(check_gradient(in, g, loss) <= 1e-3);
}

TEST_CASE("upsample3d repeats elements and its backward is the block sum") {
    Tensor small({1, 2, 16, 16, 8});
    CHECK(upsample3d_forward(small, {2, 2, 2}).shape() == std::vector<int>{1, 4, 32, 32, 8});

    Tensor one({1, 1, 1, 1, 1}, {2.5f});
    const Tensor up = upsample3d_forward(one, {1, 2, 2});
    REQUIRE(up.shape() == std::vector<int>{1, 1, 2, 2, 1});
    for (std::int64_t i = 0; i < 4; ++i) CHECK(up[i] == 2.5f);

    Rng rng(6);
    Tensor in = random_tensor({1, 2, 3, 3, 2}, rng);
    const Tensor coeff = random_tensor({1, 4, 6, 6, 2}, rng);
    auto loss = [&]() { return testsup::dot(coeff, upsample3d_forward(in, {2, 2, 2})); };
    const Tensor g = upsample3d_backward(coeff, {2, 2, 2});
    CHECK(check_gradient(in, g, loss) <= 1e-3);
}

TEST_CASE("upsample then maxpool with the same factor is the identity") {
    Rng rng(7);
    const Tensor base = random_tensor({1, 2, 4, 4, 3}, rng);
    for (Triple f : {Triple{2, 2, 2}, Triple{1, 2, 2}}) {
        const Tensor up = upsample3d_forward(base, f);
        auto [down, cache] = maxpool3d_forward(up, f, f);
        REQUIRE(down.same_shape(base));
        for (std::int64_t i = 0; i < base.size(); ++i) CHECK(down[i] == base[i]);
    }
}

TEST_CASE("deconv3d geometry: stride doubles extents, zero input gives zero output") {
    Tensor in({1, 2, 16, 16, 8});
    Conv3DKernel k;
    k.weights = Tensor({8, 8, 5, 3, 3});
    k.bias = Tensor({8});
    k.stride = {2, 2, 2};
    auto [out, cache] = deconv3d_forward(in, k, Activation::linear);
    CHECK(out.shape() == std::vector<int>{1, 4, 32, 32, 8});
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("deconv3d is the linear adjoint of conv3d with shared weights") {
    Rng rng(8);
    for (Triple stride : {Triple{1, 1, 1}, Triple{2, 2, 2}}) {
        CAPTURE(stride[0]);
        Conv3DKernel k;
        k.weights = random_tensor({4, 3, 3, 3, 3}, rng);
        k.bias = Tensor({4});
        k.stride = stride;
        const Tensor x = random_tensor({1, 4, 8, 8, 3}, rng);
        auto [cx, cache1] = conv3d_forward(x, k, Activation::linear);
        const Tensor y = random_tensor(cx.shape(), rng);

        Conv3DKernel kt = k;
        kt.bias = Tensor({3});  // bias on the produced (channel-3) side, zero
        auto [dy, cache2] = deconv3d_forward(y, kt, Activation::linear);
        REQUIRE(dy.same_shape(x));

        const double lhs = testsup::dot(cx, y);
        const double rhs = testsup::dot(x, dy);
        CHECK(std::abs(lhs - rhs) <= 1e-4 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("deconv3d gradients match central finite differences") {
    Rng rng(9);
    Tensor in = random_tensor({1, 2, 3, 3, 2}, rng);
    Conv3DKernel k;
    k.weights = random_tensor({2, 3, 3, 3, 3}, rng, -0.5f, 0.5f);
    k.bias = random_tensor({3}, rng, -0.2f, 0.2f);
    k.stride = {2, 2, 2};
    const Tensor coeff = random_tensor({1, 4, 6, 6, 3}, rng);
    for (Activation act : {Activation::linear, Activation::relu, Activation::tanh}) {
        CAPTURE(static_cast<int>(act));
        auto loss = [&]() {
            auto [out, cache] = deconv3d_forward(in, k, act);
            return testsup::dot(coeff, out);
        };
        auto [out, cache] = deconv3d_forward(in, k, act);
        const KernelGrads g = deconv3d_backward(coeff, cache, k, act);
        CHECK(check_gradient(k.weights, g.weights, loss) <= 1e-3);
        CHECK(check_gradient(k.bias, g.bias, loss) <= 1e-3);
        CHECK(check_gradient(in, g.input, loss) <= 1e-3);
    }
}

TEST_CASE("dense: identity, constant-bias rows, and FD gradients") {
    Rng rng(10);
    Tensor in = random_tensor({3, 4}, rng);

    Tensor eye({4, 4});
    for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
    auto [out, cache] = dense_forward(in, eye, Tensor({4}), Activation::linear);
    for (std::int64_t i = 0; i < in.size(); ++i) CHECK(out[i] == doctest::Approx(in[i]));

    Tensor zero_w({4, 2});
    Tensor b({2}, {0.5f, -1.5f});
    auto [outb, cacheb] = dense_forward(in, zero_w, b, Activation::linear);
    for (int r = 0; r < 3; ++r) {
        CHECK(outb[r * 2] == 0.5f);
        CHECK(outb[r * 2 + 1] == -1.5f);
    }

    Tensor w = random_tensor({4, 5}, rng, -0.5f, 0.5f);
    Tensor bias = random_tensor({5}, rng, -0.2f, 0.2f);
    const Tensor coeff = random_tensor({3, 5}, rng);
    for (Activation act : {Activation::linear, Activation::relu, Activation::tanh}) {
        auto loss = [&]() {
            auto [o, c] = dense_forward(in, w, bias, act);
            return testsup::dot(coeff, o);
        };
        auto [o, c] = dense_forward(in, w, bias, act);
        const DenseGrads g = dense_backward(coeff, c, w, act);
        CHECK(check_gradient(w, g.weights, loss) <= 1e-3);
        CHECK(check_gradient(bias, g.bias, loss) <= 1e-3);
        CHECK(check_gradient(in, g.input, loss) <= 1e-3);
    }
}

TEST_CASE("dropout: rate 0 and inference are the identity; rate >= 1 rejected") {
    Rng rng(11);
    const Tensor in = random_tensor({10, 10}, rng);
    {
        Rng r(1);
        auto [out, cache] = dropout_forward(in, 0.0f, r, true);
        for (std::int64_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
    }
    {
        Rng r(1);
        auto [out, cache] = dropout_forward(in, 0.25f, r, false);
        for (std::int64_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
    }
    Rng r(1);
    CHECK_THROWS_AS(dropout_forward(in, 1.0f, r, true), Error);
}

TEST_CASE("dropout statistics over 1e5 elements and determinism") {
    Rng data_rng(12);
    const Tensor in = random_tensor({100000}, data_rng, 0.5f, 1.5f);
    Rng r1(99), r2(99);
    auto [out, cache] = dropout_forward(in, 0.25f, r1, true);
    auto [out2, cache2] = dropout_forward(in, 0.25f, r2, true);
    for (std::int64_t i = 0; i < 100; ++i) CHECK(out[i] == out2[i]);

    std::int64_t zeros = 0;
    double mean_in = 0.0, mean_out = 0.0;
    for (std::int64_t i = 0; i < in.size(); ++i) {
        zeros += out[i] == 0.0f ? 1 : 0;
        mean_in += in[i];
        mean_out += out[i];
    }
    const double frac = static_cast<double>(zeros) / static_cast<double>(in.size());
    CHECK(frac == doctest::Approx(0.25).epsilon(0.04));
    CHECK(std::abs(frac - 0.25) < 0.01);
    CHECK(mean_out / in.size() == doctest::Approx(mean_in / in.size()).epsilon(0.02));

    // backward scales kept elements by 1/(1-rate)
    Tensor ones(in.shape());
    ones.fill(1.0f);
    const Tensor g = dropout_backward(ones, cache);
    for (std::int64_t i = 0; i < 100; ++i) {
        if (out[i] == 0.0f) CHECK(g[i] == 0.0f);
        else CHECK(g[i] == doctest::Approx(1.0f / 0.75f));
    }
}
