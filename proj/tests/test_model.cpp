#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "checkpoint.hpp"
#include "model.hpp"
#include "support.hpp"

using namespace stcae;
using testsup::random_tensor;

namespace {

using Row = std::pair<std::string, std::vector<int>>;

void check_table(Variant v, const std::vector<Row>& expected) {
    const auto rows = shape_table(build_model(v));
    REQUIRE(rows.size() == expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(i);
        CHECK(rows[i].first == expected[i].first);
        CHECK(rows[i].second == expected[i].second);
    }
}

// Narrow DSTCAE for gradient checks: same layer pattern, width 2, small input.
ModelSpec tiny_dstcae() {
    ModelSpec spec = build_model(Variant::dstcae_upsampling);
    spec.name = "tiny";
    spec.input_shape = {4, 8, 8, 1};
    for (LayerSpec& l : spec.layers) {
        if (l.kind == LayerKind::conv3d && l.units > 1) l.units = 2;
    }
    return spec;
}

}  // namespace

TEST_CASE("shape table: DSTCAE-UpSampling") {
    check_table(Variant::dstcae_upsampling, {
        {"Input", {8, 64, 64, 1}},
        {"3D Convolution", {8, 64, 64, 16}},
        {"3D Max-pooling", {4, 32, 32, 16}},
        {"3D Convolution", {4, 32, 32, 8}},
        {"3D Max-pooling", {2, 16, 16, 8}},
        {"3D Convolution", {2, 16, 16, 8}},
        {"3D UpSampling", {4, 32, 32, 8}},
        {"3D Convolution", {4, 32, 32, 16}},
        {"3D UpSampling", {8, 64, 64, 16}},
        {"3D Convolution", {8, 64, 64, 1}},
    });
}

TEST_CASE("shape table: DSTCAE-Deconv ends at the reconstructed window") {
    check_table(Variant::dstcae_deconv, {
        {"Input", {8, 64, 64, 1}},
        {"3D Convolution", {8, 64, 64, 16}},
        {"3D Max-pooling", {4, 32, 32, 16}},
        {"3D Convolution", {4, 32, 32, 8}},
        {"3D Max-pooling", {2, 16, 16, 8}},
        {"3D Deconvolution", {4, 32, 32, 8}},
        {"3D Deconvolution", {8, 64, 64, 16}},
        {"3D Deconvolution", {8, 64, 64, 1}},
    });
}

TEST_CASE("shape table: DSTCAE-C3D") {
    check_table(Variant::dstcae_c3d, {
        {"Input", {8, 64, 64, 1}},
        {"3D Convolution", {8, 64, 64, 16}},
        {"3D Max-pooling", {8, 32, 32, 16}},
        {"3D Convolution", {8, 32, 32, 8}},
        {"3D Max-pooling", {4, 16, 16, 8}},
        {"3D Convolution", {4, 16, 16, 8}},
        {"3D Max-pooling", {2, 8, 8, 8}},
        {"3D Convolution", {2, 8, 8, 8}},
        {"3D UpSampling", {4, 16, 16, 8}},
        {"3D Convolution", {4, 16, 16, 8}},
        {"3D UpSampling", {8, 32, 32, 8}},
        {"3D Convolution", {8, 32, 32, 16}},
        {"3D UpSampling", {8, 64, 64, 16}},
        {"3D Convolution", {8, 64, 64, 1}},
    });
}

TEST_CASE("shape table: CAE variants") {
    check_table(Variant::cae_upsampling, {
        {"Input", {64, 64, 1}},
        {"2D Convolution", {64, 64, 16}},
        {"2D Max-pooling", {32, 32, 16}},
        {"2D Convolution", {32, 32, 8}},
        {"2D Max-pooling", {16, 16, 8}},
        {"2D Convolution", {16, 16, 8}},
        {"2D Max-pooling", {8, 8, 8}},
        {"2D Convolution", {8, 8, 8}},
        {"2D UpSampling", {16, 16, 8}},
        {"2D Convolution", {16, 16, 8}},
        {"2D UpSampling", {32, 32, 8}},
        {"2D Convolution", {32, 32, 16}},
        {"2D UpSampling", {64, 64, 16}},
        {"2D Convolution", {64, 64, 1}},
    });
    check_table(Variant::cae_deconv, {
        {"Input", {64, 64, 1}},
        {"2D Convolution", {64, 64, 16}},
        {"2D Max-pooling", {32, 32, 16}},
        {"2D Convolution", {32, 32, 8}},
        {"2D Max-pooling", {16, 16, 8}},
        {"2D Convolution", {16, 16, 8}},
        {"2D Max-pooling", {8, 8, 8}},
        {"2D Deconvolution", {16, 16, 8}},
        {"2D Deconvolution", {32, 32, 8}},
        {"2D Deconvolution", {64, 64, 16}},
        {"2D Deconvolution", {64, 64, 1}},
    });
}

TEST_CASE("shape table: DAE bottleneck and mirror") {
    check_table(Variant::dae, {
        {"Input", {64, 64, 1}},
        {"Flatten", {4096}},
        {"Fully Connected", {150}},
        {"Fully Connected", {100}},
        {"Fully Connected", {50}},
        {"Fully Connected", {100}},
        {"Fully Connected", {150}},
        {"Fully Connected", {4096}},
        {"Reshape", {64, 64, 1}},
    });
}

TEST_CASE("variant names round-trip and unknown names are rejected") {
    for (Variant v : {Variant::dstcae_upsampling, Variant::dstcae_deconv, Variant::dstcae_c3d,
                      Variant::cae_upsampling, Variant::cae_deconv, Variant::dae}) {
        CHECK(variant_from_name(variant_name(v)) == v);
    }
    CHECK(!variant_from_name("clstmae").has_value());
}

TEST_CASE("every variant reconstructs its input shape with outputs in [-1,1]") {
    Rng data_rng(20);
    for (Variant v : {Variant::dstcae_upsampling, Variant::dstcae_deconv, Variant::dstcae_c3d,
                      Variant::cae_upsampling, Variant::cae_deconv, Variant::dae}) {
        CAPTURE(variant_name(v));
        const ModelSpec spec = build_model(v);
        const ModelParams params = init_params(spec, 1);
        std::vector<int> bshape{2};
        bshape.insert(bshape.end(), spec.input_shape.begin(), spec.input_shape.end());
        const Tensor input = random_tensor(bshape, data_rng);
        Rng rng(3);
        auto [out, caches] = model_forward(spec, params, input, false, rng);
        CHECK(out.same_shape(input));
        for (std::int64_t i = 0; i < out.size(); ++i) {
            REQUIRE(out[i] >= -1.0f);
            REQUIRE(out[i] <= 1.0f);
        }
    }
}

TEST_CASE("all-zero parameters give an identically-zero reconstruction") {
    const ModelSpec spec = build_model(Variant::dstcae_deconv);
    ModelParams params = init_params(spec, 1);
    for (auto& l : params.layers) {
        if (!l.weights.empty()) {
            l.weights.fill(0.0f);
            l.bias.fill(0.0f);
        }
    }
    Rng data_rng(21), rng(4);
    const Tensor input = random_tensor({1, 8, 64, 64, 1}, data_rng);
    auto [out, caches] = model_forward(spec, params, input, false, rng);
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("forward and backward are deterministic given the rng state") {
    const ModelSpec spec = tiny_dstcae();
    const ModelParams params = init_params(spec, 9);
    Rng data_rng(22);
    const Tensor input = random_tensor({2, 4, 8, 8, 1}, data_rng);
    const Tensor gout = random_tensor({2, 4, 8, 8, 1}, data_rng);

    Rng r1(77), r2(77);
    auto [o1, c1] = model_forward(spec, params, input, true, r1);
    auto [o2, c2] = model_forward(spec, params, input, true, r2);
    REQUIRE(o1.same_shape(o2));
    for (std::int64_t i = 0; i < o1.size(); ++i) REQUIRE(o1[i] == o2[i]);

    const ModelGrads g1 = model_backward(spec, params, c1, gout);
    const ModelGrads g2 = model_backward(spec, params, c2, gout);
    for (std::size_t l = 0; l < g1.params.layers.size(); ++l) {
        const Tensor& w1 = g1.params.layers[l].weights;
        const Tensor& w2 = g2.params.layers[l].weights;
        REQUIRE(w1.size() == w2.size());
        for (std::int64_t i = 0; i < w1.size(); ++i) REQUIRE(w1[i] == w2[i]);
    }
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
    const ModelSpec spec = tiny_dstcae();
    const ModelParams params = init_params(spec, 2);
    Rng data_rng(23), rng(5);
    const Tensor input = random_tensor({1, 4, 8, 8, 1}, data_rng);
    auto [out, caches] = model_forward(spec, params, input, false, rng);
    const ModelGrads g = model_backward(spec, params, caches, Tensor(out.shape()));
    for (const auto& l : g.params.layers) {
        for (std::int64_t i = 0; i < l.weights.size(); ++i) CHECK(l.weights[i] == 0.0f);
        for (std::int64_t i = 0; i < l.bias.size(); ++i) CHECK(l.bias[i] == 0.0f);
    }
}

TEST_CASE("end-to-end gradients of a shrunken DSTCAE match finite differences") {
    const ModelSpec spec = tiny_dstcae();
    ModelParams params = init_params(spec, 3);
    Rng data_rng(24);
    const Tensor input = random_tensor({1, 4, 8, 8, 1}, data_rng);
    const Tensor coeff = random_tensor({1, 4, 8, 8, 1}, data_rng);

    auto loss = [&]() {
        Rng rng(0);
        auto [out, caches] = model_forward(spec, params, input, false, rng);
        return testsup::dot(coeff, out);
    };
    Rng rng(0);
    auto [out, caches] = model_forward(spec, params, input, false, rng);
    const ModelGrads grads = model_backward(spec, params, caches, coeff);

    // sample at most 500 parameters across all layers, evenly strided
    std::int64_t total = 0;
    for (const auto& l : params.layers) total += l.weights.size() + l.bias.size();
    const std::int64_t step = std::max<std::int64_t>(1, total / 500);
    const float eps = 1e-3f;
    double worst = 0.0;
    std::int64_t flat = 0, checked = 0;
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        for (int which = 0; which < 2; ++which) {
            Tensor& theta = which == 0 ? params.layers[li].weights : params.layers[li].bias;
            const Tensor& g = which == 0 ? grads.params.layers[li].weights
                                         : grads.params.layers[li].bias;
            for (std::int64_t i = 0; i < theta.size(); ++i, ++flat) {
                if (flat % step != 0) continue;
                const float orig = theta[i];
                theta[i] = orig + eps;
                const double fp = loss();
                theta[i] = orig - eps;
                const double fm = loss();
                theta[i] = orig;
                const double fd = (fp - fm) / (2.0 * eps);
                worst = std::max(worst, testsup::rel_err(g[i], fd));
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
    CHECK(worst <= 1e-2);
}

TEST_CASE("checkpoint round-trip is bit-exact and reloads into an identical forward") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "stcae_ckpt_test";
    fs::create_directories(dir);
    const std::string path = (dir / "model.stcae").string();

    const ModelSpec spec = build_model(Variant::dstcae_c3d);
    const ModelParams params = init_params(spec, 1234);
    save_checkpoint(path, spec, params);
    auto [spec2, params2] = load_checkpoint(path);
    CHECK(spec2.name == spec.name);
    REQUIRE(params2.layers.size() == params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const Tensor& a = params.layers[i].weights;
        const Tensor& b = params2.layers[i].weights;
        REQUIRE(a.size() == b.size());
        for (std::int64_t k = 0; k < a.size(); ++k) REQUIRE(a[k] == b[k]);
    }

    Rng data_rng(25);
    const Tensor input = random_tensor({1, 8, 64, 64, 1}, data_rng);
    Rng r1(0), r2(0);
    auto [o1, c1] = model_forward(spec, params, input, false, r1);
    auto [o2, c2] = model_forward(spec2, params2, input, false, r2);
    for (std::int64_t i = 0; i < o1.size(); ++i) REQUIRE(o1[i] == o2[i]);

    SUBCASE("corrupt magic is rejected as a checkpoint error") {
        const std::string bad = (dir / "bad.stcae").string();
        std::FILE* f = std::fopen(bad.c_str(), "wb");
        std::fputs("NOTACHECKPOINT", f);
        std::fclose(f);
        CHECK_THROWS_AS(load_checkpoint(bad), Error);
        try {
            load_checkpoint(bad);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::checkpoint);
        }
    }
}

TEST_CASE("model input validation") {
    const ModelSpec spec = build_model(Variant::dstcae_upsampling);
    const ModelParams params = init_params(spec, 1);
    Rng rng(0);
    Tensor wrong({1, 4, 64, 64, 1});
    CHECK_THROWS_AS(model_forward(spec, params, wrong, false, rng), Error);
}
