#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rng.hpp"
#include "tensor.hpp"

using stcae::Tensor;

TEST_CASE("shape and data length stay consistent") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(1) == 3);
    for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);

    CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f, 3.0f}), stcae::Error);
    CHECK_THROWS_AS(Tensor({0, 3}), stcae::Error);
    CHECK_THROWS_AS(Tensor({2, -1}), stcae::Error);
}

TEST_CASE("reshape preserves elements and rejects count changes") {
    Tensor t({2, 6}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    Tensor r = t.reshaped({3, 4});
    CHECK(r.dim(0) == 3);
    for (std::int64_t i = 0; i < 12; ++i) CHECK(r[i] == t[i]);
    CHECK_THROWS_AS(t.reshaped({5, 2}), stcae::Error);
}

TEST_CASE("rng streams are reproducible and split streams differ") {
    stcae::Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    stcae::Rng s1 = a.split(1);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= s1.next_u64() != c.next_u64();
    CHECK(any_diff);
}

TEST_CASE("rng uniform stays in range and below is unbiased-ish") {
    stcae::Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        const float v = r.uniform(-2.0f, 3.0f);
        CHECK(v >= -2.0f);
        CHECK(v < 3.0f);
    }
    int counts[5] = {0};
    for (int i = 0; i < 50000; ++i) counts[r.below(5)]++;
    for (int k = 0; k < 5; ++k) CHECK(counts[k] > 9000);
}
