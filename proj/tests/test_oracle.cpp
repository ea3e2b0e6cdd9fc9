#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "shardnn/oracle.hpp"
#include "helpers.hpp"

using namespace shardnn;
using namespace shardnn::testing;

TEST_CASE("identity and scaling kernels") {
    std::mt19937_64 rng(5);
    ImageTensor t = random_tensor(rng, 3, 4);  // oracle has no power-of-two constraint
    CHECK(max_abs_diff(oracle_conv(t, FilterTensor::identity(3, 3)), t) == 0.0);

    FilterTensor scale2(3, 3, 1);
    for (std::size_t f = 0; f < 3; ++f) scale2.centered(f, f, 0, 0) = 2.0;
    ImageTensor doubled = t;
    for (double& v : doubled.data) v *= 2.0;
    CHECK(max_abs_diff(oracle_conv(t, scale2), doubled) == 0.0);
}

TEST_CASE("hand-checked 3x3 window sums on a 4x4 channel") {
    ImageTensor t(1, 4);
    for (std::size_t i = 0; i < 16; ++i) t.data[i] = static_cast<double>(i + 1);
    FilterTensor ones(1, 1, 3);
    for (auto& w : ones.weights) w = 1.0;
    ImageTensor out = oracle_conv(t, ones);
    // Corner (0,0): 1+2+5+6; center (1,1): sum of the 3x3 block at rows 0-2.
    CHECK(out.at(0, 0, 0) == 1 + 2 + 5 + 6);
    CHECK(out.at(0, 1, 1) == 1 + 2 + 3 + 5 + 6 + 7 + 9 + 10 + 11);
    CHECK(out.at(0, 3, 3) == 11 + 12 + 15 + 16);
}

TEST_CASE("stride-2 picks even-offset windows") {
    std::mt19937_64 rng(6);
    ImageTensor t = random_tensor(rng, 2, 4);
    FilterTensor k = random_filter(rng, 2, 2, 3);
    ImageTensor full = oracle_conv(t, k, 1);
    ImageTensor strided = oracle_conv(t, k, 2);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                CHECK(strided.at(g, i, j) == full.at(g, 2 * i, 2 * j));
}

TEST_CASE("conv is bilinear") {
    std::mt19937_64 rng(7);
    ImageTensor a = random_tensor(rng, 2, 4), b = random_tensor(rng, 2, 4);
    FilterTensor k = random_filter(rng, 2, 3, 3);
    ImageTensor lin(2, 4);
    for (std::size_t i = 0; i < lin.data.size(); ++i)
        lin.data[i] = 2.0 * a.data[i] - 3.0 * b.data[i];
    ImageTensor lhs = oracle_conv(lin, k);
    ImageTensor ca = oracle_conv(a, k), cb = oracle_conv(b, k);
    ImageTensor rhs(3, 4);
    for (std::size_t i = 0; i < rhs.data.size(); ++i)
        rhs.data[i] = 2.0 * ca.data[i] - 3.0 * cb.data[i];
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("average pooling") {
    ImageTensor t(1, 4);
    for (std::size_t i = 0; i < 16; ++i) t.data[i] = static_cast<double>(i + 1);
    ImageTensor pooled = oracle_avgpool2x2(t);
    CHECK(pooled.data == std::vector<double>{3.5, 5.5, 11.5, 13.5});

    // Commutes with scalar multiplication.
    std::mt19937_64 rng(8);
    ImageTensor r = random_tensor(rng, 2, 8);
    ImageTensor scaled = r;
    for (double& v : scaled.data) v *= 5.0;
    ImageTensor lhs = oracle_avgpool2x2(scaled);
    ImageTensor rhs = oracle_avgpool2x2(r);
    for (double& v : rhs.data) v *= 5.0;
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("linear and pool-linear") {
    LinearWeights w(2, 3);
    w.w = {1, 0, 0, 1, 1, 1};
    w.b = {0.5, -1};
    CHECK(oracle_linear({2, 3, 4}, w) == std::vector<double>{2.5, 8});

    ImageTensor t(3, 2);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < 4; ++i) t.data[ch * 4 + i] = static_cast<double>(ch + 1);
    CHECK(oracle_pool_linear(t, w) == std::vector<double>{1.5, 5.0});
}

TEST_CASE("gelu reference values") {
    CHECK(oracle_gelu(0.0) == 0.0);
    CHECK(oracle_gelu(10.0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(oracle_gelu(-10.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(oracle_gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(oracle_relu(-2.0) == 0.0);
    CHECK(oracle_relu(2.0) == 2.0);
}
