#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "shardnn/act.hpp"
#include "shardnn/oracle.hpp"
#include "helpers.hpp"

#include <cmath>

using namespace shardnn;
using namespace shardnn::testing;

namespace {

double gelu(double x) { return oracle_gelu(x); }
double relu(double x) { return oracle_relu(x); }

}  // namespace

TEST_CASE("basis recursion values") {
    Engine eng(EngineConfig{.initial_level = 16});
    SlotVector x = eng.encode({0.5, -1.0, 0.0, 1.0});
    auto t = cheb_basis(eng, x, 5);
    CHECK(t[2].slots[0] == doctest::Approx(-0.5).epsilon(1e-15));  // 2*0.25 - 1
    // T5 at -1, 0, 1 via the cos(5 arccos x) oracle.
    CHECK(t[5].slots[1] == doctest::Approx(std::cos(5 * std::acos(-1.0))).epsilon(1e-12));
    CHECK(t[5].slots[2] == doctest::Approx(std::cos(5 * std::acos(0.0))).epsilon(1e-12));
    CHECK(t[5].slots[3] == doctest::Approx(std::cos(5 * std::acos(1.0))).epsilon(1e-12));
}

TEST_CASE("tree-built basis agrees with cos(k arccos x) and stays bounded") {
    Engine eng(EngineConfig{.initial_level = 16});
    std::vector<double> grid;
    for (int i = 0; i < 256; ++i) grid.push_back(-1.0 + 2.0 * i / 255.0);
    SlotVector x = eng.encode(grid);
    auto t = cheb_basis(eng, x, 64);
    for (std::size_t k = 0; k <= 64; ++k) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double ref = std::cos(static_cast<double>(k) * std::acos(grid[i]));
            CHECK(std::abs(t[k].slots[i] - ref) < 1e-10);
            CHECK(std::abs(t[k].slots[i]) <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("basis depth is logarithmic") {
    for (auto [n, depth] : {std::pair<std::size_t, int>{59, 6}, {27, 5}, {32, 5}, {8, 3}}) {
        Engine eng(EngineConfig{.initial_level = 16});
        SlotVector x = eng.encode({0.3});
        (void)cheb_basis(eng, x, n);
        CHECK(eng.ledger().max_depth_consumed.load() == depth);
    }
}

TEST_CASE("interpolation basics") {
    ChebPoly lin = cheb_interpolate([](double x) { return x; }, 1, 1.0);
    CHECK(lin.coeffs[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(lin.coeffs[1] == doctest::Approx(1.0).epsilon(1e-15));

    // A function equals its own interpolant up to float eps.
    ChebPoly p = cheb_interpolate(gelu, 40, 8.0);
    auto self = [&](double x) { return cheb_eval(p, x); };
    CHECK(max_abs_error(p, self, 20000) < 1e-11);
}

TEST_CASE("approximation error table on [-16, 16]") {
    CHECK(max_abs_error(cheb_interpolate(gelu, 27, 16.0), gelu) ==
          doctest::Approx(0.0794).epsilon(0.0125));
    CHECK(max_abs_error(cheb_interpolate(gelu, 59, 16.0), gelu) ==
          doctest::Approx(0.0002).epsilon(0.25));
    CHECK(max_abs_error(cheb_interpolate(relu, 27, 16.0), relu) ==
          doctest::Approx(0.2862).epsilon(0.0105));
    CHECK(max_abs_error(cheb_interpolate(relu, 59, 16.0), relu) ==
          doctest::Approx(0.1334).epsilon(0.015));
}

TEST_CASE("homomorphic evaluation equals plain evaluation slotwise") {
    Engine eng(EngineConfig{.initial_level = 16});
    std::mt19937_64 rng(71);
    ChebPoly p = cheb_interpolate(gelu, 27, 10.0);
    auto xs = random_values(rng, 64, -10.0, 10.0);
    std::vector<double> scaled = xs;
    for (double& v : scaled) v /= 10.0;
    SlotVector pre = eng.encode(scaled);
    SlotVector y = eval_chebyshev(eng, pre, p, /*prescaled=*/true);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(y.slots[i] == doctest::Approx(cheb_eval(p, xs[i])).epsilon(1e-9));

    // Unprescaled path spends one extra level on x/B.
    SlotVector raw = eng.encode(xs);
    SlotVector y2 = eval_chebyshev(eng, raw, p, /*prescaled=*/false);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(y2.slots[i] == doctest::Approx(cheb_eval(p, xs[i])).epsilon(1e-9));
    CHECK(y2.level == raw.level - 6);
    CHECK(y.level == pre.level - 5);
}

TEST_CASE("series evaluation depth: 6 at degree 59, 5 at degree 27") {
    for (auto [deg, depth] : {std::pair<std::size_t, int>{59, 6}, {27, 5}}) {
        Engine eng(EngineConfig{.initial_level = 16});
        ChebPoly p = cheb_interpolate(gelu, deg, 16.0);
        SlotVector x = eng.encode({0.25, -0.75});
        (void)eval_chebyshev(eng, x, p, /*prescaled=*/true);
        CHECK(eng.ledger().max_depth_consumed.load() == depth);
    }
}

TEST_CASE("identity polynomial applies as identity") {
    Engine eng(EngineConfig{.initial_level = 8});
    ChebPoly lin;
    lin.bound = 4.0;
    lin.coeffs = {0.0, 4.0};  // x = B * T1(x/B)
    ImageTensor t(1, 2);
    t.data = {0.5, -1.5, 2.0, 3.0};
    PackedImage p = pack(eng, t, 4);
    PackedImage out = apply_activation(eng, p, lin, /*prescaled=*/false);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(out.shards[0].slots[i] == doctest::Approx(t.data[i]).epsilon(1e-12));
}

TEST_CASE("degree-59 GELU activation tracks exact GELU within the table error") {
    Engine eng(EngineConfig{.initial_level = 16});
    ChebPoly p = cheb_interpolate(gelu, 59, 16.0);
    std::vector<double> xs;
    for (int i = 0; i <= 127; ++i) xs.push_back(-16.0 + 32.0 * i / 127.0);
    ImageTensor t(1, 8);
    for (std::size_t i = 0; i < 64; ++i) t.data[i] = xs[i];
    PackedImage packed = pack(eng, t, 64);
    PackedImage out = apply_activation(eng, packed, p, /*prescaled=*/false);
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(std::abs(out.shards[0].slots[i] - gelu(xs[i])) <= 0.0002 + 1e-6);
}

TEST_CASE("activation requires enough level") {
    Engine eng(EngineConfig{.initial_level = 3});
    ChebPoly p = cheb_interpolate(gelu, 27, 10.0);
    SlotVector x = eng.encode({0.1});
    CHECK_THROWS_WITH((void)eval_chebyshev(eng, x, p, true),
                      "insufficient level for activation: bootstrap required");
}

TEST_CASE("activation applies across channel shards and preserves metadata") {
    Engine eng(EngineConfig{.initial_level = 16});
    std::mt19937_64 rng(72);
    ImageTensor t = random_tensor(rng, 2, 8, -6.0, 6.0);
    PackedImage p = pack(eng, t, 16);
    REQUIRE(p.mode == ShardMode::ChannelShard);
    ChebPoly poly = cheb_interpolate(gelu, 27, 8.0);
    PackedImage out = apply_activation(eng, p, poly, /*prescaled=*/false);
    CHECK(out.mode == ShardMode::ChannelShard);
    CHECK(out.shards.size() == p.shards.size());
    ImageTensor expect = t;
    for (double& v : expect.data) v = cheb_eval(poly, v);
    CHECK(max_abs_diff(unpack(out), expect) < 1e-9);
}

TEST_CASE("padding garbage does not leak into valid slots") {
    Engine eng(EngineConfig{.initial_level = 8});
    ChebPoly p = cheb_interpolate(gelu, 9, 4.0);
    SlotVector a = eng.encode({0.5, 99.0, -0.25, -99.0});
    SlotVector b = eng.encode({0.5, -7.0, -0.25, 3.0});
    SlotVector ya = eval_chebyshev(eng, a, p, true);
    SlotVector yb = eval_chebyshev(eng, b, p, true);
    CHECK(ya.slots[0] == yb.slots[0]);
    CHECK(ya.slots[2] == yb.slots[2]);
}

TEST_CASE("remez minimax beats Chebyshev nodes and matches the reference table") {
    MinimaxResult g27 = remez_minimax(gelu, 27, 16.0);
    CHECK(g27.max_error == doctest::Approx(0.0267).epsilon(0.10));
    MinimaxResult r27 = remez_minimax(relu, 27, 16.0);
    CHECK(r27.max_error == doctest::Approx(0.0866).epsilon(0.10));
    MinimaxResult r59 = remez_minimax(relu, 59, 16.0);
    CHECK(r59.max_error == doctest::Approx(0.0391).epsilon(0.10));
    // The converged exchange lands below 1e-4 and beats node interpolation.
    MinimaxResult g59 = remez_minimax(gelu, 59, 16.0);
    CHECK(g59.max_error <= 0.00011);
    CHECK(g59.max_error < max_abs_error(cheb_interpolate(gelu, 59, 16.0), gelu));
}
