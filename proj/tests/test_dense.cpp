#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "shardnn/conv.hpp"
#include "shardnn/dense.hpp"
#include "shardnn/oracle.hpp"
#include "shardnn/pool.hpp"
#include "helpers.hpp"

using namespace shardnn;
using namespace shardnn::testing;

TEST_CASE("batch norm folding is exact and homomorphically free") {
    std::mt19937_64 rng(61);
    Engine eng;

    FilterTensor k = random_filter(rng, 2, 2, 3);
    std::vector<double> bias = {0.3, -0.7};

    AffineParams identity{{1.0, 1.0}, {0.0, 0.0}};
    auto [k_id, b_id] = fold_bn(k, bias, identity);
    CHECK(k_id.weights == k.weights);
    CHECK(b_id == bias);

    AffineParams doubling{{2.0, 2.0}, {0.0, 0.0}};
    auto [k2, b2] = fold_bn(k, bias, doubling);
    for (std::size_t i = 0; i < k.weights.size(); ++i)
        CHECK(k2.weights[i] == 2.0 * k.weights[i]);

    const auto before = eng.ledger().snapshot();
    AffineParams bn{{1.7, -0.4}, {0.25, 1.1}};
    auto [kf, bf] = fold_bn(k, bias, bn);
    CHECK(eng.ledger().snapshot() == before);  // zero homomorphic cost

    // Folded conv equals conv followed by the affine, on the oracle.
    ImageTensor t = random_tensor(rng, 2, 4);
    ImageTensor via_fold = oracle_conv(t, kf);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < 16; ++i) via_fold.data[g * 16 + i] += bf[g];
    ImageTensor direct = oracle_conv(t, k);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < 16; ++i)
            direct.data[g * 16 + i] = bn.scale[g] * (direct.data[g * 16 + i] + bias[g]) + bn.bias[g];
    CHECK(max_abs_diff(via_fold, direct) < 1e-12);

    CHECK_THROWS(fold_bn(k, bias, AffineParams{{1.0}, {0.0}}));
}

TEST_CASE("slot_sum: block sums in logarithmically many rotations") {
    Engine eng;
    SlotVector v = eng.encode({1, 2, 3, 4});
    eng.ledger().reset();
    SlotVector summed = slot_sum(eng, v, 4);
    CHECK(summed.slots == std::vector<double>{10, 10, 10, 10});
    CHECK(eng.ledger().rotations.load() == 2);

    eng.ledger().reset();
    SlotVector same = slot_sum(eng, v, 1);
    CHECK(same.slots == v.slots);
    CHECK(eng.ledger().rotations.load() == 0);

    // Block-aligned slots hold their block's sum.
    std::mt19937_64 rng(62);
    auto vals = random_values(rng, 16);
    SlotVector w = eng.encode(vals);
    eng.ledger().reset();
    SlotVector blocks = slot_sum(eng, w, 4);
    CHECK(eng.ledger().rotations.load() == 2);
    for (std::size_t b = 0; b < 4; ++b) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 4; ++i) expect += vals[b * 4 + i];
        CHECK(blocks.slots[b * 4] == doctest::Approx(expect).epsilon(1e-12));
    }

    // Slot 0 equals the plaintext sum of the whole vector.
    double total = 0.0;
    for (double x : vals) total += x;
    CHECK(slot_sum(eng, w, 16).slots[0] == doctest::Approx(total).epsilon(1e-12));

    CHECK_THROWS(slot_sum(eng, v, 3));
}

TEST_CASE("linear layer: identity, all-ones and random against the oracle") {
    Engine eng;
    std::mt19937_64 rng(63);

    ImageTensor t = random_tensor(rng, 2, 2);
    PackedImage p = pack(eng, t, 8);

    LinearWeights id(8, 8);
    for (std::size_t i = 0; i < 8; ++i) id.at(i, i) = 1.0;
    SlotVector out = linear(eng, p, id);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(out.slots[i] == doctest::Approx(t.data[i]).epsilon(1e-12));

    LinearWeights ones(1, 8);
    for (std::size_t i = 0; i < 8; ++i) ones.at(0, i) = 1.0;
    double total = 0.0;
    for (double x : t.data) total += x;
    CHECK(linear(eng, p, ones).slots[0] == doctest::Approx(total).epsilon(1e-12));

    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = 4, m = 4;
        ImageTensor img = random_tensor(rng, c, m);
        LinearWeights w(3, c * m * m);
        w.w = random_values(rng, w.w.size());
        w.b = random_values(rng, 3);
        // Across shards, with duplication, and with a permutation.
        for (std::size_t s : {32u, 64u, 128u}) {
            PackedImage packed = pack(eng, img, s);
            if (packed.shards.size() == 1)
                packed = with_permuted_channels(packed, random_permutation(rng, c));
            SlotVector got = linear(eng, packed, w);
            auto expect = oracle_linear(flatten(img), w);
            for (std::size_t o = 0; o < 3; ++o)
                CHECK(got.slots[o] == doctest::Approx(expect[o]).epsilon(1e-9));
            for (std::size_t i = 3; i < got.size(); ++i) CHECK(got.slots[i] == 0.0);
        }
    }
}

TEST_CASE("linear over channel shards matches the oracle") {
    Engine eng;
    std::mt19937_64 rng(67);
    ImageTensor t = random_tensor(rng, 2, 8);
    PackedImage p = pack(eng, t, 16);
    REQUIRE(p.mode == ShardMode::ChannelShard);
    LinearWeights w(4, 2 * 64);
    w.w = random_values(rng, w.w.size());
    w.b = random_values(rng, 4);
    SlotVector got = linear(eng, p, w);
    auto expect = oracle_linear(flatten(t), w);
    for (std::size_t o = 0; o < 4; ++o)
        CHECK(got.slots[o] == doctest::Approx(expect[o]).epsilon(1e-9));
}

TEST_CASE("linear layer rotation count follows the slot_sum contract") {
    Engine eng;
    std::mt19937_64 rng(64);
    ImageTensor t = random_tensor(rng, 2, 4);
    PackedImage p = pack(eng, t, 32);
    LinearWeights w(4, 32);
    w.w = random_values(rng, w.w.size());
    eng.ledger().reset();
    (void)linear(eng, p, w);
    CHECK(eng.ledger().rotations.load() == 4 * 1 * 5);  // out x shards x log2(s)
    CHECK(eng.ledger().max_depth_consumed.load() == 2);
}

TEST_CASE("pool-linear equals linear over channel means") {
    Engine eng;
    std::mt19937_64 rng(65);

    // Constant channel with identity weights returns the constant.
    ImageTensor flat(1, 4);
    for (double& v : flat.data) v = 2.5;
    LinearWeights w1(1, 1);
    w1.at(0, 0) = 1.0;
    CHECK(pool_linear(eng, pack(eng, flat, 16), w1).slots[0] == doctest::Approx(2.5));

    // Identity over channel means equals global average pooling.
    ImageTensor t = random_tensor(rng, 4, 4);
    LinearWeights id(4, 4);
    for (std::size_t i = 0; i < 4; ++i) id.at(i, i) = 1.0;
    SlotVector got = pool_linear(eng, pack(eng, t, 64), id);
    auto expect = oracle_pool_linear(t, id);
    for (std::size_t o = 0; o < 4; ++o)
        CHECK(got.slots[o] == doctest::Approx(expect[o]).epsilon(1e-12));

    // Random instances across image shards and sharding regimes.
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = 8, m = 4;
        ImageTensor img = random_tensor(rng, c, m);
        LinearWeights w(5, c);
        w.w = random_values(rng, w.w.size());
        w.b = random_values(rng, 5);
        for (std::size_t s : {32u, 64u, 256u}) {
            SlotVector out = pool_linear(eng, pack(eng, img, s), w);
            auto oracle = oracle_pool_linear(img, w);
            for (std::size_t o = 0; o < 5; ++o)
                CHECK(out.slots[o] == doctest::Approx(oracle[o]).epsilon(1e-9));
        }
    }

    // Channel-sharded input.
    ImageTensor big = random_tensor(rng, 2, 8);
    LinearWeights wc(3, 2);
    wc.w = random_values(rng, wc.w.size());
    wc.b = random_values(rng, 3);
    SlotVector out = pool_linear(eng, pack(eng, big, 16), wc);
    auto oracle = oracle_pool_linear(big, wc);
    for (std::size_t o = 0; o < 3; ++o)
        CHECK(out.slots[o] == doctest::Approx(oracle[o]).epsilon(1e-9));

    CHECK_THROWS(pool_linear(eng, pack(eng, big, 16), LinearWeights(3, 5)));
}

TEST_CASE("linear after pooling consumes the permuted layout correctly") {
    Engine eng;
    std::mt19937_64 rng(66);
    ImageTensor t = random_tensor(rng, 8, 4);
    PackedImage pooled = pool(eng, pack(eng, t, 32));  // permuted tau, duplication
    ImageTensor expect_t = oracle_avgpool2x2(t);
    LinearWeights w(4, 8);
    w.w = random_values(rng, w.w.size());
    w.b = random_values(rng, 4);
    SlotVector got = pool_linear(eng, pooled, w);
    auto expect = oracle_pool_linear(expect_t, w);
    for (std::size_t o = 0; o < 4; ++o)
        CHECK(got.slots[o] == doctest::Approx(expect[o]).epsilon(1e-9));
}
