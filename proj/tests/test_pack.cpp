#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "shardnn/pack.hpp"
#include "helpers.hpp"

using namespace shardnn;
using namespace shardnn::testing;

TEST_CASE("row-major single channel packing") {
    Engine eng;
    ImageTensor t(1, 2);
    t.data = {1, 2, 3, 4};

    PackedImage p = pack(eng, t, 4);
    CHECK(p.shards.size() == 1);
    CHECK(p.shards[0].slots == std::vector<double>{1, 2, 3, 4});
    CHECK(p.d == 1);
    CHECK(p.mode == ShardMode::ImageShard);
}

TEST_CASE("duplication factor fills the shard (copy-major)") {
    Engine eng;
    ImageTensor t(1, 2);
    t.data = {1, 2, 3, 4};
    PackedImage p = pack(eng, t, 8);
    CHECK(p.d == 2);
    CHECK(p.shards[0].slots == std::vector<double>{1, 2, 3, 4, 1, 2, 3, 4});

    ImageTensor two(2, 2);
    two.data = {1, 2, 3, 4, 5, 6, 7, 8};
    PackedImage q = pack(eng, two, 16);
    CHECK(q.d == 2);
    // d copies of the whole channel sequence, concatenated.
    CHECK(q.shards[0].slots == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("channel shards hold consecutive rows") {
    Engine eng;
    ImageTensor t(1, 4);
    for (std::size_t i = 0; i < 16; ++i) t.data[i] = static_cast<double>(i + 1);
    PackedImage p = pack(eng, t, 8);
    CHECK(p.mode == ShardMode::ChannelShard);
    CHECK(p.shards.size() == 2);
    CHECK(p.rows_per_shard == 2);
    CHECK(p.shards[0].slots == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(p.shards[1].slots == std::vector<double>{9, 10, 11, 12, 13, 14, 15, 16});
}

TEST_CASE("pack rejects non-power-of-two dimensions") {
    Engine eng;
    CHECK_THROWS(pack(eng, ImageTensor(3, 2), 16));
    CHECK_THROWS(pack(eng, ImageTensor(1, 3), 16));
    CHECK_THROWS(pack(eng, ImageTensor(1, 2), 12));
}

TEST_CASE("round-trip identity over the full regime sweep") {
    Engine eng;
    std::mt19937_64 rng(21);
    int cases = 0;
    for (std::size_t c : {1u, 2u, 4u, 8u}) {
        for (std::size_t m : {2u, 4u, 8u, 16u}) {
            for (std::size_t s = 16; s <= 4096; s *= 4) {
                if (m * m > s && s % m != 0) continue;
                if (m * m > s && (m * m) % s != 0) continue;
                ImageTensor t = random_tensor(rng, c, m);
                PackedImage p = pack(eng, t, s);
                CHECK(max_abs_diff(unpack(p), t) == 0.0);
                ++cases;
            }
        }
    }
    CHECK(cases >= 16);
}

TEST_CASE("duplicated copies are slot-exact replicas") {
    Engine eng;
    std::mt19937_64 rng(22);
    ImageTensor t = random_tensor(rng, 2, 4);
    PackedImage p = pack(eng, t, 256);
    REQUIRE(p.d == 8);
    const std::size_t unit = t.c * t.m * t.m;
    for (std::size_t k = 1; k < p.d; ++k)
        for (std::size_t i = 0; i < unit; ++i)
            CHECK(p.shards[0].slots[k * unit + i] == p.shards[0].slots[i]);
}

TEST_CASE("tau permutation: physical slot g holds logical channel tau(g)") {
    Engine eng;
    ImageTensor t(2, 2);
    t.data = {1, 2, 3, 4, 5, 6, 7, 8};  // channel 0 then channel 1
    PackedImage p = pack(eng, t, 8);

    PackedImage swapped = with_permuted_channels(p, {1, 0});
    CHECK(swapped.shards[0].slots == std::vector<double>{5, 6, 7, 8, 1, 2, 3, 4});
    CHECK(max_abs_diff(unpack(swapped), t) == 0.0);

    std::mt19937_64 rng(23);
    ImageTensor big = random_tensor(rng, 8, 4);
    PackedImage q = with_permuted_channels(pack(eng, big, 256), random_permutation(rng, 8));
    CHECK(max_abs_diff(unpack(q), big) == 0.0);
}

TEST_CASE("metadata validation rejects inconsistent images") {
    Engine eng;
    ImageTensor t(2, 2);
    PackedImage p = pack(eng, t, 8);
    PackedImage bad = p;
    bad.tau = {0, 0};
    CHECK_THROWS(unpack(bad));
    bad = p;
    bad.d = 2;
    CHECK_THROWS(unpack(bad));
    bad = p;
    bad.c = 4;
    CHECK_THROWS(unpack(bad));
}

TEST_CASE("slot feature map covers each logical feature exactly once") {
    Engine eng;
    std::mt19937_64 rng(24);
    for (std::size_t s : {16u, 64u, 256u}) {
        for (std::size_t c : {1u, 2u, 4u}) {
            for (std::size_t m : {2u, 4u, 8u}) {
                if (m * m > s && (m * m) % s != 0) continue;
                ImageTensor t = random_tensor(rng, c, m);
                PackedImage p = pack(eng, t, s);
                auto fm = slot_feature_map(p);
                std::vector<int> seen(c * m * m, 0);
                for (std::size_t u = 0; u < fm.size(); ++u)
                    for (std::size_t i = 0; i < fm[u].size(); ++i)
                        if (fm[u][i] >= 0) {
                            CHECK(p.shards[u].slots[i] ==
                                  t.data[static_cast<std::size_t>(fm[u][i])]);
                            seen[static_cast<std::size_t>(fm[u][i])]++;
                        }
                for (int count : seen) CHECK(count == 1);
            }
        }
    }
}
