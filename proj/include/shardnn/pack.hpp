#pragma once

#include "shardnn/emu.hpp"
#include "shardnn/tensor.hpp"

#include <cstddef>
#include <numeric>
#include <vector>

namespace shardnn {

enum class ShardMode { ImageShard, ChannelShard };

/// A sharded packing of an image tensor.
///
/// ImageShard mode (m^2 <= s): every shard holds s/m^2 channel blocks of
/// m^2 slots each. Counting blocks globally across shards, block g holds
/// logical channel tau((g / rep) % c). Freshly packed images use rep = 1
/// (d whole copies of the channel sequence, concatenated); pooling emits
/// runs of rep consecutive replicas, with rep dividing d.
///
/// ChannelShard mode (m^2 > s): each shard holds rows_per_shard = s/m
/// consecutive rows of a single channel, shards ordered channel-major;
/// d = 1, rep = 1, tau = identity.
struct PackedImage {
    std::vector<SlotVector> shards;
    std::size_t m = 0;
    std::size_t c = 0;
    std::size_t d = 1;
    std::size_t rep = 1;
    std::vector<std::size_t> tau;  // physical channel position -> logical channel
    ShardMode mode = ShardMode::ImageShard;
    std::size_t rows_per_shard = 0;  // ChannelShard only

    std::size_t shard_size() const { return shards.empty() ? 0 : shards[0].size(); }
    std::size_t block_size() const { return m * m; }
    /// Channel blocks per shard (ImageShard mode).
    std::size_t blocks_per_shard() const { return shard_size() / block_size(); }
    std::size_t total_blocks() const { return shards.size() * blocks_per_shard(); }
    /// Shards per channel (ChannelShard mode).
    std::size_t shards_per_channel() const { return (m * m) / shard_size(); }

    /// Logical channel stored in global block g (ImageShard mode).
    std::size_t block_channel(std::size_t g) const { return tau[(g / rep) % c]; }
    /// True for the first physical copy of each channel.
    bool is_primary_block(std::size_t g) const { return g < c * rep && g % rep == 0; }

    int min_level() const {
        int lv = shards.empty() ? 0 : shards[0].level;
        for (const auto& sh : shards) lv = std::min(lv, sh.level);
        return lv;
    }

    static std::vector<std::size_t> identity_tau(std::size_t c) {
        std::vector<std::size_t> t(c);
        std::iota(t.begin(), t.end(), 0);
        return t;
    }
};

/// Row-major channel packing into shards of size s, duplicating channels
/// when they underfill a single shard.
PackedImage pack(Engine& eng, const ImageTensor& t, std::size_t s);

/// Exact inverse of pack for any valid PackedImage (reads channels through
/// tau and the first replica of each channel).
ImageTensor unpack(const PackedImage& p);

/// Validates the metadata invariants; throws on inconsistency.
void check_metadata(const PackedImage& p);

/// Maps every physical slot to its logical flat feature index
/// (channel * m^2 + row * m + col), or -1 for padding and duplicate
/// replicas. Indexed [shard][slot].
std::vector<std::vector<long>> slot_feature_map(const PackedImage& p);

/// Test fixture helper: physically reorders the channel blocks of a
/// single-shard image so that physical position g holds logical channel
/// sigma(g), recording sigma as tau. Plain data movement, no ledger cost.
PackedImage with_permuted_channels(const PackedImage& p, const std::vector<std::size_t>& sigma);

}  // namespace shardnn
