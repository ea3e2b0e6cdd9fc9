#pragma once

#include "shardnn/emu.hpp"
#include "shardnn/pack.hpp"

#include <optional>

namespace shardnn {

/// Downsampled-but-not-yet-consolidated image: geometry is still the old
/// m x m, with each channel's pooled (m/2)^2 quarter packed at the front
/// of its block (image shards) or each shard's pooled rows packed at its
/// front (channel shards). Channel shards holding only odd rows produce
/// no data and are left empty.
struct Downsampled {
    PackedImage meta;  // original metadata; its shards field is not used
    std::vector<std::optional<SlotVector>> shards;
};

/// Consolidated image with final metadata. When the valid data does not
/// fill the shard, dup_copies > 1 replicas at dup_stride slots are still
/// owed to complete the layout.
struct Consolidated {
    PackedImage image;
    std::size_t dup_copies = 1;
    std::size_t dup_stride = 0;
};

/// The 2x2 window-sum convolution that opens pooling: one fused
/// mask-and-kernel multiply per window offset, one level. Exposed so its
/// depth can be measured on its own.
std::vector<SlotVector> pool_window_conv(Engine& eng, const PackedImage& p);

/// Window averaging plus horizontal/vertical reduction; each channel's
/// pooled quarter lands at the front of its block, zeros elsewhere.
Downsampled downsample(Engine& eng, const PackedImage& p, double output_scale = 1.0);

/// Sums each group of four consecutive downsampled shards (two when only
/// two exist) under block-size rotations, composing the induced channel
/// permutation into tau. A single-shard input passes through untouched.
Consolidated consolidate(Engine& eng, const Downsampled& d);

/// Fills the owed replicas of a partially-valid consolidated shard by
/// adding shifted copies. Errors when the shard is already full.
PackedImage duplicate_channels(Engine& eng, const Consolidated& c);

/// 2x2 stride-2 average pooling: downsample, consolidate, duplicate.
PackedImage pool(Engine& eng, const PackedImage& p, double output_scale = 1.0);

/// The pooling pipeline without the window sum: selects the top-left
/// element of every 2x2 window and repacks. Composing a stride-1
/// convolution with this yields a stride-2 convolution.
PackedImage subsample_stride2(Engine& eng, const PackedImage& p, double output_scale = 1.0);

}  // namespace shardnn
