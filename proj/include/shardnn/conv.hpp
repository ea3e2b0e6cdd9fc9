#pragma once

#include "shardnn/emu.hpp"
#include "shardnn/pack.hpp"
#include "shardnn/tensor.hpp"

namespace shardnn {

/// Order in which a single-shard convolution materializes its rotations.
/// Both plans produce bit-identical slots and the same multiply count;
/// they differ in rotation reuse:
///   ChannelFirst computes the kappa^2 shifted copies once and applies the
///   channel rotations to each, touching only kappa^2 + c distinct
///   rotation amounts.
///   ShiftFirst rotates channels first and then shifts each rotated copy,
///   so the shifts of one copy form a hoistable same-source batch.
enum class ConvPlan { ChannelFirst, ShiftFirst };

/// Precomputed shift operator S_{k,l}: the cyclic rotation amount plus the
/// binary mask zeroing every slot whose source wrapped past a row or
/// channel boundary.
struct ShiftPlan {
    long k = 0;
    long l = 0;
    long rotation = 0;  // k*m + l
    std::vector<double> mask;
};

ShiftPlan make_shift_plan(std::size_t shard_size, std::size_t m, long k, long l);

/// Per-channel matrix shift (rows up by k, columns left by l, zero fill),
/// applied to every channel block of the shard at once. One rotation plus
/// one mask multiply; the identity shift is free.
SlotVector shift_shard(Engine& eng, const SlotVector& shard, std::size_t m, long k, long l);

/// Same-padding stride-1 convolution of one standalone channel (an m^2
/// slot vector) with a single kernel. Consumes one level.
SlotVector conv_single(Engine& eng, const SlotVector& channel, std::size_t m,
                       const FilterTensor& kernel);

/// Multichannel convolution of a one-shard image; all output channels are
/// computed at once via partial convolutions (channel rotations by
/// multiples of m^2 slots). Honors duplication and the channel
/// permutation; output channels land in identity order. The output must
/// fit in one shard. One level.
PackedImage conv_single_shard(Engine& eng, const PackedImage& p, const FilterTensor& k,
                              const std::vector<double>& bias = {}, double output_scale = 1.0);

/// Image-shard convolution: output shard v sums the partial convolutions
/// of every input shard against the matching filter slice.
PackedImage conv_image_shards(Engine& eng, const PackedImage& p, const FilterTensor& k,
                              const std::vector<double>& bias = {}, double output_scale = 1.0);

/// Channel-shard convolution. Row shifts pull rows across shard
/// boundaries: each summand combines the in-shard rotation with the
/// complementary-masked rotation of the adjacent shard, with zero standing
/// in for the missing neighbor at the image border. Cyclic rotations are
/// cached and shared between both uses. One level.
PackedImage conv_channel_shards(Engine& eng, const PackedImage& p, const FilterTensor& k,
                                const std::vector<double>& bias = {}, double output_scale = 1.0);

/// Mode dispatch over the three variants above.
PackedImage convolve(Engine& eng, const PackedImage& p, const FilterTensor& k,
                     const std::vector<double>& bias = {}, double output_scale = 1.0);

/// Single-shard convolution under an explicit execution plan.
PackedImage conv_plan(Engine& eng, const PackedImage& p, const FilterTensor& k, ConvPlan plan,
                      const std::vector<double>& bias = {}, double output_scale = 1.0);

}  // namespace shardnn
