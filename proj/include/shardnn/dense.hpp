#pragma once

#include "shardnn/emu.hpp"
#include "shardnn/pack.hpp"
#include "shardnn/tensor.hpp"

namespace shardnn {

/// Folds an inference-time batch norm into the preceding convolution's
/// weights and bias. Plain algebra, no homomorphic cost.
std::pair<FilterTensor, std::vector<double>> fold_bn(const FilterTensor& k,
                                                     const std::vector<double>& bias,
                                                     const AffineParams& bn);

/// Rotate-and-add block summation: log2(block) rotations, after which
/// every block-aligned slot holds its block's sum (all slots when
/// block == s, since the windows wrap the whole vector).
SlotVector slot_sum(Engine& eng, const SlotVector& v, std::size_t block);

/// W x + b over the logical features of the packed image; output features
/// land in slots 0..out_features-1 of a single vector, zeros elsewhere.
/// Weights are routed through tau and the first replica of each channel.
SlotVector linear(Engine& eng, const PackedImage& p, const LinearWeights& w);

/// Fused global-average-pool + linear: weights over per-channel means,
/// expanded across each channel's m^2 slots and divided by m^2.
SlotVector pool_linear(Engine& eng, const PackedImage& p, const LinearWeights& w);

}  // namespace shardnn
