#include "shardnn/conv.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace shardnn {

namespace {

bool in_range(long v, long lo, long hi) { return v >= lo && v < hi; }

/// Accumulator that materializes a zero product if nothing was added, so
/// every output shard carries mul-consistent level/depth metadata.
struct Acc {
    std::optional<SlotVector> v;

    void add(Engine& eng, SlotVector term) {
        if (!v)
            v = std::move(term);
        else
            v = eng.add(*v, term);
    }

    SlotVector finish(Engine& eng, const SlotVector& reference) {
        if (!v) v = eng.mul_plain(eng.rotate(reference, 0), std::vector<double>(reference.size(), 0.0));
        return std::move(*v);
    }
};

/// Shared geometry of an image-mode convolution. The fused plaintexts
/// combine the shift mask, the kernel element and any folded output scale
/// into a single vector, which is why a convolution costs one level.
struct ImageConv {
    const PackedImage& p;
    const FilterTensor& k;
    double scale;
    std::size_t s, m, block, z, t, c_out, n_out, r_max;
    long h;

    ImageConv(const PackedImage& p_, const FilterTensor& k_, double scale_)
        : p(p_), k(k_), scale(scale_) {
        if (p.mode != ShardMode::ImageShard)
            throw std::invalid_argument("image-mode convolution requires image shards");
        if (k.c_in != p.c) throw std::invalid_argument("filter input channels do not match image");
        s = p.shard_size();
        m = p.m;
        block = m * m;
        z = p.blocks_per_shard();
        t = p.shards.size();
        c_out = k.c_out;
        if (!is_power_of_two(c_out))
            throw std::invalid_argument("output channel count must be a power of two");
        if (t >= 2 && p.d != 1) throw std::invalid_argument("metadata mismatch: duplicated multi-shard image");
        h = static_cast<long>(k.kappa) / 2;
        if (static_cast<std::size_t>(h) >= m) throw std::invalid_argument("kernel reach exceeds channel size");
        n_out = (c_out <= z) ? 1 : c_out / z;
        r_max = (t == 1) ? p.c : z;
    }

    std::size_t out_channel(std::size_t v, std::size_t b) const { return (v * z + b) % c_out; }

    std::size_t in_channel(std::size_t u, std::size_t r, std::size_t b) const {
        return p.block_channel(u * z + (b + r * p.rep) % z);
    }

    /// Fused plaintext for output shard v against rotation r of input
    /// shard u at shift (kk, ll). Empty when every entry is zero.
    std::vector<double> fused_plain(std::size_t v, std::size_t u, std::size_t r, long kk,
                                    long ll) const {
        std::vector<double> plain(s, 0.0);
        bool any = false;
        for (std::size_t b = 0; b < z; ++b) {
            const double w = k.centered(in_channel(u, r, b), out_channel(v, b), kk, ll) * scale;
            if (w == 0.0) continue;
            any = true;
            const long i_lo = std::max(0L, -kk), i_hi = std::min<long>(m, m - kk);
            const long j_lo = std::max(0L, -ll), j_hi = std::min<long>(m, m - ll);
            for (long i = i_lo; i < i_hi; ++i)
                for (long j = j_lo; j < j_hi; ++j)
                    plain[b * block + static_cast<std::size_t>(i * static_cast<long>(m) + j)] = w;
        }
        if (!any) plain.clear();
        return plain;
    }

    std::vector<double> bias_plain(std::size_t v, const std::vector<double>& bias) const {
        std::vector<double> plain(s, 0.0);
        for (std::size_t b = 0; b < z; ++b) {
            const double val = bias[out_channel(v, b)] * scale;
            std::fill_n(plain.begin() + static_cast<long>(b * block), block, val);
        }
        return plain;
    }

    PackedImage make_output(std::vector<SlotVector> shards) const {
        PackedImage out;
        out.shards = std::move(shards);
        out.m = m;
        out.c = c_out;
        out.d = n_out * z / c_out;
        out.rep = 1;
        out.tau = PackedImage::identity_tau(c_out);
        out.mode = ShardMode::ImageShard;
        return out;
    }
};

PackedImage conv_image_mode(Engine& eng, const PackedImage& p, const FilterTensor& k,
                            std::optional<ConvPlan> plan, const std::vector<double>& bias,
                            double scale) {
    const ImageConv cv(p, k, scale);
    if (!bias.empty() && bias.size() != cv.c_out)
        throw std::invalid_argument("bias size does not match output channels");

    std::vector<Acc> acc(cv.n_out);
    const long mL = static_cast<long>(cv.m);

    for (std::size_t u = 0; u < cv.t; ++u) {
        const SlotVector& src = p.shards[u];

        if (plan == ConvPlan::ChannelFirst) {
            // Shifted copies first, channel rotations of each copy after.
            std::vector<std::optional<SlotVector>> shifted((2 * cv.h + 1) * (2 * cv.h + 1));
            for (std::size_t r = 0; r < cv.r_max; ++r) {
                const long chan_amt = static_cast<long>(r * cv.p.rep * cv.block);
                Acc partial;
                std::size_t idx = 0;
                for (long kk = -cv.h; kk <= cv.h; ++kk) {
                    for (long ll = -cv.h; ll <= cv.h; ++ll, ++idx) {
                        for (std::size_t v = 0; v < cv.n_out; ++v) {
                            auto plain = cv.fused_plain(v, u, r, kk, ll);
                            if (plain.empty()) continue;
                            if (!shifted[idx]) shifted[idx] = eng.rotate(src, kk * mL + ll);
                            SlotVector y = eng.rotate(*shifted[idx], chan_amt);
                            if (cv.n_out == 1)
                                partial.add(eng, eng.mul_plain(y, plain));
                            else
                                acc[v].add(eng, eng.mul_plain(y, plain));
                        }
                    }
                }
                if (cv.n_out == 1 && partial.v) acc[0].add(eng, std::move(*partial.v));
            }
        } else {
            // Channel rotation first; the kappa^2 shifts of each rotated
            // copy are computed once and reused for every output shard.
            for (std::size_t r = 0; r < cv.r_max; ++r) {
                // Collect the plaintexts up front so unused rotations are skipped.
                std::vector<std::vector<std::vector<double>>> plains(cv.n_out);
                std::vector<long> amounts;
                std::vector<std::pair<long, long>> offsets;
                for (long kk = -cv.h; kk <= cv.h; ++kk)
                    for (long ll = -cv.h; ll <= cv.h; ++ll) {
                        offsets.emplace_back(kk, ll);
                        amounts.push_back(kk * mL + ll);
                    }
                bool any = false;
                for (std::size_t v = 0; v < cv.n_out; ++v) {
                    plains[v].resize(offsets.size());
                    for (std::size_t i = 0; i < offsets.size(); ++i) {
                        plains[v][i] = cv.fused_plain(v, u, r, offsets[i].first, offsets[i].second);
                        any = any || !plains[v][i].empty();
                    }
                }
                if (!any) continue;

                const SlotVector x = eng.rotate(src, static_cast<long>(r * cv.p.rep * cv.block));
                std::vector<SlotVector> shifted;
                std::vector<std::size_t> shifted_idx(offsets.size(), SIZE_MAX);
                if (plan == ConvPlan::ShiftFirst) {
                    // Same-source batch, eligible for hoisting.
                    std::vector<long> batch;
                    for (std::size_t i = 0; i < offsets.size(); ++i) {
                        bool used = false;
                        for (std::size_t v = 0; v < cv.n_out; ++v) used = used || !plains[v][i].empty();
                        if (used) {
                            shifted_idx[i] = batch.size();
                            batch.push_back(amounts[i]);
                        }
                    }
                    shifted = eng.rotate_many(x, batch);
                }

                std::vector<Acc> partial(cv.n_out);
                for (std::size_t i = 0; i < offsets.size(); ++i) {
                    std::optional<SlotVector> y;
                    for (std::size_t v = 0; v < cv.n_out; ++v) {
                        if (plains[v][i].empty()) continue;
                        if (!y) {
                            y = (plan == ConvPlan::ShiftFirst) ? shifted[shifted_idx[i]]
                                                               : eng.rotate(x, amounts[i]);
                        }
                        partial[v].add(eng, eng.mul_plain(*y, plains[v][i]));
                    }
                }
                for (std::size_t v = 0; v < cv.n_out; ++v)
                    if (partial[v].v) acc[v].add(eng, std::move(*partial[v].v));
            }
        }
    }

    std::vector<SlotVector> out_shards;
    out_shards.reserve(cv.n_out);
    for (std::size_t v = 0; v < cv.n_out; ++v) {
        SlotVector sh = acc[v].finish(eng, p.shards[0]);
        if (!bias.empty()) sh = eng.add_plain(sh, cv.bias_plain(v, bias));
        out_shards.push_back(std::move(sh));
    }
    return cv.make_output(std::move(out_shards));
}

}  // namespace

ShiftPlan make_shift_plan(std::size_t shard_size, std::size_t m, long k, long l) {
    const long mL = static_cast<long>(m);
    if (std::abs(k) >= mL || std::abs(l) >= mL)
        throw std::invalid_argument("shift magnitude must be smaller than the channel side");
    ShiftPlan plan;
    plan.k = k;
    plan.l = l;
    plan.rotation = k * mL + l;
    plan.mask.assign(shard_size, 0.0);
    const std::size_t block = m * m;
    for (std::size_t b = 0; b * block < shard_size; ++b)
        for (long i = 0; i < mL; ++i)
            for (long j = 0; j < mL; ++j)
                if (in_range(i + k, 0, mL) && in_range(j + l, 0, mL))
                    plan.mask[b * block + static_cast<std::size_t>(i * mL + j)] = 1.0;
    return plan;
}

SlotVector shift_shard(Engine& eng, const SlotVector& shard, std::size_t m, long k, long l) {
    ShiftPlan plan = make_shift_plan(shard.size(), m, k, l);
    SlotVector rotated = eng.rotate(shard, plan.rotation);
    if (k == 0 && l == 0) return rotated;
    return eng.mul_plain(rotated, plan.mask);
}

SlotVector conv_single(Engine& eng, const SlotVector& channel, std::size_t m,
                       const FilterTensor& kernel) {
    if (kernel.c_in != 1 || kernel.c_out != 1)
        throw std::invalid_argument("conv_single expects a single-channel kernel");
    if (channel.size() != m * m) throw std::invalid_argument("channel size mismatch");
    PackedImage p;
    p.shards = {channel};
    p.m = m;
    p.c = 1;
    p.tau = {0};
    p.mode = ShardMode::ImageShard;
    return conv_image_mode(eng, p, kernel, std::nullopt, {}, 1.0).shards[0];
}

PackedImage conv_single_shard(Engine& eng, const PackedImage& p, const FilterTensor& k,
                              const std::vector<double>& bias, double output_scale) {
    if (p.shards.size() != 1) throw std::invalid_argument("conv_single_shard expects one shard");
    if (k.c_out * p.m * p.m > p.shard_size()) throw std::invalid_argument("insufficient capacity");
    return conv_image_mode(eng, p, k, std::nullopt, bias, output_scale);
}

PackedImage conv_image_shards(Engine& eng, const PackedImage& p, const FilterTensor& k,
                              const std::vector<double>& bias, double output_scale) {
    return conv_image_mode(eng, p, k, std::nullopt, bias, output_scale);
}

PackedImage conv_plan(Engine& eng, const PackedImage& p, const FilterTensor& k, ConvPlan plan,
                      const std::vector<double>& bias, double output_scale) {
    if (p.shards.size() != 1) throw std::invalid_argument("conv_plan expects a single shard");
    if (k.c_out * p.m * p.m > p.shard_size()) throw std::invalid_argument("insufficient capacity");
    return conv_image_mode(eng, p, k, plan, bias, output_scale);
}

PackedImage conv_channel_shards(Engine& eng, const PackedImage& p, const FilterTensor& k,
                                const std::vector<double>& bias, double output_scale) {
    if (p.mode != ShardMode::ChannelShard)
        throw std::invalid_argument("channel-shard convolution requires channel shards");
    if (k.c_in != p.c) throw std::invalid_argument("filter input channels do not match image");
    if (!bias.empty() && bias.size() != k.c_out)
        throw std::invalid_argument("bias size does not match output channels");
    const std::size_t s = p.shard_size();
    const std::size_t m = p.m;
    const long mL = static_cast<long>(m);
    const long rows = static_cast<long>(p.rows_per_shard);
    const std::size_t per_channel = p.shards_per_channel();
    const long h = static_cast<long>(k.kappa) / 2;
    if (h > rows) throw std::invalid_argument("kernel reach exceeds one neighbor shard");

    // All cyclic rotations of the input shards, shared between the in-shard
    // and spill uses and across output channels.
    std::map<std::pair<std::size_t, long>, SlotVector> cache;
    auto rotated = [&](std::size_t shard_idx, long amount) -> const SlotVector& {
        auto key = std::make_pair(shard_idx, amount);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, eng.rotate(p.shards[shard_idx], amount)).first;
        return it->second;
    };

    std::vector<SlotVector> out_shards;
    out_shards.reserve(k.c_out * per_channel);
    for (std::size_t g = 0; g < k.c_out; ++g) {
        for (std::size_t v = 0; v < per_channel; ++v) {
            Acc acc;
            for (std::size_t f = 0; f < p.c; ++f) {
                const std::size_t base = f * per_channel;
                for (long kk = -h; kk <= h; ++kk) {
                    for (long ll = -h; ll <= h; ++ll) {
                        const double w = k.centered(f, g, kk, ll) * output_scale;
                        if (w == 0.0) continue;
                        const long amount = kk * mL + ll;
                        const long j_lo = std::max(0L, -ll), j_hi = std::min(mL, mL - ll);
                        if (j_lo >= j_hi) continue;

                        // Rows whose shifted source stays inside this shard.
                        {
                            std::vector<double> mask(s, 0.0);
                            bool any = false;
                            for (long rr = 0; rr < rows; ++rr) {
                                if (!in_range(rr + kk, 0, rows)) continue;
                                any = true;
                                for (long j = j_lo; j < j_hi; ++j)
                                    mask[static_cast<std::size_t>(rr * mL + j)] = w;
                            }
                            if (any) acc.add(eng, eng.mul_plain(rotated(base + v, amount), mask));
                        }
                        // Rows pulled in from the adjacent shard.
                        if (kk != 0) {
                            const long nb = static_cast<long>(v) + (kk > 0 ? 1 : -1);
                            if (nb >= 0 && nb < static_cast<long>(per_channel)) {
                                std::vector<double> mask(s, 0.0);
                                bool any = false;
                                for (long rr = 0; rr < rows; ++rr) {
                                    if (in_range(rr + kk, 0, rows)) continue;
                                    any = true;
                                    for (long j = j_lo; j < j_hi; ++j)
                                        mask[static_cast<std::size_t>(rr * mL + j)] = w;
                                }
                                if (any)
                                    acc.add(eng, eng.mul_plain(
                                                     rotated(base + static_cast<std::size_t>(nb), amount),
                                                     mask));
                            }
                        }
                    }
                }
            }
            SlotVector sh = acc.finish(eng, p.shards[0]);
            if (!bias.empty())
                sh = eng.add_plain(sh, std::vector<double>(s, bias[g] * output_scale));
            out_shards.push_back(std::move(sh));
        }
    }

    PackedImage out;
    out.shards = std::move(out_shards);
    out.m = m;
    out.c = k.c_out;
    out.tau = PackedImage::identity_tau(k.c_out);
    out.mode = ShardMode::ChannelShard;
    out.rows_per_shard = p.rows_per_shard;
    return out;
}

PackedImage convolve(Engine& eng, const PackedImage& p, const FilterTensor& k,
                     const std::vector<double>& bias, double output_scale) {
    if (p.mode == ShardMode::ChannelShard)
        return conv_channel_shards(eng, p, k, bias, output_scale);
    if (p.shards.size() == 1 && k.c_out * p.m * p.m <= p.shard_size())
        return conv_single_shard(eng, p, k, bias, output_scale);
    return conv_image_shards(eng, p, k, bias, output_scale);
}

}  // namespace shardnn
