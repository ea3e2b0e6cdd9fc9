#include "shardnn/pool.hpp"

#include <algorithm>

namespace shardnn {

namespace {

/// Per-block mask selecting destinations whose 2x2 window offset (kk, ll)
/// stays inside the channel, times the kernel weight.
std::vector<double> window_mask(std::size_t s, std::size_t m, long kk, long ll, double w) {
    const std::size_t block = m * m;
    const long mL = static_cast<long>(m);
    std::vector<double> mask(s, 0.0);
    for (std::size_t b = 0; b * block < s; ++b)
        for (long i = 0; i + kk < mL; ++i)
            for (long j = 0; j + ll < mL; ++j)
                mask[b * block + static_cast<std::size_t>(i * mL + j)] = w;
    return mask;
}

SlotVector window_conv_shard(Engine& eng, const SlotVector& shard, std::size_t m) {
    const long mL = static_cast<long>(m);
    SlotVector acc = eng.mul_plain(eng.rotate(shard, 0), window_mask(shard.size(), m, 0, 0, 0.25));
    for (auto [kk, ll] : {std::pair<long, long>{0, 1}, {1, 0}, {1, 1}}) {
        SlotVector rotated = eng.rotate(shard, kk * mL + ll);
        acc = eng.add(acc, eng.mul_plain(rotated, window_mask(shard.size(), m, kk, ll, 0.25)));
    }
    return acc;
}

/// Channel-shard window sum: the bottom row of each window can live in
/// the next shard of the same channel.
SlotVector window_conv_channel_shard(Engine& eng, const PackedImage& p, std::size_t f,
                                     std::size_t v) {
    const std::size_t s = p.shard_size();
    const std::size_t m = p.m;
    const long mL = static_cast<long>(m);
    const long rows = static_cast<long>(p.rows_per_shard);
    const std::size_t per_channel = p.shards_per_channel();
    const std::size_t base = f * per_channel;

    std::optional<SlotVector> acc;
    for (auto [kk, ll] : {std::pair<long, long>{0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
        const long amount = kk * mL + ll;
        std::vector<double> in_mask(s, 0.0), spill_mask(s, 0.0);
        bool any_in = false, any_spill = false;
        for (long rr = 0; rr < rows; ++rr) {
            const bool inside = rr + kk < rows;
            for (long j = 0; j + ll < mL; ++j) {
                if (inside) {
                    in_mask[static_cast<std::size_t>(rr * mL + j)] = 0.25;
                    any_in = true;
                } else {
                    spill_mask[static_cast<std::size_t>(rr * mL + j)] = 0.25;
                    any_spill = true;
                }
            }
        }
        if (any_in) {
            SlotVector term = eng.mul_plain(eng.rotate(p.shards[base + v], amount), in_mask);
            acc = acc ? eng.add(*acc, term) : std::move(term);
        }
        if (any_spill && v + 1 < per_channel) {
            SlotVector term = eng.mul_plain(eng.rotate(p.shards[base + v + 1], amount), spill_mask);
            acc = acc ? eng.add(*acc, term) : std::move(term);
        }
    }
    return std::move(*acc);
}

/// Horizontal reduction: column 2i of every row moves to column i.
SlotVector reduce_horizontal(Engine& eng, const SlotVector& shard, std::size_t m) {
    const std::size_t s = shard.size();
    SlotVector acc = shard;
    bool first = true;
    for (std::size_t i = 0; i < m / 2; ++i) {
        std::vector<double> mask(s, 0.0);
        for (std::size_t row_start = 0; row_start < s; row_start += m) mask[row_start + 2 * i] = 1.0;
        SlotVector term = eng.rotate(eng.mul_plain(shard, mask), static_cast<long>(i));
        acc = first ? std::move(term) : eng.add(acc, term);
        first = false;
    }
    return acc;
}

/// Vertical reduction for image shards: the left half of row 2j of every
/// block moves to pooled row j, packing the quarter at the block front.
SlotVector reduce_vertical_image(Engine& eng, const SlotVector& shard, std::size_t m,
                                 double scale) {
    const std::size_t s = shard.size();
    const std::size_t block = m * m;
    SlotVector acc = shard;
    bool first = true;
    for (std::size_t j = 0; j < m / 2; ++j) {
        std::vector<double> mask(s, 0.0);
        for (std::size_t b = 0; b * block < s; ++b)
            for (std::size_t col = 0; col < m / 2; ++col) mask[b * block + 2 * j * m + col] = scale;
        SlotVector term = eng.rotate(eng.mul_plain(shard, mask), static_cast<long>(3 * j * m / 2));
        acc = first ? std::move(term) : eng.add(acc, term);
        first = false;
    }
    return acc;
}

/// Vertical reduction for one channel shard: keeps even global rows and
/// packs them at the shard front. For single-row shards this is a mask
/// on the even shards only; odd shards yield nothing.
std::optional<SlotVector> reduce_vertical_channel(Engine& eng, const SlotVector& shard,
                                                  std::size_t m, std::size_t rows,
                                                  std::size_t shard_row_index, double scale) {
    const std::size_t s = shard.size();
    if (rows == 1) {
        if (shard_row_index % 2 != 0) return std::nullopt;
        std::vector<double> mask(s, 0.0);
        for (std::size_t col = 0; col < m / 2; ++col) mask[col] = scale;
        return eng.mul_plain(shard, mask);
    }
    SlotVector acc = shard;
    bool first = true;
    for (std::size_t q = 0; q < rows / 2; ++q) {
        std::vector<double> mask(s, 0.0);
        for (std::size_t col = 0; col < m / 2; ++col) mask[2 * q * m + col] = scale;
        SlotVector term = eng.rotate(eng.mul_plain(shard, mask), static_cast<long>(3 * q * m / 2));
        acc = first ? std::move(term) : eng.add(acc, term);
        first = false;
    }
    return acc;
}

Downsampled compact(Engine& eng, const PackedImage& p,
                    std::vector<std::optional<SlotVector>> summed, double scale) {
    Downsampled d;
    d.meta = p;
    d.meta.shards.clear();
    d.shards.resize(summed.size());
    if (p.mode == ShardMode::ImageShard) {
        for (std::size_t u = 0; u < summed.size(); ++u) {
            SlotVector h = reduce_horizontal(eng, *summed[u], p.m);
            d.shards[u] = reduce_vertical_image(eng, h, p.m, scale);
        }
    } else {
        const std::size_t per_channel = p.shards_per_channel();
        for (std::size_t u = 0; u < summed.size(); ++u) {
            const std::size_t local = u % per_channel;
            const std::size_t row_index = local * p.rows_per_shard;
            if (p.rows_per_shard == 1 && row_index % 2 != 0) continue;  // odd rows: no output
            SlotVector h = reduce_horizontal(eng, *summed[u], p.m);
            d.shards[u] = reduce_vertical_channel(eng, h, p.m, p.rows_per_shard, row_index, scale);
        }
    }
    return d;
}

std::vector<std::optional<SlotVector>> as_optionals(std::vector<SlotVector> v) {
    std::vector<std::optional<SlotVector>> out;
    out.reserve(v.size());
    for (auto& sh : v) out.emplace_back(std::move(sh));
    return out;
}

}  // namespace

std::vector<SlotVector> pool_window_conv(Engine& eng, const PackedImage& p) {
    if (p.m < 2) throw std::invalid_argument("cannot pool a 1x1 channel");
    std::vector<SlotVector> out;
    out.reserve(p.shards.size());
    if (p.mode == ShardMode::ImageShard) {
        for (const auto& sh : p.shards) out.push_back(window_conv_shard(eng, sh, p.m));
    } else {
        const std::size_t per_channel = p.shards_per_channel();
        for (std::size_t f = 0; f < p.c; ++f)
            for (std::size_t v = 0; v < per_channel; ++v)
                out.push_back(window_conv_channel_shard(eng, p, f, v));
    }
    return out;
}

Downsampled downsample(Engine& eng, const PackedImage& p, double output_scale) {
    check_metadata(p);
    if (p.m < 2) throw std::invalid_argument("cannot pool a 1x1 channel");
    if (p.shards.size() >= 2 && p.mode == ShardMode::ImageShard && p.d != 1)
        throw std::invalid_argument("metadata mismatch: duplicated multi-shard image");
    return compact(eng, p, as_optionals(pool_window_conv(eng, p)), output_scale);
}

Consolidated consolidate(Engine& eng, const Downsampled& d) {
    const PackedImage& meta = d.meta;
    std::size_t s = 0;
    for (const auto& sh : d.shards)
        if (sh) {
            s = sh->size();
            break;
        }
    if (s == 0) throw std::invalid_argument("downsampled image has no shards");
    const std::size_t m_new = meta.m / 2;
    const std::size_t block_new = m_new * m_new;
    const std::size_t t = d.shards.size();

    Consolidated out;
    PackedImage& img = out.image;
    img.m = m_new;
    img.c = meta.c;

    if (meta.mode == ShardMode::ImageShard) {
        img.mode = ShardMode::ImageShard;
        const std::size_t z = (meta.c * meta.d) / t;  // old blocks per shard
        if (t == 1) {
            img.shards = {*d.shards[0]};
            img.tau = meta.tau;
            img.rep = 4 * meta.rep;
            img.d = 4 * meta.d;
            out.dup_copies = 4;
            out.dup_stride = block_new;
        } else if (t == 2) {
            // Two summands; the second lands two quarter-blocks over so the
            // replicas from duplication form contiguous runs.
            SlotVector sum = eng.add(*d.shards[0],
                                     eng.rotate(*d.shards[1], -2 * static_cast<long>(block_new)));
            img.shards = {std::move(sum)};
            img.tau.resize(meta.c);
            for (std::size_t j = 0; j < meta.c; ++j)
                img.tau[j] = meta.tau[(j % 2) * z + j / 2];
            img.rep = 2;
            img.d = 2;
            out.dup_copies = 2;
            out.dup_stride = block_new;
        } else {
            if (t % 4 != 0) throw std::invalid_argument("shard count must be 1, 2 or a multiple of 4");
            const std::size_t blocks_out = 4 * z;
            img.tau.resize(meta.c);
            for (std::size_t w = 0; w < t / 4; ++w) {
                SlotVector acc = eng.rotate(*d.shards[4 * w], 0);
                for (std::size_t q = 1; q < 4; ++q)
                    acc = eng.add(acc, eng.rotate(*d.shards[4 * w + q],
                                                  -static_cast<long>(q * block_new)));
                img.shards.push_back(std::move(acc));
                for (std::size_t g = 0; g < blocks_out; ++g)
                    img.tau[w * blocks_out + g] = meta.tau[(4 * w + g % 4) * z + g / 4];
            }
            img.rep = 1;
            img.d = 1;
        }
    } else {
        // Channel shards consolidate in channel-major order, so channels
        // stay in order and tau stays the identity.
        const std::size_t groups = (t + 3) / 4;
        for (std::size_t w = 0; w < groups; ++w) {
            std::optional<SlotVector> acc;
            for (std::size_t q = 0; q < 4 && 4 * w + q < t; ++q) {
                const auto& src = d.shards[4 * w + q];
                if (!src) continue;
                SlotVector term = eng.rotate(*src, -static_cast<long>(q * (s / 4)));
                acc = acc ? eng.add(*acc, term) : std::move(term);
            }
            img.shards.push_back(std::move(*acc));
        }
        img.tau = PackedImage::identity_tau(meta.c);
        img.rep = 1;
        if (block_new > s) {
            img.mode = ShardMode::ChannelShard;
            img.rows_per_shard = s / m_new;
            img.d = 1;
        } else {
            img.mode = ShardMode::ImageShard;
            const std::size_t valid = meta.c * block_new;
            img.d = valid < s ? s / valid : 1;
            if (img.d > 1) {
                out.dup_copies = img.d;
                out.dup_stride = valid;
            }
        }
    }
    return out;
}

PackedImage duplicate_channels(Engine& eng, const Consolidated& c) {
    if (c.dup_copies <= 1) throw std::invalid_argument("nothing to duplicate");
    if (c.image.shards.size() != 1)
        throw std::invalid_argument("duplication applies to a single shard");
    PackedImage out = c.image;
    const SlotVector base = out.shards[0];
    for (std::size_t e = 1; e < c.dup_copies; ++e)
        out.shards[0] =
            eng.add(out.shards[0], eng.rotate(base, -static_cast<long>(e * c.dup_stride)));
    check_metadata(out);
    return out;
}

PackedImage pool(Engine& eng, const PackedImage& p, double output_scale) {
    Consolidated c = consolidate(eng, downsample(eng, p, output_scale));
    if (c.dup_copies > 1) return duplicate_channels(eng, c);
    check_metadata(c.image);
    return c.image;
}

PackedImage subsample_stride2(Engine& eng, const PackedImage& p, double output_scale) {
    check_metadata(p);
    if (p.m < 2) throw std::invalid_argument("cannot subsample a 1x1 channel");
    if (p.shards.size() >= 2 && p.mode == ShardMode::ImageShard && p.d != 1)
        throw std::invalid_argument("metadata mismatch: duplicated multi-shard image");
    Consolidated c = consolidate(eng, compact(eng, p, as_optionals(p.shards), output_scale));
    if (c.dup_copies > 1) return duplicate_channels(eng, c);
    check_metadata(c.image);
    return c.image;
}

}  // namespace shardnn
