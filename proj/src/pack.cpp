#include "shardnn/pack.hpp"

#include <algorithm>

namespace shardnn {

PackedImage pack(Engine& eng, const ImageTensor& t, std::size_t s) {
    if (!is_power_of_two(t.m)) throw std::invalid_argument("channel side must be a power of two");
    if (!is_power_of_two(t.c)) throw std::invalid_argument("channel count must be a power of two");
    if (!is_power_of_two(s)) throw std::invalid_argument("shard size must be a power of two");
    if (t.c == 0 || t.m == 0) throw std::invalid_argument("empty tensor");

    PackedImage p;
    p.m = t.m;
    p.c = t.c;
    p.tau = PackedImage::identity_tau(t.c);

    const std::size_t block = t.m * t.m;
    if (block <= s) {
        p.mode = ShardMode::ImageShard;
        p.d = (block * t.c < s) ? s / (block * t.c) : 1;
        p.rep = 1;
        const std::size_t total = block * t.c * p.d;
        const std::size_t n_shards = std::max<std::size_t>(1, total / s);
        std::vector<double> flat;
        flat.reserve(total);
        for (std::size_t copy = 0; copy < p.d; ++copy)
            flat.insert(flat.end(), t.data.begin(), t.data.end());
        for (std::size_t u = 0; u < n_shards; ++u) {
            std::vector<double> slots(flat.begin() + static_cast<long>(u * s),
                                      flat.begin() + static_cast<long>((u + 1) * s));
            p.shards.push_back(eng.encode(std::move(slots)));
        }
    } else {
        p.mode = ShardMode::ChannelShard;
        p.d = 1;
        p.rep = 1;
        p.rows_per_shard = s / t.m;
        const std::size_t per_channel = block / s;
        for (std::size_t ch = 0; ch < t.c; ++ch) {
            for (std::size_t u = 0; u < per_channel; ++u) {
                const auto begin = t.data.begin() + static_cast<long>(ch * block + u * s);
                p.shards.push_back(eng.encode(std::vector<double>(begin, begin + static_cast<long>(s))));
            }
        }
    }
    check_metadata(p);
    return p;
}

void check_metadata(const PackedImage& p) {
    if (p.shards.empty()) throw std::invalid_argument("packed image has no shards");
    const std::size_t s = p.shard_size();
    for (const auto& sh : p.shards)
        if (sh.size() != s) throw std::invalid_argument("shard sizes differ");
    if (!is_power_of_two(p.m) || !is_power_of_two(s))
        throw std::invalid_argument("dimensions must be powers of two");
    if (p.tau.size() != p.c) throw std::invalid_argument("tau size mismatch");
    std::vector<bool> seen(p.c, false);
    for (std::size_t v : p.tau) {
        if (v >= p.c || seen[v]) throw std::invalid_argument("tau is not a bijection");
        seen[v] = true;
    }
    const std::size_t block = p.m * p.m;
    if (p.mode == ShardMode::ImageShard) {
        if (block > s) throw std::invalid_argument("image shard with m^2 > s");
        if (p.shards.size() * s != block * p.c * p.d)
            throw std::invalid_argument("shard capacity does not match c*d channels");
        if (p.rep == 0 || p.d % p.rep != 0)
            throw std::invalid_argument("replica run length must divide d");
        if (block * p.c < s && p.d != s / (block * p.c))
            throw std::invalid_argument("duplication factor does not match s/(m^2 c)");
    } else {
        if (block <= s) throw std::invalid_argument("channel shard with m^2 <= s");
        if (p.d != 1 || p.rep != 1) throw std::invalid_argument("channel shards cannot be duplicated");
        if (p.rows_per_shard != s / p.m) throw std::invalid_argument("rows_per_shard mismatch");
        for (std::size_t i = 0; i < p.c; ++i)
            if (p.tau[i] != i) throw std::invalid_argument("channel shards require identity tau");
        if (p.shards.size() != p.c * block / s)
            throw std::invalid_argument("channel shard count mismatch");
    }
}

ImageTensor unpack(const PackedImage& p) {
    check_metadata(p);
    ImageTensor t(p.c, p.m);
    const std::size_t block = p.m * p.m;
    const std::size_t s = p.shard_size();
    if (p.mode == ShardMode::ImageShard) {
        const std::size_t per_shard = p.blocks_per_shard();
        for (std::size_t g = 0; g < p.total_blocks(); ++g) {
            if (!p.is_primary_block(g)) continue;
            const std::size_t ch = p.block_channel(g);
            const auto& shard = p.shards[g / per_shard];
            const std::size_t off = (g % per_shard) * block;
            for (std::size_t i = 0; i < block; ++i) t.data[ch * block + i] = shard.slots[off + i];
        }
    } else {
        const std::size_t per_channel = p.shards_per_channel();
        for (std::size_t ch = 0; ch < p.c; ++ch)
            for (std::size_t u = 0; u < per_channel; ++u) {
                const auto& shard = p.shards[ch * per_channel + u];
                for (std::size_t i = 0; i < s; ++i) t.data[ch * block + u * s + i] = shard.slots[i];
            }
    }
    return t;
}

std::vector<std::vector<long>> slot_feature_map(const PackedImage& p) {
    const std::size_t s = p.shard_size();
    const std::size_t block = p.m * p.m;
    std::vector<std::vector<long>> map(p.shards.size(), std::vector<long>(s, -1));
    if (p.mode == ShardMode::ImageShard) {
        const std::size_t per_shard = p.blocks_per_shard();
        for (std::size_t g = 0; g < p.total_blocks(); ++g) {
            if (!p.is_primary_block(g)) continue;
            const std::size_t ch = p.block_channel(g);
            for (std::size_t i = 0; i < block; ++i)
                map[g / per_shard][(g % per_shard) * block + i] = static_cast<long>(ch * block + i);
        }
    } else {
        const std::size_t per_channel = p.shards_per_channel();
        for (std::size_t ch = 0; ch < p.c; ++ch)
            for (std::size_t u = 0; u < per_channel; ++u)
                for (std::size_t i = 0; i < s; ++i)
                    map[ch * per_channel + u][i] = static_cast<long>(ch * block + u * s + i);
    }
    return map;
}

PackedImage with_permuted_channels(const PackedImage& p, const std::vector<std::size_t>& sigma) {
    if (p.mode != ShardMode::ImageShard || p.shards.size() != 1)
        throw std::invalid_argument("permutation fixture requires a single image shard");
    if (p.rep != 1) throw std::invalid_argument("permutation fixture requires rep = 1");
    if (sigma.size() != p.c) throw std::invalid_argument("permutation size mismatch");
    PackedImage out = p;
    const std::size_t block = p.m * p.m;
    // Physical position g must hold logical channel sigma(g % c); the
    // source holds tau(g % c) at position g, so move data accordingly.
    std::vector<std::size_t> inv_tau(p.c);
    for (std::size_t i = 0; i < p.c; ++i) inv_tau[p.tau[i]] = i;
    for (std::size_t copy = 0; copy < p.d; ++copy) {
        for (std::size_t pos = 0; pos < p.c; ++pos) {
            const std::size_t src_pos = inv_tau[sigma[pos]];
            const std::size_t dst = (copy * p.c + pos) * block;
            const std::size_t src = (copy * p.c + src_pos) * block;
            for (std::size_t i = 0; i < block; ++i)
                out.shards[0].slots[dst + i] = p.shards[0].slots[src + i];
        }
    }
    out.tau = sigma;
    return out;
}

}  // namespace shardnn
