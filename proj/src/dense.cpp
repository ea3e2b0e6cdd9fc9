#include "shardnn/dense.hpp"

namespace shardnn {

std::pair<FilterTensor, std::vector<double>> fold_bn(const FilterTensor& k,
                                                     const std::vector<double>& bias,
                                                     const AffineParams& bn) {
    if (bn.scale.size() != k.c_out || bn.bias.size() != k.c_out)
        throw std::invalid_argument("batch norm size does not match output channels");
    if (!bias.empty() && bias.size() != k.c_out)
        throw std::invalid_argument("bias size does not match output channels");
    FilterTensor folded = k;
    for (std::size_t f = 0; f < k.c_in; ++f)
        for (std::size_t g = 0; g < k.c_out; ++g)
            for (std::size_t r = 0; r < k.kappa; ++r)
                for (std::size_t s = 0; s < k.kappa; ++s) folded.at(f, g, r, s) *= bn.scale[g];
    std::vector<double> folded_bias(k.c_out);
    for (std::size_t g = 0; g < k.c_out; ++g)
        folded_bias[g] = bn.scale[g] * (bias.empty() ? 0.0 : bias[g]) + bn.bias[g];
    return {std::move(folded), std::move(folded_bias)};
}

SlotVector slot_sum(Engine& eng, const SlotVector& v, std::size_t block) {
    if (!is_power_of_two(block) || v.size() % block != 0)
        throw std::invalid_argument("block must be a power of two dividing the slot count");
    SlotVector acc = v;
    for (std::size_t step = 1; step < block; step *= 2)
        acc = eng.add(acc, eng.rotate(acc, static_cast<long>(step)));
    return acc;
}

namespace {

SlotVector masked_feature_dot(Engine& eng, const PackedImage& p, const LinearWeights& w) {
    if (w.out_features > p.shard_size())
        throw std::invalid_argument("out_features exceeds the shard size");
    const std::size_t s = p.shard_size();
    const auto features = slot_feature_map(p);

    SlotVector out = eng.zeros(s);
    for (std::size_t o = 0; o < w.out_features; ++o) {
        // Per-shard masked dot products, accumulated, then one final
        // mask placing the activation at slot o.
        SlotVector total = eng.zeros(s);
        bool started = false;
        for (std::size_t u = 0; u < p.shards.size(); ++u) {
            std::vector<double> weights(s, 0.0);
            bool any = false;
            for (std::size_t i = 0; i < s; ++i) {
                const long feat = features[u][i];
                if (feat < 0) continue;
                weights[i] = w.at(o, static_cast<std::size_t>(feat));
                any = any || weights[i] != 0.0;
            }
            if (!any && started) continue;
            SlotVector summed = slot_sum(eng, eng.mul_plain(p.shards[u], weights), s);
            total = started ? eng.add(total, summed) : std::move(summed);
            started = true;
        }
        std::vector<double> select(s, 0.0);
        select[o] = 1.0;
        out = eng.add(out, eng.mul_plain(total, select));
    }
    std::vector<double> bias(s, 0.0);
    for (std::size_t o = 0; o < w.out_features; ++o) bias[o] = w.b[o];
    return eng.add_plain(out, bias);
}

}  // namespace

SlotVector linear(Engine& eng, const PackedImage& p, const LinearWeights& w) {
    if (w.in_features != p.c * p.m * p.m)
        throw std::invalid_argument("in_features does not match the packed feature count");
    return masked_feature_dot(eng, p, w);
}

SlotVector pool_linear(Engine& eng, const PackedImage& p, const LinearWeights& w) {
    if (w.in_features != p.c)
        throw std::invalid_argument("pool-linear expects one input feature per channel");
    const std::size_t block = p.m * p.m;
    LinearWeights expanded(w.out_features, p.c * block);
    expanded.b = w.b;
    const double norm = 1.0 / static_cast<double>(block);
    for (std::size_t o = 0; o < w.out_features; ++o)
        for (std::size_t ch = 0; ch < p.c; ++ch)
            for (std::size_t i = 0; i < block; ++i)
                expanded.at(o, ch * block + i) = w.at(o, ch) * norm;
    return masked_feature_dot(eng, p, expanded);
}

}  // namespace shardnn
