#include "shardnn/emu.hpp"

#include <algorithm>

namespace shardnn {

namespace {

std::size_t reduce_mod(long k, std::size_t s) {
    long m = k % static_cast<long>(s);
    if (m < 0) m += static_cast<long>(s);
    return static_cast<std::size_t>(m);
}

std::vector<double> rotated_slots(const std::vector<double>& in, std::size_t amount) {
    const std::size_t s = in.size();
    std::vector<double> out(s);
    for (std::size_t i = 0; i < s; ++i) out[i] = in[(i + amount) % s];
    return out;
}

}  // namespace

void Engine::check_same_size(const SlotVector& a, const SlotVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("slot count mismatch");
}

SlotVector Engine::rotate(const SlotVector& v, long k) {
    const std::size_t amount = reduce_mod(k, v.size());
    ledger_.note_rotation_amount(amount);
    SlotVector out = v;
    out.id = next_id();
    if (amount == 0) return out;
    out.slots = rotated_slots(v.slots, amount);
    ledger_.rotations.fetch_add(1);
    return out;
}

std::vector<SlotVector> Engine::rotate_many(const SlotVector& v, const std::vector<long>& ks) {
    if (ks.empty()) throw std::invalid_argument("empty rotation batch");
    std::vector<SlotVector> out;
    out.reserve(ks.size());
    for (long k : ks) {
        const std::size_t amount = reduce_mod(k, v.size());
        ledger_.note_rotation_amount(amount);
        SlotVector r = v;
        r.id = next_id();
        if (amount != 0) r.slots = rotated_slots(v.slots, amount);
        out.push_back(std::move(r));
    }
    ledger_.hoist_groups.fetch_add(1);
    ledger_.hoisted_rotations.fetch_add(ks.size());
    return out;
}

SlotVector Engine::mul_plain(const SlotVector& v, const std::vector<double>& p) {
    if (p.size() != v.size()) throw std::invalid_argument("slot count mismatch");
    if (v.level < 1) throw std::runtime_error("depth exhausted");
    SlotVector out = v;
    out.id = next_id();
    for (std::size_t i = 0; i < p.size(); ++i) out.slots[i] *= p[i];
    out.level = v.level - 1;
    out.depth = v.depth + 1;
    ledger_.ct_pt_mults.fetch_add(1);
    ledger_.note_depth(out.depth);
    return out;
}

SlotVector Engine::mul_ct(const SlotVector& a, const SlotVector& b) {
    check_same_size(a, b);
    if (a.level < 1 || b.level < 1) throw std::runtime_error("depth exhausted");
    SlotVector out = a;
    out.id = next_id();
    for (std::size_t i = 0; i < a.size(); ++i) out.slots[i] = a.slots[i] * b.slots[i];
    out.level = std::min(a.level, b.level) - 1;
    out.depth = std::max(a.depth, b.depth) + 1;
    ledger_.ct_ct_mults.fetch_add(1);
    ledger_.note_depth(out.depth);
    return out;
}

SlotVector Engine::add(const SlotVector& a, const SlotVector& b) {
    check_same_size(a, b);
    SlotVector out = a;
    out.id = next_id();
    for (std::size_t i = 0; i < a.size(); ++i) out.slots[i] = a.slots[i] + b.slots[i];
    out.level = std::min(a.level, b.level);
    out.depth = std::max(a.depth, b.depth);
    ledger_.adds.fetch_add(1);
    return out;
}

SlotVector Engine::sub(const SlotVector& a, const SlotVector& b) {
    check_same_size(a, b);
    SlotVector out = a;
    out.id = next_id();
    for (std::size_t i = 0; i < a.size(); ++i) out.slots[i] = a.slots[i] - b.slots[i];
    out.level = std::min(a.level, b.level);
    out.depth = std::max(a.depth, b.depth);
    ledger_.adds.fetch_add(1);
    return out;
}

SlotVector Engine::add_plain(const SlotVector& v, const std::vector<double>& p) {
    if (p.size() != v.size()) throw std::invalid_argument("slot count mismatch");
    SlotVector out = v;
    out.id = next_id();
    for (std::size_t i = 0; i < p.size(); ++i) out.slots[i] += p[i];
    ledger_.adds.fetch_add(1);
    return out;
}

SlotVector Engine::add_scalar(const SlotVector& v, double x) {
    SlotVector out = v;
    out.id = next_id();
    for (double& s : out.slots) s += x;
    ledger_.adds.fetch_add(1);
    return out;
}

SlotVector Engine::bootstrap(const SlotVector& v, int target_level) {
    if (target_level <= v.level) throw std::runtime_error("useless bootstrap");
    SlotVector out = v;
    out.id = next_id();
    out.level = config_.noise.metabts ? target_level - 1 : target_level;
    if (config_.noise.enabled && config_.noise.sigma > 0.0) {
        std::normal_distribution<double> dist(0.0, config_.noise.effective_sigma());
        for (double& s : out.slots) s += dist(rng_);
    }
    ledger_.bootstraps.fetch_add(1);
    return out;
}

}  // namespace shardnn
