#include "shardnn/rot.hpp"

#include <deque>

namespace shardnn {

namespace {

std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

void check_range(std::size_t n, std::size_t s) {
    if (n >= s) throw std::invalid_argument("amount must satisfy 0 <= n < s");
}

}  // namespace

std::vector<long> decompose_positive(std::size_t n, std::size_t s) {
    check_range(n, s);
    std::vector<long> steps;
    for (std::size_t bit = floor_pow2(s); bit >= 1; bit /= 2) {
        if (n & bit) steps.push_back(static_cast<long>(bit));
        if (bit == 1) break;
    }
    return steps;
}

std::vector<long> decompose_signed(std::size_t n, std::size_t s) {
    check_range(n, s);
    std::vector<long> steps;
    long rest = static_cast<long>(n);
    while (rest != 0) {
        const std::size_t mag = static_cast<std::size_t>(rest < 0 ? -rest : rest);
        const std::size_t lo = floor_pow2(mag);
        const std::size_t hi = lo * 2;
        // Nearest power of two, ties toward the smaller.
        const std::size_t pick = (mag - lo <= hi - mag) ? lo : hi;
        const long step = (rest < 0) ? -static_cast<long>(pick) : static_cast<long>(pick);
        steps.push_back(step);
        rest -= step;
    }
    return steps;
}

namespace {

/// BFS distances from 0 under steps of +-2^j; distance(v) is the minimal
/// number of signed power-of-two terms summing to v. Overshoots past
/// twice the cap can never be part of a shortest sum.
std::vector<std::size_t> signed_distances(std::size_t cap) {
    const long limit = static_cast<long>(4 * cap);
    std::vector<long> powers;
    for (long p = 1; p <= 2 * static_cast<long>(cap); p *= 2) powers.push_back(p);

    const std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> dist(static_cast<std::size_t>(2 * limit + 1), unset);
    auto idx = [&](long v) { return static_cast<std::size_t>(v + limit); };
    std::deque<long> queue;
    dist[idx(0)] = 0;
    queue.push_back(0);
    while (!queue.empty()) {
        const long v = queue.front();
        queue.pop_front();
        for (long p : powers) {
            for (long next : {v + p, v - p}) {
                if (next < -limit || next > limit) continue;
                if (dist[idx(next)] != unset) continue;
                dist[idx(next)] = dist[idx(v)] + 1;
                queue.push_back(next);
            }
        }
    }
    std::vector<std::size_t> out(static_cast<std::size_t>(limit) + 1);
    for (std::size_t n = 0; n <= static_cast<std::size_t>(limit); ++n)
        out[n] = dist[idx(static_cast<long>(n))];
    return out;
}

}  // namespace

std::size_t min_decomposition_length(std::size_t n, std::size_t cap) {
    if (n >= cap) throw std::invalid_argument("cap exceeded");
    return signed_distances(cap)[n];
}

std::vector<std::size_t> min_decomposition_lengths(std::size_t n_max, std::size_t cap) {
    if (n_max >= cap) throw std::invalid_argument("cap exceeded");
    auto dist = signed_distances(cap);
    dist.resize(n_max + 1);
    return dist;
}

RotationSchedule plan_rotations(const std::vector<RotationRequest>& requests, std::size_t s,
                                DecompStrategy strategy,
                                const std::optional<std::set<std::size_t>>& exact_keys) {
    RotationSchedule schedule;
    for (const auto& req : requests) {
        long reduced = req.amount % static_cast<long>(s);
        if (reduced < 0) reduced += static_cast<long>(s);
        const std::size_t amount = static_cast<std::size_t>(reduced);

        std::vector<long> steps;
        if (amount == 0) {
            // No keyed rotation needed.
        } else if (strategy == DecompStrategy::Exact ||
                   (exact_keys && exact_keys->count(amount))) {
            steps = {static_cast<long>(amount)};
        } else if (strategy == DecompStrategy::Positive) {
            steps = decompose_positive(amount, s);
        } else {
            steps = decompose_signed(amount, s);
        }
        schedule.total_keyed_rotations += steps.size();

        if (req.same_source && !schedule.groups.empty()) {
            auto& group = schedule.groups.back();
            group.steps.push_back(std::move(steps));
            group.hoisted = true;
        } else {
            RotationSchedule::Group group;
            group.steps.push_back(std::move(steps));
            schedule.groups.push_back(std::move(group));
        }
    }
    return schedule;
}

std::vector<SlotVector> execute_schedule(Engine& eng, const SlotVector& source,
                                         const RotationSchedule& schedule) {
    std::vector<SlotVector> results;
    for (const auto& group : schedule.groups) {
        if (group.hoisted) {
            // First keyed step of each member shares the hoisted batch.
            std::vector<long> firsts;
            for (const auto& steps : group.steps) firsts.push_back(steps.empty() ? 0 : steps[0]);
            std::vector<SlotVector> batch = eng.rotate_many(source, firsts);
            for (std::size_t i = 0; i < group.steps.size(); ++i) {
                SlotVector v = std::move(batch[i]);
                for (std::size_t k = 1; k < group.steps[i].size(); ++k)
                    v = eng.rotate(v, group.steps[i][k]);
                results.push_back(std::move(v));
            }
        } else {
            for (const auto& steps : group.steps) {
                SlotVector v = source;
                for (long step : steps) v = eng.rotate(v, step);
                if (steps.empty()) v = eng.rotate(v, 0);
                results.push_back(std::move(v));
            }
        }
    }
    return results;
}

}  // namespace shardnn
