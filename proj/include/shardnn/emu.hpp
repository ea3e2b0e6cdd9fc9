#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace shardnn {

/// Emulated SIMD ciphertext: a fixed-length vector of real slots plus
/// level bookkeeping. Arithmetic is always exact double precision; the
/// level only tracks the remaining multiplicative budget.
struct SlotVector {
    std::vector<double> slots;
    int level = 0;
    // Multiplications consumed along the deepest path from any fresh input.
    int depth = 0;
    // Opaque handle used to group rotations of the same source for hoisting.
    std::uint64_t id = 0;

    std::size_t size() const { return slots.size(); }
};

struct NoiseModel {
    bool enabled = false;
    double sigma = 0.0;
    // MetaBTS: 20x lower bootstrap noise at the cost of one extra level.
    bool metabts = false;

    double effective_sigma() const { return metabts ? sigma / 20.0 : sigma; }
};

/// Operation counters for a run. Counters only ever increase; concurrent
/// increments from parallel layer internals must yield consistent totals.
class CostLedger {
public:
    std::atomic<std::uint64_t> rotations{0};
    std::atomic<std::uint64_t> hoisted_rotations{0};
    std::atomic<std::uint64_t> hoist_groups{0};
    std::atomic<std::uint64_t> ct_pt_mults{0};
    std::atomic<std::uint64_t> ct_ct_mults{0};
    std::atomic<std::uint64_t> adds{0};
    std::atomic<std::uint64_t> bootstraps{0};
    std::atomic<int> max_depth_consumed{0};

    // Cost weight of a hoisted rotation relative to a plain one.
    double hoist_weight = 0.5;

    void note_depth(int depth) {
        int cur = max_depth_consumed.load();
        while (depth > cur && !max_depth_consumed.compare_exchange_weak(cur, depth)) {
        }
    }

    /// Records a requested rotation amount (mod s), zero included. The set
    /// of distinct amounts is a proxy for the rotation keys a real backend
    /// would need.
    void note_rotation_amount(std::size_t amount) {
        std::lock_guard<std::mutex> lock(amounts_mutex_);
        rotation_amounts_.insert(amount);
    }

    std::set<std::size_t> rotation_amounts() const {
        std::lock_guard<std::mutex> lock(amounts_mutex_);
        return rotation_amounts_;
    }

    double weighted_rotation_cost() const {
        return static_cast<double>(rotations.load()) +
               hoist_weight * static_cast<double>(hoisted_rotations.load());
    }

    void reset() {
        rotations = 0;
        hoisted_rotations = 0;
        hoist_groups = 0;
        ct_pt_mults = 0;
        ct_ct_mults = 0;
        adds = 0;
        bootstraps = 0;
        max_depth_consumed = 0;
        std::lock_guard<std::mutex> lock(amounts_mutex_);
        rotation_amounts_.clear();
    }

    struct Snapshot {
        std::uint64_t rotations = 0;
        std::uint64_t hoisted_rotations = 0;
        std::uint64_t hoist_groups = 0;
        std::uint64_t ct_pt_mults = 0;
        std::uint64_t ct_ct_mults = 0;
        std::uint64_t adds = 0;
        std::uint64_t bootstraps = 0;
        int max_depth_consumed = 0;

        bool operator==(const Snapshot&) const = default;
        Snapshot operator-(const Snapshot& o) const {
            return {rotations - o.rotations,
                    hoisted_rotations - o.hoisted_rotations,
                    hoist_groups - o.hoist_groups,
                    ct_pt_mults - o.ct_pt_mults,
                    ct_ct_mults - o.ct_ct_mults,
                    adds - o.adds,
                    bootstraps - o.bootstraps,
                    max_depth_consumed};
        }
    };

    Snapshot snapshot() const {
        return {rotations.load(),  hoisted_rotations.load(), hoist_groups.load(),
                ct_pt_mults.load(), ct_ct_mults.load(),       adds.load(),
                bootstraps.load(),  max_depth_consumed.load()};
    }

private:
    mutable std::mutex amounts_mutex_;
    std::set<std::size_t> rotation_amounts_;
};

struct EngineConfig {
    int initial_level = 30;
    NoiseModel noise;
    std::uint64_t seed = 0;
};

/// Evaluator over emulated ciphertexts. Holds the ledger, the noise model
/// and the RNG; SlotVectors themselves are immutable values.
class Engine {
public:
    explicit Engine(EngineConfig config = {}) : config_(config), rng_(config.seed) {}

    const EngineConfig& config() const { return config_; }
    CostLedger& ledger() { return ledger_; }
    const CostLedger& ledger() const { return ledger_; }

    void set_noise(const NoiseModel& noise) { config_.noise = noise; }
    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    /// Fresh vector at the configured initial level, depth zero.
    SlotVector encode(std::vector<double> slots) {
        if (slots.empty() || (slots.size() & (slots.size() - 1)) != 0)
            throw std::invalid_argument("slot count must be a power of two");
        SlotVector v;
        v.slots = std::move(slots);
        v.level = config_.initial_level;
        v.id = next_id();
        return v;
    }

    SlotVector zeros(std::size_t s) { return encode(std::vector<double>(s, 0.0)); }

    /// Cyclic left rotation by k (right for negative k). Free when the
    /// reduced amount is zero, but the requested amount is still recorded.
    SlotVector rotate(const SlotVector& v, long k);

    /// Batch of rotations of one source vector. Models hoisting: the whole
    /// batch is charged to the hoisted counter instead of plain rotations.
    std::vector<SlotVector> rotate_many(const SlotVector& v, const std::vector<long>& ks);

    SlotVector mul_plain(const SlotVector& v, const std::vector<double>& p);
    SlotVector mul_ct(const SlotVector& a, const SlotVector& b);
    SlotVector add(const SlotVector& a, const SlotVector& b);
    SlotVector sub(const SlotVector& a, const SlotVector& b);
    SlotVector add_plain(const SlotVector& v, const std::vector<double>& p);
    SlotVector add_scalar(const SlotVector& v, double x);

    /// Restores the level to target_level (one less under MetaBTS) and, if
    /// noise is enabled, perturbs every slot with Gaussian noise.
    SlotVector bootstrap(const SlotVector& v, int target_level);

private:
    std::uint64_t next_id() { return id_counter_.fetch_add(1) + 1; }
    static void check_same_size(const SlotVector& a, const SlotVector& b);

    EngineConfig config_;
    CostLedger ledger_;
    std::mt19937_64 rng_;
    std::atomic<std::uint64_t> id_counter_{0};
};

}  // namespace shardnn
