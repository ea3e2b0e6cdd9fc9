#pragma once

#include "shardnn/emu.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <vector>

namespace shardnn {

/// Binary decomposition of a rotation amount into distinct positive
/// powers of two; popcount(n) steps.
std::vector<long> decompose_positive(std::size_t n, std::size_t s);

/// Signed decomposition: repeatedly take the power of two nearest the
/// remainder (ties toward the smaller), which yields a minimal-length
/// signed power-of-two sum. Steps sum to n exactly.
std::vector<long> decompose_signed(std::size_t n, std::size_t s);

/// Exact minimum number of signed power-of-two terms summing to n, via
/// breadth-first search. Desk-scale reference for the signed strategy.
std::size_t min_decomposition_length(std::size_t n, std::size_t cap = std::size_t{1} << 14);

/// Minimal lengths for every n in [0, n_max], from one shared search.
std::vector<std::size_t> min_decomposition_lengths(std::size_t n_max,
                                                   std::size_t cap = std::size_t{1} << 14);

enum class DecompStrategy { Positive, Signed, Exact };

struct RotationRequest {
    long amount = 0;
    /// Shares its source vector with the previous request, so the two can
    /// be batched into one hoist group.
    bool same_source = false;
};

struct RotationSchedule {
    struct Group {
        std::vector<std::vector<long>> steps;  // one step list per request
        bool hoisted = false;                  // more than one same-source request
    };
    std::vector<Group> groups;
    std::size_t total_keyed_rotations = 0;
};

/// Maps rotation requests onto keyed rotations. Exact amounts are used
/// when present in the key set (all powers of two are always assumed
/// available); everything else goes through the chosen decomposition.
RotationSchedule plan_rotations(const std::vector<RotationRequest>& requests, std::size_t s,
                                DecompStrategy strategy,
                                const std::optional<std::set<std::size_t>>& exact_keys = {});

/// Runs one scheduled request on the emulator: the composition of its
/// steps, hoisting the first step of a hoisted group's members.
std::vector<SlotVector> execute_schedule(Engine& eng, const SlotVector& source,
                                         const RotationSchedule& schedule);

}  // namespace shardnn
