#pragma once

#include "shardnn/act.hpp"
#include "shardnn/dense.hpp"
#include "shardnn/emu.hpp"
#include "shardnn/tensor.hpp"

#include <map>
#include <optional>
#include <string>

namespace shardnn {

enum class LayerType { Conv, Pool, Gelu, Linear, PoolLinear };

std::string layer_type_name(LayerType t);

struct LayerSpec {
    LayerType type = LayerType::Conv;
    std::string name;
    // conv
    FilterTensor filter;
    std::vector<double> bias;
    std::optional<AffineParams> bn;
    int stride = 1;
    // gelu
    std::size_t degree = 59;
    double bound = 10.0;
    std::optional<ChebPoly> poly;  // default: Chebyshev interpolation of GELU
    // linear / pool_linear (terminal layers)
    LinearWeights weights;
};

struct BootstrapPolicy {
    bool auto_insert = true;
    int target_level = 0;  // 0: use the initial level
};

struct NetworkSpec {
    std::size_t shard_size = 4096;
    int initial_level = 30;
    std::uint64_t seed = 0;
    NoiseModel noise;
    BootstrapPolicy bootstrap;
    std::vector<LayerSpec> layers;
};

/// Loads a JSON network description; fixture paths resolve relative to
/// the JSON file's directory.
NetworkSpec load_network(const std::string& path);

struct LayerReport {
    std::string name;
    std::string type;
    bool bootstrapped = false;
    int level_before = 0;
    int level_after = 0;
    int depth_consumed = 0;
    double max_abs_err = 0.0;
    CostLedger::Snapshot ops;
};

struct RunReport {
    std::vector<LayerReport> layers;
    std::vector<double> logits;
    std::vector<double> oracle_logits;
    double residual_mean = 0.0;
    double residual_std = 0.0;
    double residual_max = 0.0;
    CostLedger::Snapshot totals;
    std::vector<std::size_t> bootstrap_layers;  // schedule actually used

    std::string to_text() const;
};

struct RunOptions {
    /// Replay this bootstrap schedule instead of the policy (used to show
    /// every scheduled bootstrap is necessary).
    std::optional<std::vector<std::size_t>> bootstrap_schedule;
};

/// Runs the network on the emulator beside its plaintext mirror (same
/// polynomial activations, evaluated in the clear) and reports per-layer
/// errors, logit residuals, the cost ledger and the depth timeline.
RunReport run_network(const NetworkSpec& spec, const ImageTensor& input,
                      const RunOptions& options = {});

struct BenchReport {
    std::map<std::string, CostLedger::Snapshot> per_type;
    CostLedger::Snapshot totals;
    std::size_t repetitions = 0;
    bool deterministic = false;

    std::string to_text() const;
};

/// Repeats the run and aggregates ledger counters by layer type,
/// verifying the ledger is identical across repetitions.
BenchReport bench_network(const NetworkSpec& spec, const ImageTensor& input,
                          std::size_t repetitions);

}  // namespace shardnn
