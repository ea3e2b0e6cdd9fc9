#pragma once

#include <cstddef>
#include <vector>

namespace shardnn {

/// Kurtosis regularization: pushes per-batch pre-activation moments
/// toward a standard Gaussian (mean 0, std 1, kurtosis 3) to shrink the
/// range the activation polynomial must cover.
struct MomentLossResult {
    double loss = 0.0;
    std::vector<std::vector<double>> grads;  // same shape as the input batches
};

/// loss = (l_mu/N) sum mu_i^2 + (l_sigma/N) sum (sigma_i-1)^2
///      + (l_kappa/N) sum (kappa_i-3)^2 over the N batches, with analytic
/// gradients. Population (biased) moment estimators by default; the
/// sample-adjusted kurtosis is available behind the flag.
MomentLossResult moment_loss(const std::vector<std::vector<double>>& batches, double lambda_mu,
                             double lambda_sigma, double lambda_kappa,
                             bool unbiased_kurtosis = false);

struct LayerRange {
    double min = 0.0;
    double max = 0.0;
    double quantile_abs = 0.0;
    double suggested_bound = 0.0;
};

/// Per-layer extrema plus the smallest candidate bound covering the given
/// quantile of |x|; the largest candidate is returned when none covers.
std::vector<LayerRange> range_report(const std::vector<std::vector<double>>& layers,
                                     double quantile = 1.0 - 1e-6,
                                     const std::vector<double>& candidate_bounds = {10.0, 15.0,
                                                                                    25.0});

}  // namespace shardnn
