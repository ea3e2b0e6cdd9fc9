#include "shardnn/reg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shardnn {

MomentLossResult moment_loss(const std::vector<std::vector<double>>& batches, double lambda_mu,
                             double lambda_sigma, double lambda_kappa, bool unbiased_kurtosis) {
    if (batches.empty()) throw std::invalid_argument("no batches");
    const double inv_batches = 1.0 / static_cast<double>(batches.size());

    MomentLossResult result;
    result.grads.resize(batches.size());

    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        const auto& x = batches[bi];
        const std::size_t n = x.size();
        if (n < 4) throw std::invalid_argument("batch needs at least 4 elements");
        const double inv_n = 1.0 / static_cast<double>(n);

        double mu = 0.0;
        for (double v : x) mu += v;
        mu *= inv_n;

        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double v : x) {
            const double d = v - mu;
            const double d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 *= inv_n;
        m3 *= inv_n;
        m4 *= inv_n;
        if (m2 == 0.0) throw std::invalid_argument("kurtosis undefined");

        const double sigma = std::sqrt(m2);
        const double g2 = m4 / (m2 * m2);

        // kappa = A * g2 + B: population estimator by default, the usual
        // sample adjustment behind the flag.
        double ka = 1.0, kb = 0.0;
        if (unbiased_kurtosis) {
            const double nn = static_cast<double>(n);
            const double c1 = (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
            ka = c1 * (nn + 1.0);
            kb = 3.0 - 3.0 * c1 * (nn - 1.0);
        }
        const double kappa = ka * g2 + kb;

        result.loss += inv_batches * (lambda_mu * mu * mu +
                                      lambda_sigma * (sigma - 1.0) * (sigma - 1.0) +
                                      lambda_kappa * (kappa - 3.0) * (kappa - 3.0));

        auto& grad = result.grads[bi];
        grad.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x[j] - mu;
            const double dmu = inv_n;
            const double dsigma = d / (static_cast<double>(n) * sigma);
            const double dg2 = 4.0 * inv_n / (m2 * m2) * (d * d * d - m3 - g2 * m2 * d);
            grad[j] = inv_batches * (2.0 * lambda_mu * mu * dmu +
                                     2.0 * lambda_sigma * (sigma - 1.0) * dsigma +
                                     2.0 * lambda_kappa * (kappa - 3.0) * ka * dg2);
        }
    }
    return result;
}

std::vector<LayerRange> range_report(const std::vector<std::vector<double>>& layers,
                                     double quantile, const std::vector<double>& candidate_bounds) {
    if (layers.empty()) throw std::invalid_argument("no layers");
    std::vector<LayerRange> out;
    out.reserve(layers.size());
    for (const auto& layer : layers) {
        if (layer.empty()) throw std::invalid_argument("empty layer");
        LayerRange r;
        r.min = *std::min_element(layer.begin(), layer.end());
        r.max = *std::max_element(layer.begin(), layer.end());

        std::vector<double> mags(layer.size());
        for (std::size_t i = 0; i < layer.size(); ++i) mags[i] = std::abs(layer[i]);
        std::sort(mags.begin(), mags.end());
        const std::size_t idx = std::min(
            mags.size() - 1,
            static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(mags.size()))) == 0
                ? 0
                : static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(mags.size()))) -
                      1);
        r.quantile_abs = mags[idx];

        r.suggested_bound = candidate_bounds.back();
        for (double b : candidate_bounds)
            if (b >= r.quantile_abs) {
                r.suggested_bound = b;
                break;
            }
        out.push_back(r);
    }
    return out;
}

}  // namespace shardnn
