#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shardnn {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
    int b = 0;
    while ((std::size_t{1} << b) < n) ++b;
    return b;
}

/// c channels of m x m reals, row-major within each channel.
struct ImageTensor {
    std::size_t c = 0;
    std::size_t m = 0;
    std::vector<double> data;  // c * m * m

    ImageTensor() = default;
    ImageTensor(std::size_t c_, std::size_t m_) : c(c_), m(m_), data(c_ * m_ * m_, 0.0) {}

    double& at(std::size_t ch, std::size_t i, std::size_t j) {
        return data[(ch * m + i) * m + j];
    }
    double at(std::size_t ch, std::size_t i, std::size_t j) const {
        return data[(ch * m + i) * m + j];
    }
    /// Zero-padded read with signed indices.
    double padded(std::size_t ch, long i, long j) const {
        if (i < 0 || j < 0 || i >= static_cast<long>(m) || j >= static_cast<long>(m)) return 0.0;
        return at(ch, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
};

/// Convolution weights indexed (input channel, output channel, row, col)
/// with odd spatial size kappa; row/col offsets are centered on kappa/2.
struct FilterTensor {
    std::size_t c_in = 0;
    std::size_t c_out = 0;
    std::size_t kappa = 0;
    std::vector<double> weights;  // c_in * c_out * kappa * kappa

    FilterTensor() = default;
    FilterTensor(std::size_t ci, std::size_t co, std::size_t k)
        : c_in(ci), c_out(co), kappa(k), weights(ci * co * k * k, 0.0) {
        if (k % 2 == 0) throw std::invalid_argument("kernel size must be odd");
    }

    double& at(std::size_t f, std::size_t g, std::size_t r, std::size_t s) {
        return weights[((f * c_out + g) * kappa + r) * kappa + s];
    }
    double at(std::size_t f, std::size_t g, std::size_t r, std::size_t s) const {
        return weights[((f * c_out + g) * kappa + r) * kappa + s];
    }
    /// Access by centered offsets k, l in [-kappa/2, kappa/2].
    double centered(std::size_t f, std::size_t g, long k, long l) const {
        const long h = static_cast<long>(kappa) / 2;
        return at(f, g, static_cast<std::size_t>(k + h), static_cast<std::size_t>(l + h));
    }
    double& centered(std::size_t f, std::size_t g, long k, long l) {
        const long h = static_cast<long>(kappa) / 2;
        return at(f, g, static_cast<std::size_t>(k + h), static_cast<std::size_t>(l + h));
    }

    static FilterTensor identity(std::size_t c, std::size_t k) {
        FilterTensor t(c, c, k);
        for (std::size_t f = 0; f < c; ++f) t.centered(f, f, 0, 0) = 1.0;
        return t;
    }
};

/// Per-output-channel affine (inference-time batch norm).
struct AffineParams {
    std::vector<double> scale;
    std::vector<double> bias;
};

struct LinearWeights {
    std::size_t out_features = 0;
    std::size_t in_features = 0;
    std::vector<double> w;  // out_features * in_features, row-major
    std::vector<double> b;  // out_features

    LinearWeights() = default;
    LinearWeights(std::size_t out, std::size_t in)
        : out_features(out), in_features(in), w(out * in, 0.0), b(out, 0.0) {}

    double& at(std::size_t o, std::size_t i) { return w[o * in_features + i]; }
    double at(std::size_t o, std::size_t i) const { return w[o * in_features + i]; }
};

}  // namespace shardnn
