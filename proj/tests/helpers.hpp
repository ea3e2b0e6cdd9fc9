#pragma once

#include "shardnn/oracle.hpp"
#include "shardnn/pack.hpp"
#include "shardnn/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace shardnn::testing {

inline ImageTensor random_tensor(std::mt19937_64& rng, std::size_t c, std::size_t m,
                                 double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ImageTensor t(c, m);
    for (double& v : t.data) v = dist(rng);
    return t;
}

inline FilterTensor random_filter(std::mt19937_64& rng, std::size_t ci, std::size_t co,
                                  std::size_t kappa) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    FilterTensor k(ci, co, kappa);
    for (double& v : k.weights) v = dist(rng);
    return k;
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

inline double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
    if (a.c != b.c || a.m != b.m) return 1e300;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 1e300;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace shardnn::testing
