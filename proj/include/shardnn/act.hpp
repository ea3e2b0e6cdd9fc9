#pragma once

#include "shardnn/emu.hpp"
#include "shardnn/pack.hpp"

#include <functional>
#include <vector>

namespace shardnn {

/// Polynomial in the Chebyshev basis, valid on [-bound, bound].
struct ChebPoly {
    std::vector<double> coeffs;  // c_0 .. c_n
    double bound = 1.0;

    std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

/// Levels consumed when evaluating a degree-n series on a pre-scaled
/// input: the bit length of n. One more if the input needs rescaling.
int chebyshev_required_level(std::size_t degree);

/// T_0..T_n evaluated slotwise via the even/odd product recursion
///   T_2n = 2 T_n^2 - 1,  T_2n+1 = 2 T_n T_n+1 - x,
/// giving depth ceil(log2 n) instead of n.
std::vector<SlotVector> cheb_basis(Engine& eng, const SlotVector& x, std::size_t n);

/// Degree-n Chebyshev interpolant of f on [-bound, bound], with
/// coefficients from cosine quadrature at the Chebyshev nodes.
ChebPoly cheb_interpolate(const std::function<double(double)>& f, std::size_t n, double bound);

/// Clenshaw evaluation of the series at a plain point x in [-bound, bound].
double cheb_eval(const ChebPoly& poly, double x);

/// Max |poly(x) - f(x)| over a uniform grid on [-bound, bound].
double max_abs_error(const ChebPoly& poly, const std::function<double(double)>& f,
                     std::size_t grid_points = 100000);

/// Homomorphic series evaluation with a power-of-two product split, so a
/// degree-n series costs chebyshev_required_level(n) levels. If prescaled,
/// the input is already in [-1, 1]; otherwise one level is spent on x/B.
SlotVector eval_chebyshev(Engine& eng, const SlotVector& x, const ChebPoly& poly,
                          bool prescaled = false);

/// Slotwise activation over every shard; metadata is preserved.
PackedImage apply_activation(Engine& eng, const PackedImage& p, const ChebPoly& poly,
                             bool prescaled = false);

struct MinimaxResult {
    ChebPoly poly;
    double max_error = 0.0;
    int iterations = 0;
};

/// Remez exchange: degree-n minimax approximation of f on [-bound, bound].
MinimaxResult remez_minimax(const std::function<double(double)>& f, std::size_t n, double bound,
                            std::size_t grid_points = 50000, int max_iterations = 80);

}  // namespace shardnn
