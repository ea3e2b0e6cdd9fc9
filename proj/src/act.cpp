#include "shardnn/act.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shardnn {

namespace {

constexpr double kPi = std::numbers::pi;

SlotVector mul_scalar(Engine& eng, const SlotVector& v, double a) {
    return eng.mul_plain(v, std::vector<double>(v.size(), a));
}

/// Largest power of two <= d (d >= 1).
std::size_t floor_pow2(std::size_t d) {
    std::size_t p = 1;
    while (p * 2 <= d) p *= 2;
    return p;
}

/// Power-of-two Chebyshev polynomials of the input, T_1, T_2, T_4, ...,
/// built by repeated squaring: T_2n = 2 T_n^2 - 1.
struct PowerBasis {
    std::vector<SlotVector> t;  // t[j] = T_{2^j}

    PowerBasis(Engine& eng, const SlotVector& x, std::size_t max_pow2) : eng_(eng) {
        t.push_back(x);
        for (std::size_t p = 2; p <= max_pow2; p *= 2) {
            const SlotVector& half = t.back();
            SlotVector sq = eng.mul_ct(half, half);
            t.push_back(eng.add_scalar(eng.add(sq, sq), -1.0));
        }
    }

    const SlotVector& of_degree(std::size_t pow2) const { return t[log2_exact(pow2)]; }

    Engine& eng_;
};

/// Evaluates sum_j c_j T_j by splitting at the largest power of two:
///   f = q * T_p + r  with  T_{p+a} = 2 T_a T_p - T_{p-a},
/// which keeps the multiplicative depth at the bit length of the degree.
SlotVector eval_series(Engine& eng, const PowerBasis& basis, std::vector<double> c) {
    const std::size_t d = c.empty() ? 0 : c.size() - 1;
    const std::size_t s = basis.t[0].size();
    if (d == 0) {
        SlotVector out = eng.encode(std::vector<double>(s, c.empty() ? 0.0 : c[0]));
        return out;
    }
    if (d <= 2) {
        SlotVector acc = mul_scalar(eng, basis.of_degree(1), c[1]);
        if (d == 2) acc = eng.add(acc, mul_scalar(eng, basis.of_degree(2), c[2]));
        return eng.add_scalar(acc, c[0]);
    }
    const std::size_t p = floor_pow2(d);
    if (p == d) {
        // Peel the exact top term; the rest has a strictly smaller split.
        SlotVector top = mul_scalar(eng, basis.of_degree(p), c[d]);
        c.pop_back();
        return eng.add(top, eval_series(eng, basis, std::move(c)));
    }
    std::vector<double> q(d - p + 1, 0.0);
    std::vector<double> r(c.begin(), c.begin() + static_cast<long>(p) + 1);
    for (std::size_t a = 1; a <= d - p; ++a) {
        q[a] = 2.0 * c[p + a];
        r[p - a] -= c[p + a];
    }
    SlotVector qv = eval_series(eng, basis, std::move(q));
    SlotVector prod = eng.mul_ct(qv, basis.of_degree(p));
    return eng.add(prod, eval_series(eng, basis, std::move(r)));
}

}  // namespace

int chebyshev_required_level(std::size_t degree) {
    int bits = 0;
    while ((std::size_t{1} << bits) <= degree) ++bits;
    return bits;
}

std::vector<SlotVector> cheb_basis(Engine& eng, const SlotVector& x, std::size_t n) {
    const std::size_t s = x.size();
    std::vector<SlotVector> t;
    t.reserve(n + 1);
    t.push_back(eng.encode(std::vector<double>(s, 1.0)));
    if (n == 0) return t;
    t.push_back(x);
    for (std::size_t k = 2; k <= n; ++k) {
        if (k % 2 == 0) {
            const SlotVector& half = t[k / 2];
            SlotVector sq = eng.mul_ct(half, half);
            t.push_back(eng.add_scalar(eng.add(sq, sq), -1.0));
        } else {
            SlotVector prod = eng.mul_ct(t[k / 2], t[k / 2 + 1]);
            t.push_back(eng.sub(eng.add(prod, prod), x));
        }
    }
    return t;
}

ChebPoly cheb_interpolate(const std::function<double(double)>& f, std::size_t n, double bound) {
    if (bound <= 0.0) throw std::invalid_argument("bound must be positive");
    const std::size_t points = n + 1;
    std::vector<double> y(points);
    for (std::size_t j = 0; j < points; ++j) {
        const double t = std::cos(kPi * (2.0 * static_cast<double>(j) + 1.0) /
                                  (2.0 * static_cast<double>(points)));
        y[j] = f(bound * t);
    }
    ChebPoly poly;
    poly.bound = bound;
    poly.coeffs.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < points; ++j)
            acc += y[j] * std::cos(kPi * static_cast<double>(k) *
                                   (2.0 * static_cast<double>(j) + 1.0) /
                                   (2.0 * static_cast<double>(points)));
        poly.coeffs[k] = 2.0 * acc / static_cast<double>(points);
    }
    poly.coeffs[0] /= 2.0;
    return poly;
}

double cheb_eval(const ChebPoly& poly, double x) {
    const double t = x / poly.bound;
    const std::size_t n = poly.degree();
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = n; k >= 1; --k) {
        const double b = 2.0 * t * b1 - b2 + poly.coeffs[k];
        b2 = b1;
        b1 = b;
    }
    return t * b1 - b2 + poly.coeffs[0];
}

double max_abs_error(const ChebPoly& poly, const std::function<double(double)>& f,
                     std::size_t grid_points) {
    double worst = 0.0;
    for (std::size_t i = 0; i <= grid_points; ++i) {
        const double x = -poly.bound + 2.0 * poly.bound * static_cast<double>(i) /
                                           static_cast<double>(grid_points);
        worst = std::max(worst, std::abs(cheb_eval(poly, x) - f(x)));
    }
    return worst;
}

SlotVector eval_chebyshev(Engine& eng, const SlotVector& x, const ChebPoly& poly,
                          bool prescaled) {
    const std::size_t d = poly.degree();
    const int needed = chebyshev_required_level(d) + (prescaled ? 0 : 1);
    if (x.level < needed)
        throw std::runtime_error("insufficient level for activation: bootstrap required");
    SlotVector t = prescaled ? x : mul_scalar(eng, x, 1.0 / poly.bound);
    if (d == 0) return eng.encode(std::vector<double>(x.size(), poly.coeffs.empty() ? 0.0 : poly.coeffs[0]));
    PowerBasis basis(eng, t, floor_pow2(d));
    return eval_series(eng, basis, poly.coeffs);
}

PackedImage apply_activation(Engine& eng, const PackedImage& p, const ChebPoly& poly,
                             bool prescaled) {
    PackedImage out = p;
    for (std::size_t u = 0; u < p.shards.size(); ++u)
        out.shards[u] = eval_chebyshev(eng, p.shards[u], poly, prescaled);
    return out;
}

namespace {

/// Chebyshev-basis values at a point, for the exchange solve.
void cheb_row(double t, std::size_t n, std::vector<long double>& row) {
    row.resize(n + 1);
    long double t0 = 1.0L, t1 = t;
    row[0] = t0;
    if (n >= 1) row[1] = t1;
    for (std::size_t k = 2; k <= n; ++k) {
        const long double tk = 2.0L * t * t1 - t0;
        row[k] = tk;
        t0 = t1;
        t1 = tk;
    }
}

std::vector<long double> solve_dense(std::vector<std::vector<long double>> a,
                                     std::vector<long double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(static_cast<double>(a[r][col])) >
                std::abs(static_cast<double>(a[pivot][col])))
                pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (a[col][col] == 0.0L) throw std::runtime_error("singular exchange system");
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double factor = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[r][k] -= factor * a[col][k];
            b[r] -= factor * b[col];
        }
    }
    std::vector<long double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        long double acc = b[ri];
        for (std::size_t k = ri + 1; k < n; ++k) acc -= a[ri][k] * x[k];
        x[ri] = acc / a[ri][ri];
    }
    return x;
}

}  // namespace

MinimaxResult remez_minimax(const std::function<double(double)>& f, std::size_t n, double bound,
                            std::size_t grid_points, int max_iterations) {
    const auto g = [&](double t) { return f(bound * t); };

    // Initial reference: extrema of T_{n+1}.
    std::vector<double> ref(n + 2);
    for (std::size_t j = 0; j < n + 2; ++j)
        ref[j] = -std::cos(kPi * static_cast<double>(j) / static_cast<double>(n + 1));

    std::vector<double> grid(grid_points + 1);
    for (std::size_t i = 0; i <= grid_points; ++i)
        grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_points);

    ChebPoly poly;
    poly.bound = bound;
    poly.coeffs.assign(n + 1, 0.0);
    double levelled = 0.0;

    int it = 0;
    for (; it < max_iterations; ++it) {
        // Solve p(t_j) + (-1)^j E = g(t_j) for the coefficients and E.
        const std::size_t dim = n + 2;
        std::vector<std::vector<long double>> a(dim, std::vector<long double>(dim));
        std::vector<long double> b(dim);
        std::vector<long double> row;
        for (std::size_t j = 0; j < dim; ++j) {
            cheb_row(ref[j], n, row);
            for (std::size_t k = 0; k <= n; ++k) a[j][k] = row[k];
            a[j][n + 1] = (j % 2 == 0) ? 1.0L : -1.0L;
            b[j] = g(ref[j]);
        }
        const auto sol = solve_dense(std::move(a), std::move(b));
        for (std::size_t k = 0; k <= n; ++k) poly.coeffs[k] = static_cast<double>(sol[k]);
        levelled = std::abs(static_cast<double>(sol[n + 1]));

        // Error on the dense grid; pick local extrema.
        std::vector<double> err(grid.size());
        ChebPoly unit = poly;
        unit.bound = 1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) err[i] = cheb_eval(unit, grid[i]) - g(grid[i]);

        std::vector<std::size_t> cand;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const bool left_ok = (i == 0) || std::abs(err[i]) >= std::abs(err[i - 1]);
            const bool right_ok = (i + 1 == grid.size()) || std::abs(err[i]) > std::abs(err[i + 1]);
            if (left_ok && right_ok) cand.push_back(i);
        }
        // Merge consecutive same-sign candidates, keeping the largest.
        std::vector<std::size_t> picks;
        for (std::size_t idx : cand) {
            if (!picks.empty() && (err[picks.back()] > 0) == (err[idx] > 0)) {
                if (std::abs(err[idx]) > std::abs(err[picks.back()])) picks.back() = idx;
            } else {
                picks.push_back(idx);
            }
        }
        while (picks.size() > n + 2) {
            if (std::abs(err[picks.front()]) < std::abs(err[picks.back()]))
                picks.erase(picks.begin());
            else
                picks.pop_back();
        }
        if (picks.size() < n + 2) break;  // degenerate alternation; keep last solution

        double max_err = 0.0;
        for (std::size_t idx : picks) max_err = std::max(max_err, std::abs(err[idx]));
        for (std::size_t j = 0; j < picks.size(); ++j) ref[j] = grid[picks[j]];
        if (max_err - levelled <= 1e-10 * max_err) {
            ++it;
            break;
        }
    }

    MinimaxResult result;
    result.poly = poly;
    result.iterations = it;
    result.max_error = max_abs_error(poly, f, 100000);
    return result;
}

}  // namespace shardnn
