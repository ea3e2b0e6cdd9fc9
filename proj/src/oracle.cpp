#include "shardnn/oracle.hpp"

#include <cmath>

namespace shardnn {

ImageTensor oracle_conv(const ImageTensor& t, const FilterTensor& k, int stride) {
    if (k.c_in != t.c) throw std::invalid_argument("input channel mismatch");
    if (stride != 1 && stride != 2) throw std::invalid_argument("stride must be 1 or 2");
    const long h = static_cast<long>(k.kappa) / 2;
    const std::size_t m_out = (stride == 1) ? t.m : t.m / 2;
    ImageTensor out(k.c_out, m_out);
    for (std::size_t g = 0; g < k.c_out; ++g) {
        for (std::size_t i = 0; i < m_out; ++i) {
            for (std::size_t j = 0; j < m_out; ++j) {
                double acc = 0.0;
                for (std::size_t f = 0; f < k.c_in; ++f) {
                    for (long kr = -h; kr <= h; ++kr) {
                        for (long kc = -h; kc <= h; ++kc) {
                            acc += k.centered(f, g, kr, kc) *
                                   t.padded(f, static_cast<long>(i) * stride + kr,
                                            static_cast<long>(j) * stride + kc);
                        }
                    }
                }
                out.at(g, i, j) = acc;
            }
        }
    }
    return out;
}

ImageTensor oracle_affine(const ImageTensor& t, const AffineParams& a) {
    if (a.scale.size() != t.c || a.bias.size() != t.c)
        throw std::invalid_argument("affine channel mismatch");
    ImageTensor out = t;
    for (std::size_t ch = 0; ch < t.c; ++ch)
        for (std::size_t i = 0; i < t.m; ++i)
            for (std::size_t j = 0; j < t.m; ++j)
                out.at(ch, i, j) = a.scale[ch] * t.at(ch, i, j) + a.bias[ch];
    return out;
}

ImageTensor oracle_avgpool2x2(const ImageTensor& t) {
    if (t.m < 2) throw std::invalid_argument("cannot pool a 1x1 channel");
    ImageTensor out(t.c, t.m / 2);
    for (std::size_t ch = 0; ch < t.c; ++ch)
        for (std::size_t i = 0; i < t.m / 2; ++i)
            for (std::size_t j = 0; j < t.m / 2; ++j)
                out.at(ch, i, j) = 0.25 * (t.at(ch, 2 * i, 2 * j) + t.at(ch, 2 * i, 2 * j + 1) +
                                           t.at(ch, 2 * i + 1, 2 * j) + t.at(ch, 2 * i + 1, 2 * j + 1));
    return out;
}

std::vector<double> oracle_linear(const std::vector<double>& x, const LinearWeights& w) {
    if (x.size() != w.in_features) throw std::invalid_argument("in_features mismatch");
    std::vector<double> out(w.out_features);
    for (std::size_t o = 0; o < w.out_features; ++o) {
        double acc = w.b[o];
        for (std::size_t i = 0; i < w.in_features; ++i) acc += w.at(o, i) * x[i];
        out[o] = acc;
    }
    return out;
}

std::vector<double> oracle_pool_linear(const ImageTensor& t, const LinearWeights& w) {
    if (w.in_features != t.c) throw std::invalid_argument("pool-linear expects one feature per channel");
    std::vector<double> means(t.c, 0.0);
    for (std::size_t ch = 0; ch < t.c; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < t.m; ++i)
            for (std::size_t j = 0; j < t.m; ++j) acc += t.at(ch, i, j);
        means[ch] = acc / static_cast<double>(t.m * t.m);
    }
    return oracle_linear(means, w);
}

double oracle_gelu(double x) {
    // x * Phi(x) with Phi the standard normal CDF.
    return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
}

double oracle_relu(double x) { return x > 0.0 ? x : 0.0; }

ImageTensor oracle_map(const ImageTensor& t, double (*f)(double)) {
    ImageTensor out = t;
    for (double& v : out.data) v = f(v);
    return out;
}

std::vector<double> flatten(const ImageTensor& t) { return t.data; }

}  // namespace shardnn
