#include "shardnn/io.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace shardnn {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

void read_values(std::ifstream& in, std::vector<double>& v, const std::string& path) {
    for (double& x : v)
        if (!(in >> x)) throw std::runtime_error("truncated fixture: " + path);
}

}  // namespace

ImageTensor load_tensor(const std::string& path) {
    auto in = open_in(path);
    std::size_t c = 0, m = 0;
    if (!(in >> c >> m)) throw std::runtime_error("bad tensor header: " + path);
    ImageTensor t(c, m);
    read_values(in, t.data, path);
    return t;
}

void save_tensor(const std::string& path, const ImageTensor& t) {
    auto out = open_out(path);
    out << t.c << " " << t.m << "\n";
    for (std::size_t i = 0; i < t.data.size(); ++i)
        out << t.data[i] << ((i + 1) % t.m == 0 ? "\n" : " ");
}

FilterFixture load_filter(const std::string& path) {
    auto in = open_in(path);
    std::size_t ci = 0, co = 0, k = 0;
    if (!(in >> ci >> co >> k)) throw std::runtime_error("bad filter header: " + path);
    FilterFixture f{FilterTensor(ci, co, k), std::vector<double>(co)};
    read_values(in, f.filter.weights, path);
    read_values(in, f.bias, path);
    return f;
}

void save_filter(const std::string& path, const FilterTensor& k, const std::vector<double>& bias) {
    if (!bias.empty() && bias.size() != k.c_out) throw std::invalid_argument("bias size mismatch");
    auto out = open_out(path);
    out << k.c_in << " " << k.c_out << " " << k.kappa << "\n";
    for (std::size_t i = 0; i < k.weights.size(); ++i)
        out << k.weights[i] << ((i + 1) % (k.kappa * k.kappa) == 0 ? "\n" : " ");
    for (std::size_t g = 0; g < k.c_out; ++g)
        out << (bias.empty() ? 0.0 : bias[g]) << (g + 1 == k.c_out ? "\n" : " ");
}

LinearWeights load_linear(const std::string& path) {
    auto in = open_in(path);
    std::size_t o = 0, i = 0;
    if (!(in >> o >> i)) throw std::runtime_error("bad linear header: " + path);
    LinearWeights w(o, i);
    read_values(in, w.w, path);
    read_values(in, w.b, path);
    return w;
}

void save_linear(const std::string& path, const LinearWeights& w) {
    auto out = open_out(path);
    out << w.out_features << " " << w.in_features << "\n";
    for (std::size_t i = 0; i < w.w.size(); ++i)
        out << w.w[i] << ((i + 1) % w.in_features == 0 ? "\n" : " ");
    for (std::size_t o = 0; o < w.out_features; ++o)
        out << w.b[o] << (o + 1 == w.out_features ? "\n" : " ");
}

ChebPoly load_poly(const std::string& path) {
    auto in = open_in(path);
    std::size_t degree = 0;
    double bound = 0.0;
    if (!(in >> degree >> bound)) throw std::runtime_error("bad poly header: " + path);
    ChebPoly p;
    p.bound = bound;
    p.coeffs.resize(degree + 1);
    read_values(in, p.coeffs, path);
    return p;
}

void save_poly(const std::string& path, const ChebPoly& p) {
    auto out = open_out(path);
    out << p.degree() << " " << p.bound << "\n";
    for (std::size_t i = 0; i < p.coeffs.size(); ++i)
        out << p.coeffs[i] << (i + 1 == p.coeffs.size() ? "\n" : " ");
}

}  // namespace shardnn
