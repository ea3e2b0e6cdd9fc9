#pragma once

#include "shardnn/act.hpp"
#include "shardnn/tensor.hpp"

#include <string>

namespace shardnn {

/// Plain-text fixture formats, stable across versions:
///   tensor: "c m" header, then c*m*m reals row-major by channel
///   filter: "c_in c_out kappa" header, then weights in (f, g, row, col)
///           order, then c_out bias values
///   linear: "out_features in_features" header, then W row-major, then b
///   poly:   "degree bound" header, then degree+1 Chebyshev coefficients

ImageTensor load_tensor(const std::string& path);
void save_tensor(const std::string& path, const ImageTensor& t);

struct FilterFixture {
    FilterTensor filter;
    std::vector<double> bias;
};

FilterFixture load_filter(const std::string& path);
void save_filter(const std::string& path, const FilterTensor& k, const std::vector<double>& bias);

LinearWeights load_linear(const std::string& path);
void save_linear(const std::string& path, const LinearWeights& w);

ChebPoly load_poly(const std::string& path);
void save_poly(const std::string& path, const ChebPoly& p);

}  // namespace shardnn
