#pragma once

#include "shardnn/tensor.hpp"

namespace shardnn {

/// Plaintext references used as ground truth by the tests and the CLI's
/// side-by-side comparison. Textbook semantics, no packing.

/// Same-padding cross-correlation (no kernel flip), stride 1 or 2.
ImageTensor oracle_conv(const ImageTensor& t, const FilterTensor& k, int stride = 1);

/// Conv followed by a per-output-channel affine y = scale * x + bias.
ImageTensor oracle_affine(const ImageTensor& t, const AffineParams& a);

/// 2x2 stride-2 average pooling.
ImageTensor oracle_avgpool2x2(const ImageTensor& t);

/// W x + b over the row-major flattening of the tensor.
std::vector<double> oracle_linear(const std::vector<double>& x, const LinearWeights& w);

/// Linear layer over per-channel means.
std::vector<double> oracle_pool_linear(const ImageTensor& t, const LinearWeights& w);

double oracle_gelu(double x);
double oracle_relu(double x);

ImageTensor oracle_map(const ImageTensor& t, double (*f)(double));

std::vector<double> flatten(const ImageTensor& t);

}  // namespace shardnn
