#pragma once

#include "rme/svd.hpp"
#include "rme/tensor.hpp"

namespace rme {

/// Singular value thresholding with the factors kept around for the
/// fixed-pattern backward pass of the unrolled network.
struct SvtResult {
  Matrix value;
  Svd svd;
  std::size_t retained = 0;  // number of singular values strictly above tau
};

// U * max(S - tau, 0) * V^T, the prox of tau * nuclear norm.
Matrix svt(const Matrix& m, double tau);
SvtResult svt_factored(const Matrix& m, double tau);

// fold(svt(unfold(t, mode), tau), mode)
Tensor3 svt_mode(const Tensor3& t, int mode, double tau);

// Elementwise sign(x) * max(|x| - tau, 0), the prox of tau * l1 norm.
Tensor3 soft_threshold(const Tensor3& t, double tau);

// Number of singular values above rel_floor * s_max.
std::size_t numerical_rank(const std::vector<double>& s, double rel_floor = 1e-12);

} // namespace rme
