#pragma once

#include "rme/tensor.hpp"

#include <vector>

namespace rme {

/// Thin SVD A = U diag(s) V^T with r = min(rows, cols) triplets sorted by
/// decreasing singular value. u is rows x r, v is cols x r.
struct Svd {
  Matrix u;
  std::vector<double> s;
  Matrix v;
  int sweeps = 0;
};

struct SvdOptions {
  int max_sweeps = 60;
  double tol = 1e-15;
};

// One-sided (Hestenes) Jacobi SVD. Rows of the shorter side are rotated
// pairwise until mutually orthogonal; the inner loops go through the SIMD
// kernel table. Throws NumericalFailure if max_sweeps is exhausted.
Svd jacobi_svd(const Matrix& a, const SvdOptions& opts = {});

Matrix reconstruct(const Svd& svd);

} // namespace rme
