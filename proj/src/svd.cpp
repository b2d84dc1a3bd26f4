#include "rme/svd.hpp"

#include "rme/error.hpp"
#include "rme/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rme {
namespace {

// Orthogonalizes the rows of `w` (r x c, r <= c). On return w = R * A with R
// orthogonal, accumulated in `rot` (r x r). Returns the number of sweeps.
int orthogonalize_rows(Matrix& w, Matrix& rot, const SvdOptions& opts) {
  const auto& kt = kernels::active();
  const std::size_t r = w.rows;
  const std::size_t c = w.cols;
  std::vector<double> norms(r);

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < r; ++i) norms[i] = kt.sum_sq(w.row(i).data(), c);
    bool rotated = false;
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < r; ++p) {
      for (std::size_t q = p + 1; q < r; ++q) {
        const double alpha = norms[p];
        const double beta = norms[q];
        const double gamma = kt.dot(w.row(p).data(), w.row(q).data(), c);
        const double scale = std::sqrt(alpha * beta);
        if (scale == 0.0 || std::fabs(gamma) <= opts.tol * scale) continue;
        worst = std::max(worst, std::fabs(gamma) / scale);
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        kt.rotate(w.row(p).data(), w.row(q).data(), cs, sn, c);
        kt.rotate(rot.row(p).data(), rot.row(q).data(), cs, sn, r);
        norms[p] = cs * cs * alpha + sn * sn * beta - 2.0 * cs * sn * gamma;
        norms[q] = sn * sn * alpha + cs * cs * beta + 2.0 * cs * sn * gamma;
      }
    }
    if (!rotated) return sweep;
    if (sweep == opts.max_sweeps)
      throw_numerical("jacobi_svd: no convergence after " + std::to_string(sweep) +
                      " sweeps on a " + std::to_string(r) + "x" + std::to_string(c) +
                      " matrix (max relative off-diagonal " + std::to_string(worst) + ")");
  }
  return opts.max_sweeps;
}

} // namespace

Svd jacobi_svd(const Matrix& a, const SvdOptions& opts) {
  for (double v : a.data)
    if (!std::isfinite(v)) throw_invalid("jacobi_svd: input contains non-finite values");
  if (a.rows == 0 || a.cols == 0) throw_invalid("jacobi_svd: empty matrix");

  const bool wide = a.rows <= a.cols;
  Matrix w = wide ? a : a.transposed();
  const std::size_t r = w.rows;
  const std::size_t c = w.cols;
  Matrix rot(r, r);
  for (std::size_t i = 0; i < r; ++i) rot(i, i) = 1.0;

  Svd out;
  out.sweeps = orthogonalize_rows(w, rot, opts);

  // w = R * A_short  =>  A_short = R^T w; row i of w is s_i * (right vector i).
  std::vector<double> sv(r);
  for (std::size_t i = 0; i < r; ++i) sv[i] = std::sqrt(kernels::sum_sq(w.row(i)));
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  Matrix left(r, r);   // columns are left vectors of A_short
  Matrix right(c, r);  // columns are right vectors of A_short
  out.s.resize(r);
  for (std::size_t j = 0; j < r; ++j) {
    const std::size_t i = order[j];
    out.s[j] = sv[i];
    for (std::size_t t = 0; t < r; ++t) left(t, j) = rot(i, t);
    if (sv[i] > 0.0) {
      const double inv = 1.0 / sv[i];
      for (std::size_t t = 0; t < c; ++t) right(t, j) = w(i, t) * inv;
    }
  }
  if (wide) {
    out.u = std::move(left);
    out.v = std::move(right);
  } else {
    out.u = std::move(right);
    out.v = std::move(left);
  }
  return out;
}

Matrix reconstruct(const Svd& svd) {
  Matrix out(svd.u.rows, svd.v.rows);
  for (std::size_t j = 0; j < svd.s.size(); ++j) {
    if (svd.s[j] == 0.0) continue;
    for (std::size_t i = 0; i < out.rows; ++i) {
      const double a = svd.u(i, j) * svd.s[j];
      if (a == 0.0) continue;
      for (std::size_t t = 0; t < out.cols; ++t) out(i, t) += a * svd.v(t, j);
    }
  }
  return out;
}

} // namespace rme
