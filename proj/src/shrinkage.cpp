#include "rme/shrinkage.hpp"

#include "rme/error.hpp"
#include "rme/kernels.hpp"

#include <cmath>

namespace rme {

SvtResult svt_factored(const Matrix& m, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw_invalid("svt: tau must be finite and >= 0");
  SvtResult out;
  out.svd = jacobi_svd(m);
  out.value = Matrix(m.rows, m.cols);
  const auto& kt = kernels::active();
  const Svd& f = out.svd;
  std::vector<double> vrow(m.cols);
  for (std::size_t j = 0; j < f.s.size(); ++j) {
    const double shrunk = f.s[j] - tau;
    if (!(shrunk > 0.0)) break;  // sorted descending
    ++out.retained;
    for (std::size_t t = 0; t < m.cols; ++t) vrow[t] = f.v(t, j);
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double a = f.u(i, j) * shrunk;
      if (a != 0.0) kt.axpy(a, vrow.data(), out.value.row(i).data(), m.cols);
    }
  }
  return out;
}

Matrix svt(const Matrix& m, double tau) { return svt_factored(m, tau).value; }

Tensor3 svt_mode(const Tensor3& t, int mode, double tau) {
  return fold(svt(unfold(t, mode).mat, tau), mode, t.dims());
}

Tensor3 soft_threshold(const Tensor3& t, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw_invalid("soft_threshold: tau must be finite and >= 0");
  if (!t.all_finite()) throw_invalid("soft_threshold: input contains non-finite values");
  Tensor3 out(t.dims());
  kernels::active().soft_threshold(t.data(), out.data(), tau, t.size());
  return out;
}

std::size_t numerical_rank(const std::vector<double>& s, double rel_floor) {
  if (s.empty() || s.front() <= 0.0) return 0;
  const double floor = rel_floor * s.front();
  std::size_t r = 0;
  for (double v : s)
    if (v > floor) ++r;
  return r;
}

} // namespace rme
