#include "rme/admm.hpp"

#include "rme/error.hpp"
#include "rme/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rme {

void AdmmHyperParams::validate() const {
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw_invalid("admm: alpha weights must be non-negative");
    sum += a;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw_invalid("admm: alpha weights must sum to 1");
  if (lambda && !(*lambda > 0.0)) throw_invalid("admm: lambda must be positive");
  if (!(mu > 0.0) || !(theta > 0.0) || !(beta > 0.0) || !(rho > 0.0))
    throw_invalid("admm: mu, theta, beta and rho must be positive");
  if (!(growth >= 1.0)) throw_invalid("admm: growth must be >= 1");
  if (!(penalty_cap > 0.0)) throw_invalid("admm: penalty_cap must be positive");
  if (!(delta >= 0.0)) throw_invalid("admm: delta must be non-negative");
  if (max_iters < 1) throw_invalid("admm: max_iters must be >= 1");
  if (!(tol > 0.0)) throw_invalid("admm: tol must be positive");
}

double AdmmHyperParams::resolved_lambda(const Dims& d) const {
  if (lambda) return *lambda;
  return 1.0 / std::sqrt(static_cast<double>(std::max(d.h, d.w)));
}

AdmmState init_state(const Tensor3& d, const ObservationMask& mask, const AdmmHyperParams& hp) {
  check_mask_dims(d, mask, "admm");
  if (mask.count() == 0) throw_invalid("admm: observation mask is empty");
  const Tensor3 zero(d.dims());
  AdmmState s{zero, zero, zero, zero, zero, zero, zero, zero, {zero, zero, zero},
              {zero, zero, zero}};
  s.x = project(d, mask);
  s.mu = hp.mu;
  s.theta = hp.theta;
  s.beta = hp.beta;
  s.rho = hp.rho;
  s.primal_residual = primal_residual(s, d, mask);
  return s;
}

Tensor3 psi_x(const AdmmState& s, const Tensor3& d, const ObservationMask& mask) {
  const Tensor3 pd = project(d, mask);
  const double inv = 1.0 / (s.mu + s.theta);
  Tensor3 out(d.dims());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (s.lam[i] + s.mu * pd[i] - s.mu * s.e[i] - s.mu * s.n[i] + s.theta * s.p[i] -
              s.gam[i]) *
             inv;
  return out;
}

Tensor3 psi_e(const AdmmState& s, const Tensor3& d, const ObservationMask& mask) {
  const Tensor3 pd = project(d, mask);
  const double inv = 1.0 / (s.mu + s.beta);
  Tensor3 out(d.dims());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (s.lam[i] + s.mu * pd[i] - s.mu * s.x[i] - s.mu * s.n[i] + s.beta * s.q[i] -
              s.phi[i]) *
             inv;
  return out;
}

Tensor3 psi_n(const AdmmState& s, const Tensor3& d, const ObservationMask& mask) {
  const Tensor3 pd = project(d, mask);
  const double inv = 1.0 / s.mu;
  Tensor3 out(d.dims());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = pd[i] - s.x[i] - s.e[i] + s.lam[i] * inv;
  return out;
}

std::array<Tensor3, 3> update_m(const AdmmState& s, const AdmmHyperParams& hp) {
  if (!(s.rho > 0.0)) throw_invalid("update_m: rho must be positive");
  std::array<Tensor3, 3> out;
  for (int i = 0; i < 3; ++i) {
    Tensor3 shifted = s.x;
    const double inv = 1.0 / s.rho;
    for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] += s.y[i][j] * inv;
    out[i] = svt_mode(shifted, i + 1, hp.alpha[i] / s.rho);
  }
  return out;
}

Tensor3 update_x(const AdmmState& s, const Tensor3& psi) {
  const double w = s.mu + s.theta;
  const double inv = 1.0 / (3.0 * s.rho + w);
  Tensor3 out(psi.dims());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = w * psi[j];
    for (int i = 0; i < 3; ++i) acc += s.rho * s.m[i][j] - s.y[i][j];
    out[j] = acc * inv;
  }
  return out;
}

Tensor3 update_e(const AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                 const AdmmHyperParams& hp) {
  const double tau = hp.resolved_lambda(d.dims()) / (s.mu + s.beta);
  return soft_threshold(psi_e(s, d, mask), tau);
}

Tensor3 noise_ball_project(const Tensor3& psi, const ObservationMask& mask, double delta) {
  check_mask_dims(psi, mask, "noise_ball_project");
  const double r = fro_norm(project(psi, mask));
  const double factor = r == 0.0 ? 1.0 : std::min(delta / r, 1.0);
  Tensor3 out = psi;
  if (factor == 1.0) return out;
  const std::size_t k = psi.k();
  for (std::size_t row = 0; row < psi.h(); ++row)
    for (std::size_t col = 0; col < psi.w(); ++col) {
      if (!mask(row, col)) continue;
      for (std::size_t b = 0; b < k; ++b) out(row, col, b) *= factor;
    }
  return out;
}

Tensor3 update_n(const AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                 double delta) {
  return noise_ball_project(psi_n(s, d, mask), mask, delta);
}

std::pair<Tensor3, Tensor3> update_pq_classical(const AdmmState& s, ProxMode mode) {
  if (mode == ProxMode::None) return {Tensor3(s.x.dims()), Tensor3(s.e.dims())};
  Tensor3 p = s.x;
  Tensor3 q = s.e;
  const double it = 1.0 / s.theta;
  const double ib = 1.0 / s.beta;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] += s.gam[j] * it;
    q[j] += s.phi[j] * ib;
  }
  return {std::move(p), std::move(q)};
}

AdmmState update_multipliers(const AdmmState& s, const Tensor3& d, const ObservationMask& mask) {
  AdmmState out = s;
  const Tensor3 pd = project(d, mask);
  for (std::size_t j = 0; j < pd.size(); ++j) {
    out.lam[j] += s.mu * (pd[j] - s.x[j] - s.e[j] - s.n[j]);
    out.gam[j] += s.theta * (s.x[j] - s.p[j]);
    out.phi[j] += s.beta * (s.e[j] - s.q[j]);
    for (int i = 0; i < 3; ++i) out.y[i][j] += s.rho * (s.x[j] - s.m[i][j]);
  }
  return out;
}

double primal_residual(const AdmmState& s, const Tensor3& d, const ObservationMask& mask) {
  const Tensor3 pd = project(d, mask);
  double acc = 0.0;
  for (std::size_t j = 0; j < pd.size(); ++j) {
    const double r = pd[j] - s.x[j] - s.e[j] - s.n[j];
    acc += r * r;
  }
  return std::sqrt(acc);
}

namespace {

void step(AdmmState& s, const Tensor3& d, const ObservationMask& mask, const AdmmHyperParams& hp,
          ProxMode mode, AdmmHistory* history) {
  s.m = update_m(s, hp);
  s.x = update_x(s, psi_x(s, d, mask));
  s.e = update_e(s, d, mask, hp);
  s.n = update_n(s, d, mask, hp.delta);
  if (hp.check_invariants || history != nullptr) {
    const double excess = fro_norm(project(s.n, mask)) - hp.delta;
    if (history != nullptr) {
      ++history->noise_ball_checks;
      history->max_noise_ball_excess = history->noise_ball_checks == 1
                                           ? excess
                                           : std::max(history->max_noise_ball_excess, excess);
    }
    if (hp.check_invariants && excess > 1e-12)
      throw_numerical("admm: noise-ball bound violated at iteration " + std::to_string(s.iter) +
                      " (excess " + std::to_string(excess) + ")");
  }
  auto [p, q] = update_pq_classical(s, mode);
  s.p = std::move(p);
  s.q = std::move(q);
  s.primal_residual = primal_residual(s, d, mask);
  s = update_multipliers(s, d, mask);
  s.mu = std::min(s.mu * hp.growth, hp.penalty_cap);
  s.theta = std::min(s.theta * hp.growth, hp.penalty_cap);
  s.beta = std::min(s.beta * hp.growth, hp.penalty_cap);
  ++s.iter;
}

} // namespace

void admm_iteration(AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                    const AdmmHyperParams& hp, ProxMode mode) {
  step(s, d, mask, hp, mode, nullptr);
}

AdmmResult solve_admm(const Tensor3& d, const ObservationMask& mask, const AdmmHyperParams& hp,
                      ProxMode mode) {
  hp.validate();
  if (!d.all_finite()) throw_invalid("admm: observation tensor contains non-finite values");
  AdmmState s = init_state(d, mask, hp);
  AdmmResult out;
  Tensor3 prev = s.x + s.e;
  for (int it = 0; it < hp.max_iters; ++it) {
    try {
      step(s, d, mask, hp, mode, &out.history);
    } catch (const Error& err) {
      if (err.category() != ErrorCategory::NumericalFailure) throw;
      throw_numerical(std::string(err.what()) + " [admm iteration " + std::to_string(it) + "]");
    }
    Tensor3 cur = s.x + s.e;
    if (!cur.all_finite())
      throw_numerical("admm: non-finite iterate at iteration " + std::to_string(it));
    const double change = fro_norm(cur - prev) / std::max(fro_norm(prev), 1e-12);
    out.history.primal_residual.push_back(s.primal_residual);
    out.history.rel_change.push_back(change);
    prev = std::move(cur);
    if (change < hp.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = s.iter;
  out.x = std::move(s.x);
  out.e = std::move(s.e);
  out.n = std::move(s.n);
  return out;
}

HalrtcResult solve_halrtc(const Tensor3& d, const ObservationMask& mask, const HalrtcParams& p) {
  check_mask_dims(d, mask, "halrtc");
  if (mask.count() == 0) throw_invalid("halrtc: observation mask is empty");
  if (!(p.rho > 0.0)) throw_invalid("halrtc: rho must be positive");
  if (p.max_iters < 1) throw_invalid("halrtc: max_iters must be >= 1");
  const Tensor3 zero(d.dims());
  Tensor3 x = project(d, mask);
  std::array<Tensor3, 3> y{zero, zero, zero};
  HalrtcResult out;
  const double inv_rho = 1.0 / p.rho;
  for (int it = 0; it < p.max_iters; ++it) {
    std::array<Tensor3, 3> m;
    for (int i = 0; i < 3; ++i) {
      Tensor3 shifted = x;
      for (std::size_t j = 0; j < x.size(); ++j) shifted[j] += y[i][j] * inv_rho;
      try {
        m[i] = svt_mode(shifted, i + 1, p.alpha[i] * inv_rho);
      } catch (const Error& err) {
        if (err.category() != ErrorCategory::NumericalFailure) throw;
        throw_numerical(std::string(err.what()) + " [halrtc iteration " + std::to_string(it) +
                        "]");
      }
    }
    Tensor3 next(d.dims());
    for (std::size_t j = 0; j < next.size(); ++j) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) acc += m[i][j] - y[i][j] * inv_rho;
      next[j] = acc / 3.0;
    }
    for (std::size_t r = 0; r < d.h(); ++r)
      for (std::size_t c = 0; c < d.w(); ++c)
        if (mask(r, c))
          for (std::size_t b = 0; b < d.k(); ++b) next(r, c, b) = d(r, c, b);
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < next.size(); ++j) y[i][j] += p.rho * (next[j] - m[i][j]);
    const double change = fro_norm(next - x) / std::max(fro_norm(x), 1e-12);
    x = std::move(next);
    out.iterations = it + 1;
    if (change < p.tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

std::vector<double> smoothed(const std::vector<double>& series, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || series.size() < window) return out;
  for (std::size_t i = 0; i + window <= series.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = i; j < i + window; ++j) acc += series[j];
    out.push_back(acc / static_cast<double>(window));
  }
  return out;
}

} // namespace rme
