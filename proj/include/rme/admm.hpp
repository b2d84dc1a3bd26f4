#pragma once

#include "rme/tensor.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace rme {

/// Hyperparameters of the low-rank + sparse + noise-ball ADMM solver.
/// mu, theta and beta follow a multiplicative continuation schedule
/// (x growth per iteration, capped at penalty_cap); rho stays fixed.
struct AdmmHyperParams {
  std::array<double, 3> alpha{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::optional<double> lambda;  // default 1/sqrt(max(h, w))
  double mu = 1e-2;
  double theta = 1e-2;
  double beta = 1e-2;
  double rho = 1e-2;
  double growth = 1.05;
  double penalty_cap = 1e2;
  double delta = 0.0;
  int max_iters = 200;
  double tol = 1e-5;
  // Re-checks the noise-ball bound after every N update and throws if it is
  // violated. Used by the test suites.
  bool check_invariants = false;

  void validate() const;
  double resolved_lambda(const Dims& d) const;
};

enum class ProxMode {
  Identity,  // f = g = 0: P = X + Gamma/theta, Q = E + Phi/beta
  None,      // regularizer branch disabled: P = Q = 0
};

struct AdmmState {
  Tensor3 x, e, n, p, q;
  Tensor3 lam, gam, phi;
  std::array<Tensor3, 3> m;
  std::array<Tensor3, 3> y;
  // Penalties in effect for the next iteration.
  double mu = 0.0;
  double theta = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  int iter = 0;
  double primal_residual = 0.0;
};

// All iterates and multipliers zero except X = P_Omega(D).
AdmmState init_state(const Tensor3& d, const ObservationMask& mask, const AdmmHyperParams& hp);

Tensor3 psi_x(const AdmmState& s, const Tensor3& d, const ObservationMask& mask);
Tensor3 psi_e(const AdmmState& s, const Tensor3& d, const ObservationMask& mask);
Tensor3 psi_n(const AdmmState& s, const Tensor3& d, const ObservationMask& mask);

std::array<Tensor3, 3> update_m(const AdmmState& s, const AdmmHyperParams& hp);
Tensor3 update_x(const AdmmState& s, const Tensor3& psi);
Tensor3 update_e(const AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                 const AdmmHyperParams& hp);
// Projection of Psi_N onto {N : ||P_Omega(N)||_F <= delta}. Off-Omega entries
// pass through unchanged.
Tensor3 update_n(const AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                 double delta);
Tensor3 noise_ball_project(const Tensor3& psi, const ObservationMask& mask, double delta);
std::pair<Tensor3, Tensor3> update_pq_classical(const AdmmState& s, ProxMode mode);
AdmmState update_multipliers(const AdmmState& s, const Tensor3& d, const ObservationMask& mask);

double primal_residual(const AdmmState& s, const Tensor3& d, const ObservationMask& mask);

// One full iteration in the order M_i -> X -> E -> N -> (P, Q) -> multipliers,
// followed by the penalty continuation step.
void admm_iteration(AdmmState& s, const Tensor3& d, const ObservationMask& mask,
                    const AdmmHyperParams& hp, ProxMode mode = ProxMode::Identity);

struct AdmmHistory {
  std::vector<double> primal_residual;
  std::vector<double> rel_change;
  std::size_t noise_ball_checks = 0;
  double max_noise_ball_excess = 0.0;  // max(||P_Omega(N)|| - delta), <= 0 when satisfied
};

struct AdmmResult {
  Tensor3 x, e, n;
  AdmmHistory history;
  int iterations = 0;
  bool converged = false;

  Tensor3 estimate() const { return x + e; }
};

AdmmResult solve_admm(const Tensor3& d, const ObservationMask& mask, const AdmmHyperParams& hp,
                      ProxMode mode = ProxMode::Identity);

struct HalrtcParams {
  std::array<double, 3> alpha{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double rho = 0.1;
  int max_iters = 500;
  double tol = 1e-5;
};

struct HalrtcResult {
  Tensor3 x;
  int iterations = 0;
  bool converged = false;
};

// Plain HaLRTC: M_i/Y_i splitting with the observed entries re-imposed on X
// after every iteration.
HalrtcResult solve_halrtc(const Tensor3& d, const ObservationMask& mask, const HalrtcParams& p);

// Trailing moving average over full windows only (size - window + 1 values).
std::vector<double> smoothed(const std::vector<double>& series, std::size_t window);

} // namespace rme
