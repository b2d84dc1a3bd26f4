#include "rme/admm.hpp"
#include "rme/error.hpp"
#include "rme/radio.hpp"
#include "rme/shrinkage.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rme;

namespace {

Tensor3 random_tensor(Dims d, std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Tensor3 t(d);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = nd(g);
  return t;
}

AdmmState random_state(Dims d, std::mt19937_64& g) {
  AdmmState s;
  for (Tensor3* t : {&s.x, &s.e, &s.n, &s.p, &s.q, &s.lam, &s.gam, &s.phi}) *t = random_tensor(d, g);
  for (int i = 0; i < 3; ++i) {
    s.m[i] = random_tensor(d, g);
    s.y[i] = random_tensor(d, g);
  }
  s.mu = 0.3;
  s.theta = 0.2;
  s.beta = 0.4;
  s.rho = 0.1;
  return s;
}

// Rank-1 background per band with a scalar band profile, so every unfolding
// has low rank.
Tensor3 low_rank_tensor(std::size_t h, std::size_t w, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> a(h), b(w);
  for (auto& v : a) v = u(g);
  for (auto& v : b) v = u(g);
  Tensor3 t(Dims{h, w, 3});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t k = 0; k < 3; ++k) t(r, c, k) = a[r] * b[c] * (1.0 - 0.1 * k);
  return t;
}

} // namespace

TEST_CASE("X update zeroes the gradient of its subproblem") {
  std::mt19937_64 g(21);
  const Dims d{4, 5, 3};
  AdmmState s = random_state(d, g);
  const Tensor3 psi = random_tensor(d, g);
  const Tensor3 x = update_x(s, psi);
  // sum_i rho (X - M_i + Y_i/rho) + (mu + theta)(X - psi) = 0
  for (std::size_t j = 0; j < x.size(); ++j) {
    double grad = (s.mu + s.theta) * (x[j] - psi[j]);
    for (int i = 0; i < 3; ++i) grad += s.rho * (x[j] - s.m[i][j]) + s.y[i][j];
    CHECK(std::fabs(grad) < 1e-12);
  }
}

TEST_CASE("Psi_X matches its defining expression") {
  std::mt19937_64 g(22);
  const Dims d{3, 3, 3};
  AdmmState s = random_state(d, g);
  const Tensor3 full = random_tensor(d, g);
  ObservationMask mask(3, 3);
  mask.set(1, 2, true);
  const Tensor3 px = psi_x(s, full, mask);
  const Tensor3 pd = project(full, mask);
  for (std::size_t j = 0; j < px.size(); ++j) {
    const double want =
        (s.lam[j] + s.mu * (pd[j] - s.e[j] - s.n[j]) + s.theta * s.p[j] - s.gam[j]) / (s.mu + s.theta);
    CHECK(px[j] == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("E update minimizes the l1 subproblem elementwise") {
  std::mt19937_64 g(23);
  const Dims d{3, 4, 3};
  AdmmState s = random_state(d, g);
  const Tensor3 full = random_tensor(d, g);
  const ObservationMask mask = ObservationMask::full(3, 4);
  AdmmHyperParams hp;
  hp.lambda = 0.25;
  const Tensor3 e = update_e(s, full, mask, hp);
  const Tensor3 pe = psi_e(s, full, mask);
  const double w = s.mu + s.beta;
  for (std::size_t j = 0; j < e.size(); ++j) {
    auto f = [&](double z) { return 0.25 * std::fabs(z) + 0.5 * w * (z - pe[j]) * (z - pe[j]); };
    for (double dz : {-1e-4, 1e-4}) CHECK(f(e[j]) <= f(e[j] + dz) + 1e-15);
  }
}

TEST_CASE("noise-ball projection") {
  std::mt19937_64 g(24);
  const Tensor3 psi = random_tensor(Dims{5, 5, 3}, g);
  ObservationMask mask(5, 5);
  for (std::size_t r = 0; r < 5; ++r) mask.set(r, (r * 2) % 5, true);
  const double r = fro_norm(project(psi, mask));

  const Tensor3 inside = noise_ball_project(psi, mask, 2.0 * r);
  CHECK(inside == psi);

  const double delta = 0.3 * r;
  const Tensor3 out = noise_ball_project(psi, mask, delta);
  CHECK(fro_norm(project(out, mask)) == doctest::Approx(delta).epsilon(1e-12));
  CHECK(project_complement(out, mask) == project_complement(psi, mask));

  // Nearest point: no random feasible point is closer.
  const double best = fro_norm(out - psi);
  for (int t = 0; t < 200; ++t) {
    Tensor3 cand = project(random_tensor(psi.dims(), g), mask);
    const double n = fro_norm(cand);
    cand *= delta * std::uniform_real_distribution<double>(0.0, 1.0)(g) / n;
    cand += project_complement(psi, mask);
    CHECK(fro_norm(cand - psi) >= best - 1e-12);
  }

  const Tensor3 zero = noise_ball_project(psi, mask, 0.0);
  CHECK(fro_norm(project(zero, mask)) == 0.0);
}

TEST_CASE("P/Q updates by prox mode") {
  std::mt19937_64 g(25);
  AdmmState s = random_state(Dims{2, 3, 3}, g);
  auto [p, q] = update_pq_classical(s, ProxMode::Identity);
  for (std::size_t j = 0; j < p.size(); ++j) {
    CHECK(p[j] == doctest::Approx(s.x[j] + s.gam[j] / s.theta));
    CHECK(q[j] == doctest::Approx(s.e[j] + s.phi[j] / s.beta));
  }
  auto [p0, q0] = update_pq_classical(s, ProxMode::None);
  CHECK(fro_norm(p0) == 0.0);
  CHECK(fro_norm(q0) == 0.0);
}

TEST_CASE("solve_admm completes a low-rank tensor") {
  std::mt19937_64 g(26);
  const Tensor3 truth = low_rank_tensor(24, 24, g);
  const ObservationMask mask = sample_mask(24, 24, 60.0, 5);
  AdmmHyperParams hp;
  hp.check_invariants = true;
  hp.lambda = 10.0;  // no sparse part in this instance
  const AdmmResult r = solve_admm(project(truth, mask), mask, hp);
  CHECK(fro_norm(r.estimate() - truth) / fro_norm(truth) < 0.05);
  CHECK(r.history.noise_ball_checks == static_cast<std::size_t>(r.iterations));
  CHECK(r.history.max_noise_ball_excess <= 1e-12);
}

TEST_CASE("solve_admm honours a positive noise-ball radius") {
  std::mt19937_64 g(27);
  const Tensor3 truth = low_rank_tensor(16, 16, g);
  const Tensor3 noisy = truth + random_tensor(truth.dims(), g, 0.01);
  const ObservationMask mask = sample_mask(16, 16, 50.0, 6);
  AdmmHyperParams hp;
  hp.delta = 0.05;
  hp.max_iters = 60;
  hp.check_invariants = true;
  const AdmmResult r = solve_admm(project(noisy, mask), mask, hp);
  CHECK(fro_norm(project(r.n, mask)) <= hp.delta + 1e-12);
}

TEST_CASE("HaLRTC keeps observed entries and stops on tolerance") {
  std::mt19937_64 g(28);
  const Tensor3 truth = low_rank_tensor(20, 20, g);
  const ObservationMask mask = sample_mask(20, 20, 40.0, 7);
  const HalrtcResult r = solve_halrtc(project(truth, mask), mask, HalrtcParams{});
  for (std::size_t row = 0; row < 20; ++row)
    for (std::size_t c = 0; c < 20; ++c)
      if (mask(row, c))
        for (std::size_t k = 0; k < 3; ++k) CHECK(r.x(row, c, k) == truth(row, c, k));
  CHECK(r.iterations >= 1);
  CHECK(fro_norm(r.x - truth) / fro_norm(truth) < 0.2);
}

TEST_CASE("smoothing uses full windows") {
  CHECK(smoothed({1, 2, 3, 4, 5, 6}, 5) == std::vector<double>{3.0, 4.0});
  CHECK(smoothed({1, 2}, 5).empty());
  CHECK(smoothed({4, 2}, 1) == std::vector<double>{4.0, 2.0});
}

TEST_CASE("hyperparameter validation") {
  AdmmHyperParams hp;
  CHECK_NOTHROW(hp.validate());
  CHECK(hp.resolved_lambda(Dims{64, 16, 3}) == doctest::Approx(0.125));
  hp.alpha = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.rho = 0.0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.delta = -1.0;
  CHECK_THROWS_AS(hp.validate(), Error);
  const Tensor3 t(Dims{4, 4, 3});
  CHECK_THROWS_AS(solve_admm(t, ObservationMask(4, 4), AdmmHyperParams{}), Error);
  CHECK_THROWS_AS(solve_admm(t, ObservationMask(5, 4, true), AdmmHyperParams{}), Error);
}
