#include "rme/error.hpp"
#include "rme/tensor.hpp"

#include <doctest.h>

#include <random>

using namespace rme;

namespace {

Tensor3 random_tensor(Dims d, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor3 t(d);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(g);
  return t;
}

// Column of (i1, i2, i3) in the mode-m unfolding, computed straight from the
// index map: col = sum_{k != m} i_k * J_k, J_k = prod_{l < k, l != m} n_l.
std::size_t oracle_col(const std::size_t idx[3], const std::size_t n[3], int mode) {
  std::size_t col = 0;
  for (int k = 0; k < 3; ++k) {
    if (k == mode - 1) continue;
    std::size_t j = 1;
    for (int l = 0; l < k; ++l)
      if (l != mode - 1) j *= n[l];
    col += idx[k] * j;
  }
  return col;
}

} // namespace

TEST_CASE("unfolding of the 2x2x2 counting tensor") {
  // t(i1, i2, i3) = 4*i1 + 2*i2 + i3 (0-based), so the value is the
  // row-major position.
  Tensor3 t(Dims{2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) t[i] = double(i);
  const Matrix m1 = unfold(t, 1).mat;
  CHECK(m1.rows == 2);
  CHECK(m1.cols == 4);
  CHECK(m1.data == std::vector<double>{0, 2, 1, 3, 4, 6, 5, 7});
  const Matrix m2 = unfold(t, 2).mat;
  CHECK(m2.data == std::vector<double>{0, 4, 1, 5, 2, 6, 3, 7});
  const Matrix m3 = unfold(t, 3).mat;
  CHECK(m3.data == std::vector<double>{0, 4, 2, 6, 1, 5, 3, 7});
}

TEST_CASE("unfold follows the index map on random shapes") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n[3] = {1 + g() % 6, 1 + g() % 6, 1 + g() % 4};
    const Tensor3 t = random_tensor(Dims{n[0], n[1], n[2]}, g);
    for (int mode = 1; mode <= 3; ++mode) {
      const Matrix m = unfold(t, mode).mat;
      REQUIRE(m.rows == n[mode - 1]);
      REQUIRE(m.cols == t.size() / n[mode - 1]);
      for (std::size_t a = 0; a < n[0]; ++a)
        for (std::size_t b = 0; b < n[1]; ++b)
          for (std::size_t c = 0; c < n[2]; ++c) {
            const std::size_t idx[3] = {a, b, c};
            CHECK(m(idx[mode - 1], oracle_col(idx, n, mode)) == t(a, b, c));
          }
    }
  }
}

TEST_CASE("fold inverts unfold exactly") {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d{1 + g() % 16, 1 + g() % 16, 1 + g() % 4};
    const Tensor3 t = random_tensor(d, g);
    for (int mode = 1; mode <= 3; ++mode) CHECK(fold(unfold(t, mode), d) == t);
  }
}

TEST_CASE("fold rejects mismatched shapes") {
  Tensor3 t(Dims{2, 3, 4});
  CHECK_THROWS_AS(fold(unfold(t, 1).mat, 1, Dims{3, 2, 4}), Error);
  CHECK_THROWS_AS(unfold(t, 4), Error);
}

TEST_CASE("projection splits a tensor across the mask") {
  std::mt19937_64 g(9);
  const Tensor3 t = random_tensor(Dims{5, 4, 3}, g);
  ObservationMask m(5, 4);
  m.set(0, 0, true);
  m.set(3, 2, true);
  CHECK(m.count() == 2);
  const Tensor3 p = project(t, m);
  CHECK(p + project_complement(t, m) == t);
  CHECK(p(3, 2, 1) == t(3, 2, 1));
  CHECK(p(1, 1, 0) == 0.0);
  CHECK(m.complement().count() == 18);
}

TEST_CASE("mask and tensor validation") {
  CHECK_THROWS_AS(ObservationMask(2, 2, std::vector<std::uint8_t>{0, 1, 2, 0}), Error);
  CHECK_THROWS_AS(ObservationMask(2, 2, std::vector<std::uint8_t>{0, 1, 1}), Error);
  CHECK_THROWS_AS(Tensor3(Dims{2, 2, 1}, std::vector<double>{1.0}), Error);
  Tensor3 a(Dims{2, 2, 1}), b(Dims{2, 1, 2});
  CHECK_THROWS_AS(a += b, Error);
  CHECK_THROWS_AS(project(a, ObservationMask(3, 2)), Error);
}

TEST_CASE("norms and inner products") {
  Tensor3 t(Dims{1, 2, 2}, std::vector<double>{3.0, -4.0, 0.0, 0.0});
  CHECK(fro_norm(t) == doctest::Approx(5.0));
  CHECK(l1_norm(t) == doctest::Approx(7.0));
  CHECK(inner(t, t) == doctest::Approx(25.0));
  CHECK(Tensor3::scalar(2.5).item() == 2.5);
}
