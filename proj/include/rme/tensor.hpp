#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rme {

struct Dims {
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t k = 1;

  std::size_t size() const noexcept { return h * w * k; }
  std::size_t extent(int mode) const;  // mode in {1,2,3}
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense third-order tensor, row-major with index order (row, col, band) and
/// the band index varying fastest. Every iterate, multiplier and map in the
/// solvers is one of these; the autodiff engine also uses it for scalars
/// (1x1x1) and convolution weights.
class Tensor3 {
public:
  Tensor3() : Tensor3(Dims{1, 1, 1}) {}
  explicit Tensor3(Dims dims, double fill = 0.0);
  Tensor3(Dims dims, std::vector<double> values);

  static Tensor3 scalar(double v) { return Tensor3(Dims{1, 1, 1}, v); }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t h() const noexcept { return dims_.h; }
  std::size_t w() const noexcept { return dims_.w; }
  std::size_t k() const noexcept { return dims_.k; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(std::size_t r, std::size_t c, std::size_t b) const noexcept {
    return (r * dims_.w + c) * dims_.k + b;
  }
  double& operator()(std::size_t r, std::size_t c, std::size_t b) noexcept {
    return data_[index(r, c, b)];
  }
  double operator()(std::size_t r, std::size_t c, std::size_t b) const noexcept {
    return data_[index(r, c, b)];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double item() const;  // value of a 1x1x1 tensor
  bool all_finite() const noexcept;
  void fill(double v) noexcept;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double s) noexcept;

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }
  friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
  Dims dims_;
  std::vector<double> data_;
};

using RadioTensor = Tensor3;

/// Spatial sampling set. A sampled cell observes every band.
class ObservationMask {
public:
  ObservationMask() = default;
  ObservationMask(std::size_t h, std::size_t w, bool value = false);
  ObservationMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> cells);

  static ObservationMask full(std::size_t h, std::size_t w) { return {h, w, true}; }

  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  bool operator()(std::size_t r, std::size_t c) const noexcept { return cells_[r * w_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) noexcept { cells_[r * w_ + c] = v ? 1 : 0; }
  std::size_t count() const noexcept;
  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  ObservationMask complement() const;
  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) noexcept { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data.data() + i * cols, cols};
  }

  Matrix transposed() const;
  double fro_norm() const;
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct UnfoldedMatrix {
  int mode = 1;
  Matrix mat;
};

// Mode-m unfolding. Column index of element (i1,i2,i3) is
// sum_{k != m} i_k * J_k with J_k = prod_{l<k, l != m} n_l (0-based), so the
// lowest remaining mode varies fastest along a row.
UnfoldedMatrix unfold(const Tensor3& t, int mode);
Tensor3 fold(const UnfoldedMatrix& m, const Dims& dims);
Tensor3 fold(const Matrix& m, int mode, const Dims& dims);

// P_Omega: keeps sampled cells (all bands), zeroes the rest.
Tensor3 project(const Tensor3& t, const ObservationMask& mask);
Tensor3 project_complement(const Tensor3& t, const ObservationMask& mask);

double inner(const Tensor3& a, const Tensor3& b);
double fro_norm(const Tensor3& t);
double l1_norm(const Tensor3& t);

void check_same_dims(const Tensor3& a, const Tensor3& b, const char* what);
void check_mask_dims(const Tensor3& t, const ObservationMask& m, const char* what);

} // namespace rme
