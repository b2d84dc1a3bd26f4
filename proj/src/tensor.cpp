#include "rme/tensor.hpp"

#include "rme/error.hpp"
#include "rme/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rme {

const char* category_name(ErrorCategory c) noexcept {
  switch (c) {
  case ErrorCategory::InvalidArgument: return "invalid-argument";
  case ErrorCategory::Format: return "format-error";
  case ErrorCategory::NumericalFailure: return "numerical-failure";
  case ErrorCategory::Config: return "config-error";
  }
  return "unknown";
}

std::size_t Dims::extent(int mode) const {
  switch (mode) {
  case 1: return h;
  case 2: return w;
  case 3: return k;
  default: throw_invalid("mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

namespace {

void check_dims(const Dims& d) {
  if (d.h == 0 || d.w == 0 || d.k == 0)
    throw_invalid("tensor dimensions must be positive");
}

std::string dims_str(const Dims& d) {
  return std::to_string(d.h) + "x" + std::to_string(d.w) + "x" + std::to_string(d.k);
}

} // namespace

Tensor3::Tensor3(Dims dims, double fill) : dims_(dims) {
  check_dims(dims_);
  data_.assign(dims_.size(), fill);
}

Tensor3::Tensor3(Dims dims, std::vector<double> values) : dims_(dims), data_(std::move(values)) {
  check_dims(dims_);
  if (data_.size() != dims_.size())
    throw_invalid("tensor payload has " + std::to_string(data_.size()) + " values, expected " +
                  std::to_string(dims_.size()));
}

double Tensor3::item() const {
  if (data_.size() != 1) throw_invalid("item() requires a 1x1x1 tensor");
  return data_[0];
}

bool Tensor3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor3::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  check_same_dims(*this, o, "tensor +=");
  kernels::axpy(1.0, o.span(), span());
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  check_same_dims(*this, o, "tensor -=");
  kernels::axpy(-1.0, o.span(), span());
  return *this;
}

Tensor3& Tensor3::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

ObservationMask::ObservationMask(std::size_t h, std::size_t w, bool value)
    : h_(h), w_(w), cells_(h * w, value ? 1 : 0) {}

ObservationMask::ObservationMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> cells)
    : h_(h), w_(w), cells_(std::move(cells)) {
  if (cells_.size() != h * w) throw_invalid("mask payload size does not match h*w");
  for (auto& c : cells_) {
    if (c > 1) throw_invalid("mask cells must be 0 or 1");
  }
}

std::size_t ObservationMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

ObservationMask ObservationMask::complement() const {
  ObservationMask out = *this;
  for (auto& c : out.cells_) c = c ? 0 : 1;
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::fro_norm() const { return std::sqrt(kernels::sum_sq(data)); }

namespace {

// Strides of the unfolding column index for the two modes other than `mode`.
struct UnfoldMap {
  std::size_t rows;
  std::size_t cols;
  std::size_t stride[3];  // column stride contributed by i1, i2, i3 (0 for the row mode)
};

UnfoldMap unfold_map(const Dims& d, int mode) {
  const std::size_t n[3] = {d.h, d.w, d.k};
  if (mode < 1 || mode > 3) throw_invalid("mode must be 1, 2 or 3, got " + std::to_string(mode));
  UnfoldMap m{};
  m.rows = n[mode - 1];
  std::size_t j = 1;
  for (int k = 0; k < 3; ++k) {
    if (k == mode - 1) {
      m.stride[k] = 0;
      continue;
    }
    m.stride[k] = j;
    j *= n[k];
  }
  m.cols = j;
  return m;
}

} // namespace

UnfoldedMatrix unfold(const Tensor3& t, int mode) {
  const Dims& d = t.dims();
  const UnfoldMap map = unfold_map(d, mode);
  UnfoldedMatrix out{mode, Matrix(map.rows, map.cols)};
  for (std::size_t i1 = 0; i1 < d.h; ++i1)
    for (std::size_t i2 = 0; i2 < d.w; ++i2)
      for (std::size_t i3 = 0; i3 < d.k; ++i3) {
        const std::size_t idx[3] = {i1, i2, i3};
        const std::size_t col = i1 * map.stride[0] + i2 * map.stride[1] + i3 * map.stride[2];
        out.mat(idx[mode - 1], col) = t(i1, i2, i3);
      }
  return out;
}

Tensor3 fold(const Matrix& m, int mode, const Dims& dims) {
  const UnfoldMap map = unfold_map(dims, mode);
  if (m.rows != map.rows || m.cols != map.cols)
    throw_invalid("fold: matrix " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                  " does not match mode-" + std::to_string(mode) + " unfolding of " +
                  dims_str(dims));
  Tensor3 t(dims);
  for (std::size_t i1 = 0; i1 < dims.h; ++i1)
    for (std::size_t i2 = 0; i2 < dims.w; ++i2)
      for (std::size_t i3 = 0; i3 < dims.k; ++i3) {
        const std::size_t idx[3] = {i1, i2, i3};
        const std::size_t col = i1 * map.stride[0] + i2 * map.stride[1] + i3 * map.stride[2];
        t(i1, i2, i3) = m(idx[mode - 1], col);
      }
  return t;
}

Tensor3 fold(const UnfoldedMatrix& m, const Dims& dims) { return fold(m.mat, m.mode, dims); }

void check_same_dims(const Tensor3& a, const Tensor3& b, const char* what) {
  if (a.dims() != b.dims())
    throw_invalid(std::string(what) + ": dimension mismatch " + dims_str(a.dims()) + " vs " +
                  dims_str(b.dims()));
}

void check_mask_dims(const Tensor3& t, const ObservationMask& m, const char* what) {
  if (t.h() != m.h() || t.w() != m.w())
    throw_invalid(std::string(what) + ": mask " + std::to_string(m.h()) + "x" +
                  std::to_string(m.w()) + " does not match tensor " + dims_str(t.dims()));
}

Tensor3 project(const Tensor3& t, const ObservationMask& mask) {
  check_mask_dims(t, mask, "project");
  Tensor3 out(t.dims());
  const std::size_t k = t.k();
  for (std::size_t r = 0; r < t.h(); ++r)
    for (std::size_t c = 0; c < t.w(); ++c) {
      if (!mask(r, c)) continue;
      const std::size_t base = t.index(r, c, 0);
      std::copy_n(t.data() + base, k, out.data() + base);
    }
  return out;
}

Tensor3 project_complement(const Tensor3& t, const ObservationMask& mask) {
  check_mask_dims(t, mask, "project_complement");
  return project(t, mask.complement());
}

double inner(const Tensor3& a, const Tensor3& b) {
  check_same_dims(a, b, "inner");
  return kernels::dot(a.span(), b.span());
}

double fro_norm(const Tensor3& t) { return std::sqrt(kernels::sum_sq(t.span())); }

double l1_norm(const Tensor3& t) { return kernels::sum_abs(t.span()); }

} // namespace rme
