#include "rme/kernels.hpp"

#include <cmath>

namespace rme::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

double sum_abs_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_scalar(double alpha, const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void rotate_scalar(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void soft_threshold_scalar(const double* x, double* y, double tau, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::fabs(x[i]) - tau;
    y[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
  }
}

void gemv_t_acc_scalar(const double* x, const double* w, double* y, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = x[i];
    const double* wr = w + i * cols;
    for (std::size_t j = 0; j < cols; ++j) y[j] += xi * wr[j];
  }
}

void gemv_acc_scalar(const double* w, const double* g, double* x, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += wr[j] * g[j];
    x[i] += s;
  }
}

void ger_acc_scalar(const double* x, const double* g, double* w, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = x[i];
    double* wr = w + i * cols;
    for (std::size_t j = 0; j < cols; ++j) wr[j] += xi * g[j];
  }
}

} // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      dot_scalar,     sum_sq_scalar,         sum_abs_scalar,    axpy_scalar,
      axpby_scalar,   rotate_scalar,         soft_threshold_scalar,
      gemv_t_acc_scalar, gemv_acc_scalar,    ger_acc_scalar,
  };
  return table;
}

} // namespace rme::kernels
