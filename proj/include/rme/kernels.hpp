#pragma once

// Data-parallel inner loops used by the SVD, the shrinkage operators, the
// solvers and the convolution layers. Every kernel has a portable scalar
// reference implementation and, where the target supports it, an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID and can be
// overridden with RME_SIMD=scalar|avx2 or set_backend().

#include <cstddef>
#include <span>
#include <string_view>

namespace rme::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, double* y, std::size_t n);
  // (x, y) <- (c*x - s*y, s*x + c*y)
  void (*rotate)(double* x, double* y, double c, double s, std::size_t n);
  // y = sign(x) * max(|x| - tau, 0)
  void (*soft_threshold)(const double* x, double* y, double tau, std::size_t n);
  // y[j] += sum_i x[i] * w[i*cols + j]   (row vector times row-major matrix)
  void (*gemv_t_acc)(const double* x, const double* w, double* y, std::size_t rows,
                     std::size_t cols);
  // x[i] += sum_j w[i*cols + j] * g[j]
  void (*gemv_acc)(const double* w, const double* g, double* x, std::size_t rows,
                   std::size_t cols);
  // w[i*cols + j] += x[i] * g[j]
  void (*ger_acc)(const double* x, const double* g, double* w, std::size_t rows,
                  std::size_t cols);
};

const KernelTable& scalar_table() noexcept;
// Returns nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table() noexcept;

bool cpu_has_avx2() noexcept;

const KernelTable& active() noexcept;
Backend active_backend() noexcept;
// Falls back to Scalar (and returns false) if the requested backend is
// unavailable on this machine.
bool set_backend(Backend b) noexcept;
std::string_view backend_name(Backend b) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_sq(std::span<const double> a) { return active().sum_sq(a.data(), a.size()); }
inline double sum_abs(std::span<const double> a) { return active().sum_abs(a.data(), a.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void axpby(double alpha, std::span<const double> x, double beta, std::span<double> y) {
  active().axpby(alpha, x.data(), beta, y.data(), x.size());
}

} // namespace rme::kernels
