// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.
#include "rme/kernels.hpp"

#if defined(RME_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace rme::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

double sum_abs_avx2(const double* a, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(a + i), mask));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_avx2(double alpha, const double* x, double beta, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), by));
  }
  for (; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void rotate_avx2(double* x, double* y, double c, double s, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(x + i);
    const __m256d yi = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(x + i, _mm256_fmsub_pd(vc, xi, _mm256_mul_pd(vs, yi)));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vs, xi, _mm256_mul_pd(vc, yi)));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void soft_threshold_avx2(const double* x, double* y, double tau, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(sign, v), vt), zero);
    _mm256_storeu_pd(y + i, _mm256_or_pd(mag, _mm256_and_pd(sign, v)));
  }
  for (; i < n; ++i) {
    const double m = std::fabs(x[i]) - tau;
    y[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
  }
}

void gemv_t_acc_avx2(const double* x, const double* w, double* y, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(x[i], w + i * cols, y, cols);
}

void gemv_acc_avx2(const double* w, const double* g, double* x, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) x[i] += dot_avx2(w + i * cols, g, cols);
}

void ger_acc_avx2(const double* x, const double* g, double* w, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) axpy_avx2(x[i], g, w + i * cols, cols);
}

} // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable table{
      dot_avx2,   sum_sq_avx2, sum_abs_avx2,        axpy_avx2,       axpby_avx2,
      rotate_avx2, soft_threshold_avx2, gemv_t_acc_avx2, gemv_acc_avx2, ger_acc_avx2,
  };
  return &table;
}

} // namespace rme::kernels

#else

namespace rme::kernels {
const KernelTable* avx2_table() noexcept { return nullptr; }
} // namespace rme::kernels

#endif
