#include "landmark/kernels.hpp"

#include <cmath>
#include <cstdlib>

#if defined(__x86_64__) || defined(_M_X64)
#define LANDMARK_X86 1
#include <immintrin.h>
#else
#define LANDMARK_X86 0
#endif

namespace landmark::kernels {

namespace {

// ---- scalar reference kernels ----

double sum_scalar(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double trapezoid_abs_diff_scalar(const double* a, const double* b, size_t n, double dx) {
  if (n < 2) return 0.0;
  double s = 0.5 * (std::fabs(a[0] - b[0]) + std::fabs(a[n - 1] - b[n - 1]));
  for (size_t i = 1; i + 1 < n; ++i) s += std::fabs(a[i] - b[i]);
  return s * dx;
}

double trapezoid_sq_diff_scalar(const double* a, const double* b, size_t n, double dx) {
  if (n < 2) return 0.0;
  double d0 = a[0] - b[0], d1 = a[n - 1] - b[n - 1];
  double s = 0.5 * (d0 * d0 + d1 * d1);
  for (size_t i = 1; i + 1 < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s * dx;
}

void axpy_scalar(double sc, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += sc * x[i];
}

constexpr Backend kScalar = {"scalar",          sum_scalar,
                             dot_scalar,        trapezoid_abs_diff_scalar,
                             trapezoid_sq_diff_scalar, axpy_scalar};

#if LANDMARK_X86

// ---- AVX2 kernels ----

__attribute__((target("avx2,fma"))) double hsum256(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

__attribute__((target("avx2,fma"))) double sum_avx2(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum256(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

__attribute__((target("avx2,fma"))) double dot_avx2(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum256(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2,fma"))) double trapezoid_abs_diff_avx2(const double* a, const double* b,
                                                                   size_t n, double dx) {
  if (n < 2) return 0.0;
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 1, last = n - 1;
  for (; i + 4 <= last; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  double s = hsum256(acc);
  for (; i < last; ++i) s += std::fabs(a[i] - b[i]);
  s += 0.5 * (std::fabs(a[0] - b[0]) + std::fabs(a[last] - b[last]));
  return s * dx;
}

__attribute__((target("avx2,fma"))) double trapezoid_sq_diff_avx2(const double* a, const double* b,
                                                                  size_t n, double dx) {
  if (n < 2) return 0.0;
  __m256d acc = _mm256_setzero_pd();
  size_t i = 1, last = n - 1;
  for (; i + 4 <= last; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum256(acc);
  for (; i < last; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  double d0 = a[0] - b[0], d1 = a[last] - b[last];
  s += 0.5 * (d0 * d0 + d1 * d1);
  return s * dx;
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double sc, const double* x, double* y,
                                                   size_t n) {
  const __m256d vs = _mm256_set1_pd(sc);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += sc * x[i];
}

constexpr Backend kAvx2 = {"avx2",          sum_avx2,
                           dot_avx2,        trapezoid_abs_diff_avx2,
                           trapezoid_sq_diff_avx2, axpy_avx2};

#endif  // LANDMARK_X86

const Backend& detect() {
  const char* env = std::getenv("LANDMARK_KERNELS");
#if LANDMARK_X86
  if (env != nullptr && std::string(env) == "scalar") return kScalar;
  if (avx2_available()) return kAvx2;
#else
  (void)env;
#endif
  return kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

bool avx2_available() {
#if LANDMARK_X86
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Backend& avx2_backend() {
#if LANDMARK_X86
  return kAvx2;
#else
  return kScalar;
#endif
}

const Backend& active() {
  static const Backend& b = detect();
  return b;
}

const std::string& active_name() {
  static const std::string name = active().name;
  return name;
}

}  // namespace landmark::kernels
