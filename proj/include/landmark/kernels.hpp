#pragma once

#include <cstddef>
#include <string>

namespace landmark::kernels {

// Dense numeric inner loops used by the metric and prediction code paths.
// Each kernel has a scalar reference implementation and an AVX2 variant;
// the active backend is selected once at startup (override with the
// LANDMARK_KERNELS environment variable: "scalar" or "avx2").

struct Backend {
  const char* name;
  double (*sum)(const double* x, size_t n);
  double (*dot)(const double* x, const double* y, size_t n);
  // trapezoid integral of |a-b| resp. (a-b)^2 on a uniform grid with step dx
  double (*trapezoid_abs_diff)(const double* a, const double* b, size_t n, double dx);
  double (*trapezoid_sq_diff)(const double* a, const double* b, size_t n, double dx);
  // y[i] += s * x[i]
  void (*axpy)(double s, const double* x, double* y, size_t n);
};

const Backend& scalar_backend();
const Backend& avx2_backend();  // valid only if avx2_available()
bool avx2_available();

// Active backend (detected once; honours LANDMARK_KERNELS).
const Backend& active();
const std::string& active_name();

inline double sum(const double* x, size_t n) { return active().sum(x, n); }
inline double dot(const double* x, const double* y, size_t n) { return active().dot(x, y, n); }
inline double trapezoid_abs_diff(const double* a, const double* b, size_t n, double dx) {
  return active().trapezoid_abs_diff(a, b, n, dx);
}
inline double trapezoid_sq_diff(const double* a, const double* b, size_t n, double dx) {
  return active().trapezoid_sq_diff(a, b, n, dx);
}
inline void axpy(double s, const double* x, double* y, size_t n) { active().axpy(s, x, y, n); }

}  // namespace landmark::kernels
