#include "gamo/simd/kernels.hpp"

namespace gamo::simd {
namespace {

void scaled_sum_scalar(double a, const double* x, double b, const double* y, double* out,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void sub_scaled_div_scalar(const double* z, double c, const double* e, double d, double* out,
                           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (z[i] - c * e[i]) / d;
}

void masked_blend_scalar(const double* m, const double* coarse, const double* x, double* out,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - m[i]) * coarse[i] + m[i] * x[i];
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{scaled_sum_scalar, sub_scaled_div_scalar, masked_blend_scalar,
                                 sum_abs_diff_scalar, sum_sq_diff_scalar};
  return table;
}

}  // namespace gamo::simd
