// Compiled with -mavx2 only; reached through the dispatcher after a CPU check.
#include <immintrin.h>

#include "gamo/simd/kernels.hpp"

namespace gamo::simd {
namespace {

constexpr std::size_t kLanes = 4;

void scaled_sum_avx2(double a, const double* x, double b, const double* y, double* out,
                     std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(ax, by));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void sub_scaled_div_avx2(const double* z, double c, const double* e, double d, double* out,
                         std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vd = _mm256_set1_pd(d);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ce = _mm256_mul_pd(vc, _mm256_loadu_pd(e + i));
    const __m256d num = _mm256_sub_pd(_mm256_loadu_pd(z + i), ce);
    _mm256_storeu_pd(out + i, _mm256_div_pd(num, vd));
  }
  for (; i < n; ++i) out[i] = (z[i] - c * e[i]) / d;
}

void masked_blend_avx2(const double* m, const double* coarse, const double* x, double* out,
                       std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vm = _mm256_loadu_pd(m + i);
    const __m256d keep = _mm256_mul_pd(_mm256_sub_pd(one, vm), _mm256_loadu_pd(coarse + i));
    const __m256d gen = _mm256_mul_pd(vm, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(keep, gen));
  }
  for (; i < n; ++i) out[i] = (1.0 - m[i]) * coarse[i] + m[i] * x[i];
}

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  double s = horizontal_sum(acc);
  for (; i < n; ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return s;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = horizontal_sum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{scaled_sum_avx2, sub_scaled_div_avx2, masked_blend_avx2,
                                 sum_abs_diff_avx2, sum_sq_diff_avx2};
  return table;
}

}  // namespace gamo::simd
