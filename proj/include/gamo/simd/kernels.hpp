#pragma once

// Elementwise and reduction kernels behind the latent arithmetic. Each kernel
// has a scalar reference implementation and, on x86-64, an AVX2 variant chosen
// at runtime. The elementwise kernels are bit-identical across backends (no
// FMA, same operation order per element); reductions agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace gamo::simd {

enum class Backend { kScalar, kAvx2 };

// Kernel table. All spans passed to one call have equal length.
struct KernelTable {
  // out[i] = a * x[i] + b * y[i]
  void (*scaled_sum)(double a, const double* x, double b, const double* y, double* out,
                     std::size_t n);
  // out[i] = (z[i] - c * e[i]) / d
  void (*sub_scaled_div)(const double* z, double c, const double* e, double d, double* out,
                         std::size_t n);
  // out[i] = (1 - m[i]) * coarse[i] + m[i] * x[i]
  void (*masked_blend)(const double* m, const double* coarse, const double* x, double* out,
                       std::size_t n);
  // sum |a[i] - b[i]|
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
  // sum (a[i] - b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(GAMO_BUILD_AVX2)
const KernelTable& avx2_kernels();
#endif

// True when the AVX2 variant was compiled in and the CPU supports it.
bool avx2_available();

// The table used by the library. Picks AVX2 when available unless the
// GAMO_SIMD environment variable is set to "scalar".
const KernelTable& kernels();
Backend active_backend();
std::string_view backend_name(Backend b);

// Pins the backend for the rest of the process. Requesting kAvx2 on a machine
// without it throws gamo::InvalidArgument.
void force_backend(Backend b);

// Span conveniences over the active table.
void scaled_sum(double a, std::span<const double> x, double b, std::span<const double> y,
                std::span<double> out);
void sub_scaled_div(std::span<const double> z, double c, std::span<const double> e, double d,
                    std::span<double> out);
void masked_blend(std::span<const double> m, std::span<const double> coarse,
                  std::span<const double> x, std::span<double> out);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);

}  // namespace gamo::simd
