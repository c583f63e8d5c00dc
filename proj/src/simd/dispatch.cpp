#include <atomic>
#include <cstdlib>
#include <string>

#include "gamo/error.hpp"
#include "gamo/simd/kernels.hpp"

namespace gamo::simd {
namespace {

Backend detect_backend() {
  if (const char* env = std::getenv("GAMO_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::kScalar;
  }
  return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<int>& backend_slot() {
  static std::atomic<int> slot{static_cast<int>(detect_backend())};
  return slot;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("simd kernel: span length mismatch");
}

}  // namespace

bool avx2_available() {
#if defined(GAMO_BUILD_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend active_backend() { return static_cast<Backend>(backend_slot().load()); }

const KernelTable& kernels() {
#if defined(GAMO_BUILD_AVX2)
  if (active_backend() == Backend::kAvx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

std::string_view backend_name(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2_available()) {
    throw InvalidArgument("AVX2 backend requested but not available on this CPU/build");
  }
  backend_slot().store(static_cast<int>(b));
}

void scaled_sum(double a, std::span<const double> x, double b, std::span<const double> y,
                std::span<double> out) {
  check_sizes(x.size(), y.size());
  check_sizes(x.size(), out.size());
  kernels().scaled_sum(a, x.data(), b, y.data(), out.data(), out.size());
}

void sub_scaled_div(std::span<const double> z, double c, std::span<const double> e, double d,
                    std::span<double> out) {
  check_sizes(z.size(), e.size());
  check_sizes(z.size(), out.size());
  kernels().sub_scaled_div(z.data(), c, e.data(), d, out.data(), out.size());
}

void masked_blend(std::span<const double> m, std::span<const double> coarse,
                  std::span<const double> x, std::span<double> out) {
  check_sizes(m.size(), coarse.size());
  check_sizes(m.size(), x.size());
  check_sizes(m.size(), out.size());
  kernels().masked_blend(m.data(), coarse.data(), x.data(), out.data(), out.size());
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return kernels().sum_abs_diff(a.data(), b.data(), a.size());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return kernels().sum_sq_diff(a.data(), b.data(), a.size());
}

}  // namespace gamo::simd
