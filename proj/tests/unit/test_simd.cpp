#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "gamo/error.hpp"
#include "gamo/simd/kernels.hpp"

using namespace gamo;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar kernels compute their definitions") {
  const auto& k = simd::scalar_kernels();
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6}, m{0, 0.5, 1};
  std::vector<double> out(3);
  k.scaled_sum(2, x.data(), -1, y.data(), out.data(), 3);
  CHECK(out == std::vector<double>{-2, -1, 0});
  k.sub_scaled_div(y.data(), 2, x.data(), 4, out.data(), 3);
  CHECK(out == std::vector<double>{0.5, 0.25, 0});
  k.masked_blend(m.data(), x.data(), y.data(), out.data(), 3);
  CHECK(out == std::vector<double>{1, 3.5, 6});
  CHECK(k.sum_abs_diff(x.data(), y.data(), 3) == 9);
  CHECK(k.sum_sq_diff(x.data(), y.data(), 3) == 27);
}

#if defined(GAMO_BUILD_AVX2)
TEST_CASE("AVX2 kernels are bit-identical elementwise and agree on reductions") {
  if (!simd::avx2_available()) {
    MESSAGE("AVX2 not available on this CPU; skipped");
    return;
  }
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 1001u}) {
    CAPTURE(n);
    const auto x = random_vec(n, 1), y = random_vec(n, 2);
    auto m = random_vec(n, 3);
    for (double& w : m) w = std::abs(w) / 2;
    std::vector<double> a(n), b(n);
    s.scaled_sum(0.3, x.data(), -1.7, y.data(), a.data(), n);
    v.scaled_sum(0.3, x.data(), -1.7, y.data(), b.data(), n);
    CHECK(bit_equal(a, b));
    s.sub_scaled_div(x.data(), 0.6, y.data(), 0.8, a.data(), n);
    v.sub_scaled_div(x.data(), 0.6, y.data(), 0.8, b.data(), n);
    CHECK(bit_equal(a, b));
    s.masked_blend(m.data(), x.data(), y.data(), a.data(), n);
    v.masked_blend(m.data(), x.data(), y.data(), b.data(), n);
    CHECK(bit_equal(a, b));
    const double sa = s.sum_abs_diff(x.data(), y.data(), n), va = v.sum_abs_diff(x.data(), y.data(), n);
    const double sq = s.sum_sq_diff(x.data(), y.data(), n), vq = v.sum_sq_diff(x.data(), y.data(), n);
    CHECK(va == doctest::Approx(sa).epsilon(1e-13));
    CHECK(vq == doctest::Approx(sq).epsilon(1e-13));
  }
}
#endif

TEST_CASE("backend can be pinned") {
  const simd::Backend before = simd::active_backend();
  simd::force_backend(simd::Backend::kScalar);
  CHECK(simd::active_backend() == simd::Backend::kScalar);
  CHECK(simd::backend_name(simd::Backend::kScalar) == "scalar");
  const std::vector<double> x{1, 2}, y{3, 5};
  CHECK(simd::sum_sq_diff(x, y) == 13);
  if (simd::avx2_available()) {
    simd::force_backend(simd::Backend::kAvx2);
    CHECK(simd::active_backend() == simd::Backend::kAvx2);
    CHECK(simd::backend_name(simd::Backend::kAvx2) == "avx2");
  } else {
    CHECK_THROWS_AS(simd::force_backend(simd::Backend::kAvx2), InvalidArgument);
  }
  simd::force_backend(before);
}

}
