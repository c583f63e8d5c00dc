#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gamo/diffusion.hpp"
#include "gamo/error.hpp"
#include "helpers.hpp"

using namespace gamo;

namespace {

DenoiserContext context(int w, int h, int view = 0) {
  DenoiserContext ctx;
  ctx.view_index = view;
  ctx.target_rays = RayGrid(w, h);
  ctx.ccm_aug = GeoGrid(w, h);
  ctx.rgb_aug = GeoGrid(w, h);
  return ctx;
}

double max_abs(const Image& a, const Image& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_SUITE("diffusion") {

TEST_CASE("cosine schedule follows the closed form") {
  const NoiseSchedule s = make_schedule(50);
  CHECK(s.steps() == 50);
  CHECK(s.alpha_bar(0) == 1.0);
  auto f = [](double t) {
    const double c = std::cos((t / 50 + 0.008) / 1.008 * std::numbers::pi / 2);
    return c * c;
  };
  for (int t = 1; t < 50; ++t) CHECK(s.alpha_bar(t) == doctest::Approx(f(t) / f(0)).epsilon(1e-10));
  CHECK(s.alpha_bar(50) > 0.0);
  for (int t = 1; t <= 50; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  CHECK_THROWS_AS(s.alpha_bar(51), InvalidArgument);
  CHECK_THROWS_AS(make_schedule(0), InvalidArgument);
}

TEST_CASE("predict_x0 inverts add_noise") {
  const NoiseSchedule s = make_schedule(50);
  const Image x = testing::random_image(9, 7, 3, 1);
  Rng rng(2);
  const Image eps = rng.normal_like(x);
  for (int t : {1, 10, 25, 49, 50}) CHECK(max_abs(predict_x0(s, add_noise(s, x, t, eps), eps, t), x) < 1e-9);
  CHECK(predict_x0(s, x, eps, 0) == x);
  // the oracle noise is the noise that was added
  CHECK(max_abs(oracle_denoise(s, x, add_noise(s, x, 30, eps), 30), eps) < 1e-9);
  CHECK_THROWS_AS(oracle_denoise(s, x, x, 0), InvalidArgument);
}

TEST_CASE("DDIM with the oracle lands on the target") {
  const NoiseSchedule s = make_schedule(50);
  const Image target = testing::random_image(10, 8, 3, 3);
  const OracleDenoiser oracle(s, {target});
  const DenoiserContext ctx = context(10, 8);
  Rng rng(4);
  Image z = rng.normal_like(target);
  for (int t = 50; t >= 1; --t) z = ddim_step(s, z, oracle.predict_noise(z, ctx, t), t, t - 1);
  CHECK(max_abs(z, target) < 1e-5);
  CHECK_THROWS_AS(ddim_step(s, z, z, 3, 3), InvalidArgument);
}

TEST_CASE("two DDIM steps with the oracle equal one long step") {
  const NoiseSchedule s = make_schedule(50);
  const Image target = testing::random_image(6, 6, 3, 5);
  const OracleDenoiser oracle(s, {target});
  const DenoiserContext ctx = context(6, 6);
  Rng rng(6);
  const Image z = add_noise(s, target, 40, rng.normal_like(target));
  const Image one = ddim_step(s, z, oracle.predict_noise(z, ctx, 40), 40, 20);
  const Image mid = ddim_step(s, z, oracle.predict_noise(z, ctx, 40), 40, 30);
  const Image two = ddim_step(s, mid, oracle.predict_noise(mid, ctx, 30), 30, 20);
  CHECK(max_abs(one, two) < 1e-9);
}

TEST_CASE("forward noising has the scheduled mean and variance") {
  const NoiseSchedule s = make_schedule(50);
  const int t = 20;
  const Image x(100, 100, 3, 0.7);
  Rng rng(7);
  const Image z = add_noise(s, x, t, rng.normal_like(x));
  double mean = 0, sq = 0;
  for (double v : z.values()) mean += v;
  mean /= z.size();
  for (double v : z.values()) sq += (v - mean) * (v - mean);
  const double var = sq / (z.size() - 1);
  const double ab = s.alpha_bar(t);
  // 30000 samples: standard error of the mean ~ 0.006 sqrt(1 - ab)
  CHECK(std::abs(mean - std::sqrt(ab) * 0.7) < 0.03 * std::sqrt(1 - ab));
  CHECK(std::abs(var / (1 - ab) - 1) < 0.03);
}

TEST_CASE("noisy oracle: rho zero is the oracle, fixed inputs repeat, error scales with rho") {
  const NoiseSchedule s = make_schedule(50);
  const Image target = testing::random_image(40, 40, 3, 8);
  const DenoiserContext ctx = context(40, 40);
  Rng rng(9);
  const Image z = add_noise(s, target, 25, rng.normal_like(target));
  const OracleDenoiser exact(s, {target});
  const Image eps = exact.predict_noise(z, ctx, 25);
  CHECK(NoisyOracleDenoiser(s, {target}, 0.0, 1).predict_noise(z, ctx, 25) == eps);
  const NoisyOracleDenoiser noisy(s, {target}, 0.3, 1);
  const Image a = noisy.predict_noise(z, ctx, 25);
  CHECK(noisy.predict_noise(z, ctx, 25) == a);
  CHECK_FALSE(noisy.predict_noise(z, ctx, 24) == a);
  CHECK_FALSE(NoisyOracleDenoiser(s, {target}, 0.3, 2).predict_noise(z, ctx, 25) == a);
  for (double rho : {0.1, 0.5, 1.0}) {
    const Image e = NoisyOracleDenoiser(s, {target}, rho, 3).predict_noise(z, ctx, 25);
    double sq = 0;
    for (std::size_t i = 0; i < e.size(); ++i) sq += std::pow(e.values()[i] - eps.values()[i], 2);
    CHECK(std::sqrt(sq / e.size()) == doctest::Approx(rho).epsilon(0.05));
  }
  CHECK_THROWS_AS(NoisyOracleDenoiser(s, {target}, -0.1, 0), InvalidArgument);
  DenoiserContext other = ctx;
  other.view_index = 1;
  CHECK_THROWS_AS(exact.predict_noise(z, other, 25), InvalidArgument);
}

TEST_CASE("smooth prior keeps valid pixels and stays inside the hull of the payload") {
  GeoGrid cond(20, 16);
  for (int v = 5; v < 11; ++v)
    for (int u = 6; u < 14; ++u) cond.set(u, v, Vec3(0.2 + 0.05 * (u - 6), 0.9 - 0.1 * (v - 5), 0.5));
  const Image out = SmoothPriorDenoiser::predict_clean(cond);
  double lo[3] = {1, 1, 1}, hi[3] = {0, 0, 0};
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 20; ++u)
      if (cond.valid(u, v))
        for (int c = 0; c < 3; ++c) {
          lo[c] = std::min(lo[c], cond.value(u, v)[c]);
          hi[c] = std::max(hi[c], cond.value(u, v)[c]);
        }
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 20; ++u)
      for (int c = 0; c < 3; ++c) {
        if (cond.valid(u, v)) CHECK(out.at(u, v, c) == cond.value(u, v)[c]);
        CHECK(out.at(u, v, c) >= lo[c] - 1e-12);
        CHECK(out.at(u, v, c) <= hi[c] + 1e-12);
      }
  CHECK(SmoothPriorDenoiser::predict_clean(GeoGrid(4, 4)) == Image(4, 4, 3));
}

TEST_CASE("smooth prior sampling converges to its clean prediction") {
  const NoiseSchedule s = make_schedule(20);
  DenoiserContext ctx = context(12, 10);
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 10; ++v) ctx.rgb_aug.set(u, v, Vec3(0.1 * u, 0.5, 0.2));
  const SmoothPriorDenoiser prior(s);
  Rng rng(1);
  Image z = rng.normal_like(Image(12, 10, 3));
  for (int t = 20; t >= 1; --t) z = ddim_step(s, z, prior.predict_noise(z, ctx, t), t, t - 1);
  CHECK(max_abs(z, SmoothPriorDenoiser::predict_clean(ctx.rgb_aug)) < 1e-6);
  DenoiserContext wrong = context(8, 8);
  CHECK_THROWS_AS(prior.predict_noise(z, wrong, 5), ShapeError);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  const Image x = a.normal_like(Image(4, 4, 3));
  CHECK(b.normal_like(Image(4, 4, 3)) == x);
}

}
