#include "gamo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <numbers>

#include "gamo/error.hpp"
#include "gamo/simd/kernels.hpp"

namespace gamo {

void Rng::fill_normal(Image& img) {
  for (double& v : img.values()) v = normal();
}

Image Rng::normal_like(const Image& shape) {
  Image out(shape.width(), shape.height(), shape.channels());
  fill_normal(out);
  return out;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) {
    throw InvalidArgument("NoiseSchedule: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(steps()) + "]");
  }
  return alpha_bar_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int steps) {
  if (steps < 1) throw InvalidArgument("make_schedule: T must be >= 1");
  constexpr double kOffset = 0.008;
  constexpr double kMaxBeta = 0.999;
  auto f = [&](double t) {
    const double c = std::cos((t / steps + kOffset) / (1.0 + kOffset) * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule s;
  s.alpha_bar_.resize(static_cast<std::size_t>(steps) + 1);
  s.alpha_bar_[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double beta = std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - beta);
  }
  for (int t = 1; t <= steps; ++t) {
    if (!(s.alpha_bar_[t] < s.alpha_bar_[t - 1]) || !(s.alpha_bar_[t] > 0.0)) {
      throw Error("make_schedule: alpha_bar not strictly decreasing and positive");
    }
  }
  return s;
}

LatentGrid add_noise(const NoiseSchedule& s, const LatentGrid& z0, int t, const LatentGrid& eps) {
  require_same_shape(z0, eps, "add_noise");
  const double ab = s.alpha_bar(t);
  LatentGrid out(z0.width(), z0.height(), z0.channels());
  simd::scaled_sum(std::sqrt(ab), z0.values(), std::sqrt(1.0 - ab), eps.values(), out.values());
  return out;
}

LatentGrid predict_x0(const NoiseSchedule& s, const LatentGrid& z_t, const LatentGrid& eps_hat,
                      int t) {
  require_same_shape(z_t, eps_hat, "predict_x0");
  if (t == 0) return z_t;
  const double ab = s.alpha_bar(t);
  LatentGrid out(z_t.width(), z_t.height(), z_t.channels());
  simd::sub_scaled_div(z_t.values(), std::sqrt(1.0 - ab), eps_hat.values(), std::sqrt(ab),
                       out.values());
  return out;
}

LatentGrid ddim_step(const NoiseSchedule& s, const LatentGrid& z_t, const LatentGrid& eps_hat,
                     int t, int t_prev) {
  if (!(t_prev >= 0 && t_prev < t)) {
    throw InvalidArgument("ddim_step: requires 0 <= t_prev < t, got t=" + std::to_string(t) +
                          " t_prev=" + std::to_string(t_prev));
  }
  const LatentGrid x0 = predict_x0(s, z_t, eps_hat, t);
  const double ab = s.alpha_bar(t_prev);
  LatentGrid out(z_t.width(), z_t.height(), z_t.channels());
  simd::scaled_sum(std::sqrt(ab), x0.values(), std::sqrt(1.0 - ab), eps_hat.values(), out.values());
  return out;
}

LatentGrid oracle_denoise(const NoiseSchedule& s, const LatentGrid& target_z0, const LatentGrid& z_t,
                          int t) {
  require_same_shape(target_z0, z_t, "oracle_denoise");
  if (t < 1) throw InvalidArgument("oracle_denoise: noise is undefined at t = 0");
  const double ab = s.alpha_bar(t);
  LatentGrid out(z_t.width(), z_t.height(), z_t.channels());
  simd::sub_scaled_div(z_t.values(), std::sqrt(ab), target_z0.values(), std::sqrt(1.0 - ab),
                       out.values());
  return out;
}

void DenoiserContext::validate(const LatentGrid& z_t) const {
  if (z_t.channels() != 3) throw ShapeError("denoiser: latents must have 3 channels");
  if (target_rays.width() != z_t.width() || target_rays.height() != z_t.height() ||
      ccm_aug.width() != z_t.width() || ccm_aug.height() != z_t.height() ||
      rgb_aug.width() != z_t.width() || rgb_aug.height() != z_t.height()) {
    throw ShapeError("denoiser: conditioning grids do not match the latent size");
  }
}

namespace {

const LatentGrid& target_for(const std::vector<LatentGrid>& targets, const DenoiserContext& ctx) {
  if (ctx.view_index < 0 || static_cast<std::size_t>(ctx.view_index) >= targets.size()) {
    throw InvalidArgument("oracle denoiser: no target for view " + std::to_string(ctx.view_index));
  }
  return targets[static_cast<std::size_t>(ctx.view_index)];
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t content_hash(const Image& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : img.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

OracleDenoiser::OracleDenoiser(NoiseSchedule schedule, std::vector<LatentGrid> targets)
    : schedule_(std::move(schedule)), targets_(std::move(targets)) {}

LatentGrid OracleDenoiser::predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx,
                                         int t) const {
  return oracle_denoise(schedule_, target_for(targets_, ctx), z_t, t);
}

NoisyOracleDenoiser::NoisyOracleDenoiser(NoiseSchedule schedule, std::vector<LatentGrid> targets,
                                         double rho, std::uint64_t seed)
    : schedule_(std::move(schedule)), targets_(std::move(targets)), rho_(rho), seed_(seed) {
  if (rho < 0.0) throw InvalidArgument("NoisyOracleDenoiser: rho must be >= 0");
}

LatentGrid NoisyOracleDenoiser::predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx,
                                              int t) const {
  LatentGrid eps = oracle_denoise(schedule_, target_for(targets_, ctx), z_t, t);
  if (rho_ == 0.0) return eps;
  std::uint64_t key = splitmix(seed_);
  key = splitmix(key ^ static_cast<std::uint64_t>(ctx.view_index));
  key = splitmix(key ^ static_cast<std::uint64_t>(t));
  key = splitmix(key ^ content_hash(z_t));
  Rng rng(key);
  for (double& v : eps.values()) v += rho_ * rng.normal();
  return eps;
}

Image SmoothPriorDenoiser::predict_clean(const GeoGrid& cond) {
  const int w = cond.width(), h = cond.height();
  Image filled(w, h, 3);
  std::vector<char> known(static_cast<std::size_t>(w) * h, 0);
  std::deque<std::pair<int, int>> frontier;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (cond.valid(u, v)) {
        known[static_cast<std::size_t>(v) * w + u] = 1;
        for (int c = 0; c < 3; ++c) filled.at(u, v, c) = cond.payload().at(u, v, c);
        frontier.emplace_back(u, v);
      }
  if (frontier.empty()) return filled;
  // Breadth-first propagation: every invalid pixel copies a valid pixel at
  // minimal 8-neighbour distance (first reached in scan order).
  std::vector<char> reached = known;
  while (!frontier.empty()) {
    const auto [u, v] = frontier.front();
    frontier.pop_front();
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        const int nu = u + du, nv = v + dv;
        if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
        const std::size_t k = static_cast<std::size_t>(nv) * w + nu;
        if (reached[k]) continue;
        reached[k] = 1;
        for (int c = 0; c < 3; ++c) filled.at(nu, nv, c) = filled.at(u, v, c);
        frontier.emplace_back(nu, nv);
      }
  }
  for (int pass = 0; pass < 2; ++pass) {
    Image blurred = filled;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (known[static_cast<std::size_t>(v) * w + u]) continue;
        double acc[3] = {0, 0, 0};
        int n = 0;
        for (int dv = -2; dv <= 2; ++dv)
          for (int du = -2; du <= 2; ++du) {
            const int nu = u + du, nv = v + dv;
            if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
            for (int c = 0; c < 3; ++c) acc[c] += filled.at(nu, nv, c);
            ++n;
          }
        for (int c = 0; c < 3; ++c) blurred.at(u, v, c) = acc[c] / n;
      }
    filled = std::move(blurred);
  }
  return filled;
}

LatentGrid SmoothPriorDenoiser::predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx,
                                              int t) const {
  ctx.validate(z_t);
  return oracle_denoise(schedule_, predict_clean(ctx.rgb_aug), z_t, t);
}

}  // namespace gamo
