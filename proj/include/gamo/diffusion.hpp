#pragma once

// Noise schedule, forward noising, deterministic DDIM stepping, and the
// denoiser interface with its in-repo implementations. Latents live in pixel
// space (identity autoencoder, 3 channels).

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"

namespace gamo {

// Single seeded generator threaded explicitly through every stochastic call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  // Fills with i.i.d. N(0, 1) in storage order.
  void fill_normal(Image& img);
  Image normal_like(const Image& shape);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Cosine alpha-bar table (s = 0.008) for t = 0..T, per-step beta clipped at
// 0.999 so alpha_bar_T stays positive.
class NoiseSchedule {
 public:
  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const;
  const std::vector<double>& table() const { return alpha_bar_; }

 private:
  friend NoiseSchedule make_schedule(int steps);
  std::vector<double> alpha_bar_;
};

NoiseSchedule make_schedule(int steps);

// sqrt(ab_t) z0 + sqrt(1 - ab_t) eps
LatentGrid add_noise(const NoiseSchedule& s, const LatentGrid& z0, int t, const LatentGrid& eps);
// (z_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t); identity at t = 0.
LatentGrid predict_x0(const NoiseSchedule& s, const LatentGrid& z_t, const LatentGrid& eps_hat, int t);
// Deterministic DDIM (eta = 0) from t to t_prev < t.
LatentGrid ddim_step(const NoiseSchedule& s, const LatentGrid& z_t, const LatentGrid& eps_hat, int t,
                     int t_prev);
// Noise that maps z_t exactly onto target_z0: (z_t - sqrt(ab_t) target) / sqrt(1 - ab_t).
LatentGrid oracle_denoise(const NoiseSchedule& s, const LatentGrid& target_z0, const LatentGrid& z_t,
                          int t);

// Conditioning shared by every target view of one multi-view run.
struct SharedConditioning {
  std::vector<LatentGrid> reference_latents;  // clean input-view latents
  std::vector<RayGrid> reference_rays;        // Plücker grids of the input cameras
  std::vector<GeoGrid> reference_ccm;         // input-view CCM
  std::vector<GeoGrid> reference_rgb;         // input-view RGB
};

// Everything a denoiser may look at for one target view.
struct DenoiserContext {
  std::shared_ptr<const SharedConditioning> shared;
  int view_index = 0;
  RayGrid target_rays{1, 1};  // Plücker grid of the widened target camera
  GeoGrid ccm_aug;            // warped + center-augmented CCM
  GeoGrid rgb_aug;            // warped + center-augmented RGB

  void validate(const LatentGrid& z_t) const;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  // Predicted noise for z_t at step t >= 1; same shape as z_t.
  virtual LatentGrid predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx, int t) const = 0;
  virtual std::string name() const = 0;
};

// Exact noise for known per-view targets.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(NoiseSchedule schedule, std::vector<LatentGrid> targets);
  LatentGrid predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx, int t) const override;
  std::string name() const override { return "oracle"; }

 private:
  NoiseSchedule schedule_;
  std::vector<LatentGrid> targets_;
};

// Oracle noise plus rho * N(0, I). The perturbation is a pure function of
// (seed, view, t, z_t), so repeated calls with the same inputs agree.
class NoisyOracleDenoiser : public Denoiser {
 public:
  NoisyOracleDenoiser(NoiseSchedule schedule, std::vector<LatentGrid> targets, double rho,
                      std::uint64_t seed);
  LatentGrid predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx, int t) const override;
  std::string name() const override { return "noisy-oracle"; }
  double rho() const { return rho_; }

 private:
  NoiseSchedule schedule_;
  std::vector<LatentGrid> targets_;
  double rho_;
  std::uint64_t seed_;
};

// Predicts z0 from the augmented RGB conditioning alone: invalid pixels take
// the value of the nearest valid pixel, then two 5x5 box blurs smooth the
// filled region while valid pixels keep their payload.
class SmoothPriorDenoiser : public Denoiser {
 public:
  explicit SmoothPriorDenoiser(NoiseSchedule schedule) : schedule_(std::move(schedule)) {}
  LatentGrid predict_noise(const LatentGrid& z_t, const DenoiserContext& ctx, int t) const override;
  std::string name() const override { return "smooth-prior"; }

  static Image predict_clean(const GeoGrid& conditioning);

 private:
  NoiseSchedule schedule_;
};

}  // namespace gamo
