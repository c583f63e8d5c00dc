#pragma once

// Geometry-aware multi-view outpainting: opacity masks, latent-resolution
// masks with iterative mask scheduling, mask latent blending, noise
// resampling, and the sampling loop that ties them together.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/diffusion.hpp"
#include "gamo/image.hpp"
#include "gamo/splat.hpp"

namespace gamo {

// Single-channel mask. Binary masks hold exactly 0 or 1 (1 = outpaint);
// soft masks hold weights in [0, 1].
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, double fill = 0.0) : values_(width, height, 1, fill) {}
  explicit Mask(Image values);

  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  double at(int x, int y) const { return values_.at(x, y); }
  double& at(int x, int y) { return values_.at(x, y); }
  const Image& values() const { return values_; }

  bool is_binary() const;
  std::size_t count() const;  // number of entries equal to 1
  // Every pixel set here is also set in `other` (same shape required).
  bool subset_of(const Mask& other) const;
  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Image values_;
};

// M(u) = 1 iff O(u) < eta.
Mask opacity_mask(const Image& opacity, double eta);

// Continuous outpaint weight 1 - O(u), clamped to [0, 1].
Mask soft_weights(const Image& opacity);

// Block max-pool by `factor`; partial border blocks are padded with 1.
Mask max_pool(const Mask& m, int factor);
// `iterations` passes of a k x k max filter (outside the grid counts as 0).
Mask dilate(const Mask& m, int iterations, int kernel = 5);
// Max-pool to latent resolution, then dilate.
Mask latent_mask(const Mask& m, int factor, int dilation_iters, int kernel = 5);
// Nearest-neighbour upsample of a latent-resolution mask back to width x height.
Mask upsample_nearest(const Mask& m, int factor, int width, int height);

enum class MaskMode { kHard, kSoft };

// Blend timesteps with per-step dilation counts.
struct MaskSchedule {
  std::vector<int> timesteps;  // strictly decreasing, in (0, T)
  std::vector<int> dilations;  // non-increasing, one per timestep
  int kernel = 5;
  MaskMode mode = MaskMode::kHard;

  // Timesteps round(f * T); dilation (k' - 15) / 10 with k' the timestep on a
  // 50-step grid, clamped at 0 (2, 1, 0 for 35, 25, 15 at T = 50).
  static MaskSchedule from_fractions(int steps, const std::vector<double>& fractions,
                                     MaskMode mode = MaskMode::kHard);
  static int dilation_for(int timestep, int steps);
  void validate(int steps) const;
  // Index of `t` in timesteps, or -1.
  int find(int t) const;
};

// (1 - M) * z_coarse_t + M * z_t, with M broadcast over channels.
LatentGrid mask_latent_blend(const Mask& m, const LatentGrid& z_coarse_t, const LatentGrid& z_t);

// R rounds of: predict z0 from z (at level t - 1), re-noise it to level t with
// fresh noise, and take one DDIM step back to t - 1.
LatentGrid noise_resample(const NoiseSchedule& schedule, const LatentGrid& z_blend, int t,
                          const Denoiser& denoiser, const DenoiserContext& ctx, int rounds,
                          Rng& rng);

struct GamoConfig {
  double s_k = 0.6;
  double eta_mask = 0.6;
  int steps = 50;
  std::vector<double> blend_fractions{0.7, 0.5, 0.3};
  int resample = 3;
  int latent_factor = 1;
  MaskMode mode = MaskMode::kHard;
  bool blending = true;             // false skips mask latent blending entirely
  bool reuse_coarse_noise = false;  // one noise draw for all blend steps of a view
  std::uint64_t seed = 0;
  std::string debug_dir;            // non-empty: write per-view PPM artifacts

  void validate() const;
  MaskSchedule mask_schedule() const;
};

struct InputView {
  Image image;
  Camera camera;
};

struct OutpaintedView {
  Image image;          // decoded final latent, clamped to [0, 1]
  Camera camera;        // widened camera
  RenderOutput coarse;  // coarse render through `camera`
  Mask mask;            // opacity mask at pixel resolution
  GeoGrid rgb_aug;      // conditioning handed to the denoiser
  GeoGrid ccm_aug;
};

// Conditioning for every target view, built once per run.
struct GamoConditioning {
  std::shared_ptr<SharedConditioning> shared;
  std::vector<DenoiserContext> contexts;  // one per input view, wide target
  std::vector<Camera> wide_cameras;
};

// Plücker grids, warped and center-augmented CCM/RGB for each widened view.
// Source depth comes from the coarse cloud (pixels with opacity >= eta).
GamoConditioning build_conditioning(std::span<const InputView> inputs, const GaussianCloud& coarse,
                                    const GamoConfig& cfg, const Aabb& bounds);

// Widened cameras for `inputs` under cfg.s_k (what the caller needs to build
// oracle targets before running).
std::vector<Camera> outpaint_cameras(std::span<const InputView> inputs, const GamoConfig& cfg);

// Runs the sampling loop per view. Random draws come from one generator seeded
// with cfg.seed, consumed per view in order: initial noise, then for each blend
// step the coarse-latent noise followed by one draw per resampling round.
std::vector<OutpaintedView> run_gamo(std::span<const InputView> inputs, const GaussianCloud& coarse,
                                     const GamoConfig& cfg, const Denoiser& denoiser,
                                     const Aabb& bounds);

}  // namespace gamo
