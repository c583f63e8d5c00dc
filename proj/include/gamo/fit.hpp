#pragma once

// Photometric losses and the gradient-descent loop that fits a Gaussian cloud
// to supervision views, plus point re-initialization from outpainted views.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/image.hpp"
#include "gamo/metrics.hpp"
#include "gamo/splat.hpp"

namespace gamo {

struct LossWeights {
  double lambda_s = 0.2;     // D-SSIM weight
  double lambda_perc = 0.1;  // perceptual-surrogate weight (outpainted views only)
  void validate() const;
};

// (1 - lambda_s) * L1 + lambda_s * (1 - SSIM), gradient w.r.t. `rendered`.
ValueGrad loss_input(const Image& rendered, const Image& gt, const LossWeights& w);
// loss_input + lambda_perc * perceptual_surrogate.
ValueGrad loss_outpainted(const Image& rendered, const Image& outpainted, const LossWeights& w);

enum class ViewKind { kInput, kOutpainted };
std::string_view view_kind_name(ViewKind k);

struct SupervisedView {
  Image image;
  Camera camera;
  ViewKind kind = ViewKind::kInput;
};

struct SupervisionSet {
  std::vector<SupervisedView> views;
  std::size_t count(ViewKind k) const;
};

struct LearningRates {
  double mu = 2e-3;
  double scale = 5e-3;
  double alpha = 5e-2;
  double rgb = 2.5e-2;
};

struct FitConfig {
  int iterations = 2000;
  LearningRates lr;
  std::uint64_t seed = 0;
  bool alternate_supervision = false;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Position learning rate scales with the scene extent.
  static FitConfig coarse(double scene_extent, int iterations = 2000);
  static FitConfig refine(double scene_extent, int iterations = 1500);
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  ViewKind kind = ViewKind::kInput;
  double loss = 0.0;
  double psnr = 0.0;
};
using IterationLog = std::vector<IterationRecord>;

// `iter kind loss psnr`, one line per iteration.
void write_iteration_log(std::ostream& out, const IterationLog& log);

inline constexpr double kAlphaMin = 1e-4;
inline constexpr double kAlphaMax = 1.0 - 1e-4;
inline constexpr double kScaleMin = 1e-4;

// Adam over mu, scale, alpha and rgb. Views are visited round-robin; with
// alternate_supervision and both kinds present, kinds alternate starting with
// an input view. Throws NumericalError on a non-finite loss.
GaussianCloud optimize(const GaussianCloud& cloud, const SupervisionSet& views,
                       const LossWeights& w, const FitConfig& cfg, IterationLog* log = nullptr);

struct ReinitView {
  Image image;           // outpainted image
  Camera camera;         // wide-FOV camera
  RenderOutput coarse;   // coarse render through the same camera
};

struct ReinitParams {
  int stride = 4;
  double eta_mask = 0.6;
  // Depth fallback for views without confident pixels: the camera depth of
  // this point when given, else the median over all views.
  std::optional<Vec3> scene_center;
};

struct ReinitResult {
  GaussianCloud cloud;
  std::size_t confident = 0;  // points placed at coarse depth (listed first)
  std::size_t filled = 0;     // points placed on the fallback plane
};

// Samples every stride-th pixel of each view. Confident pixels (coarse opacity
// >= eta) unproject at the coarse expected depth, the rest at the median
// confident depth of their view. Throws InvalidArgument when no view has a
// confident pixel and no scene center is given.
ReinitResult reinit_points(std::span<const ReinitView> views, const ReinitParams& params);

}  // namespace gamo
