#include "gamo/fit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "gamo/error.hpp"

namespace gamo {

void LossWeights::validate() const {
  if (lambda_s < 0.0 || lambda_s > 1.0 || lambda_perc < 0.0 || lambda_perc > 1.0) {
    throw InvalidArgument("LossWeights: lambdas must lie in [0, 1]");
  }
}

ValueGrad loss_input(const Image& rendered, const Image& gt, const LossWeights& w) {
  require_same_shape(rendered, gt, "loss_input");
  w.validate();
  ValueGrad l1 = mean_l1_with_grad(rendered, gt);
  ValueGrad out{(1.0 - w.lambda_s) * l1.value, std::move(l1.grad)};
  for (double& g : out.grad.values()) g *= (1.0 - w.lambda_s);
  if (w.lambda_s > 0.0) {
    const ValueGrad s = ssim_with_grad(rendered, gt);
    out.value += w.lambda_s * (1.0 - s.value);
    std::span<double> g = out.grad.values();
    std::span<const double> gs = s.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= w.lambda_s * gs[i];
  }
  return out;
}

ValueGrad loss_outpainted(const Image& rendered, const Image& outpainted, const LossWeights& w) {
  ValueGrad out = loss_input(rendered, outpainted, w);
  if (w.lambda_perc > 0.0) {
    const ValueGrad p = perceptual_surrogate_with_grad(rendered, outpainted);
    out.value += w.lambda_perc * p.value;
    std::span<double> g = out.grad.values();
    std::span<const double> gp = p.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += w.lambda_perc * gp[i];
  }
  return out;
}

std::string_view view_kind_name(ViewKind k) {
  return k == ViewKind::kInput ? "input" : "outpainted";
}

std::size_t SupervisionSet::count(ViewKind k) const {
  return static_cast<std::size_t>(
      std::count_if(views.begin(), views.end(), [k](const auto& v) { return v.kind == k; }));
}

FitConfig FitConfig::coarse(double scene_extent, int iterations) {
  FitConfig cfg;
  cfg.iterations = iterations;
  cfg.lr.mu = 2e-3 * scene_extent;
  return cfg;
}

FitConfig FitConfig::refine(double scene_extent, int iterations) {
  FitConfig cfg = coarse(scene_extent, iterations);
  cfg.alternate_supervision = true;
  return cfg;
}

void FitConfig::validate() const {
  if (iterations < 0) throw InvalidArgument("FitConfig: iterations must be >= 0");
  if (!(lr.mu > 0) || !(lr.scale > 0) || !(lr.alpha > 0) || !(lr.rgb > 0)) {
    throw InvalidArgument("FitConfig: learning rates must be > 0");
  }
}

void write_iteration_log(std::ostream& out, const IterationLog& log) {
  for (const IterationRecord& r : log) {
    out << r.iter << ' ' << view_kind_name(r.kind) << ' ' << r.loss << ' ' << r.psnr << '\n';
  }
}

namespace {

constexpr int kParams = 10;  // mu(3) scale(3) alpha(1) rgb(3)

// Picks views round-robin, alternating kinds when requested.
class ViewScheduler {
 public:
  ViewScheduler(const SupervisionSet& set, bool alternate) {
    for (std::size_t i = 0; i < set.views.size(); ++i) {
      (set.views[i].kind == ViewKind::kInput ? inputs_ : outpainted_).push_back(i);
    }
    alternate_ = alternate && !outpainted_.empty();
  }

  std::size_t next() {
    const bool use_outpainted = alternate_ && (step_++ % 2 == 1);
    if (use_outpainted) return outpainted_[next_out_++ % outpainted_.size()];
    return inputs_[next_in_++ % inputs_.size()];
  }

 private:
  std::vector<std::size_t> inputs_, outpainted_;
  bool alternate_ = false;
  std::size_t step_ = 0, next_in_ = 0, next_out_ = 0;
};

}  // namespace

GaussianCloud optimize(const GaussianCloud& cloud, const SupervisionSet& views,
                       const LossWeights& w, const FitConfig& cfg, IterationLog* log) {
  cfg.validate();
  w.validate();
  if (cloud.empty()) throw InvalidArgument("optimize: empty cloud");
  if (views.count(ViewKind::kInput) == 0) throw InvalidArgument("optimize: no input views");
  GaussianCloud current = cloud;
  if (cfg.iterations == 0) return current;

  std::vector<double> m1(current.size() * kParams, 0.0), m2(current.size() * kParams, 0.0);
  const double lrs[kParams] = {cfg.lr.mu,    cfg.lr.mu,    cfg.lr.mu,   cfg.lr.scale,
                               cfg.lr.scale, cfg.lr.scale, cfg.lr.alpha, cfg.lr.rgb,
                               cfg.lr.rgb,   cfg.lr.rgb};
  ViewScheduler scheduler(views, cfg.alternate_supervision);

  for (int it = 0; it < cfg.iterations; ++it) {
    const SupervisedView& view = views.views[scheduler.next()];
    const RenderPass pass(current, view.camera);
    const RenderOutput& r = pass.output();
    const ValueGrad loss = view.kind == ViewKind::kInput
                               ? loss_input(r.color, view.image, w)
                               : loss_outpainted(r.color, view.image, w);
    if (!std::isfinite(loss.value)) {
      std::ostringstream msg;
      msg << "optimize: non-finite loss at iteration " << it << " (" << view_kind_name(view.kind)
          << " view, " << current.size() << " gaussians)";
      throw NumericalError(msg.str());
    }
    if (log != nullptr) log->push_back({it, view.kind, loss.value, psnr(r.color, view.image)});

    const Image zero_opacity(r.opacity.width(), r.opacity.height(), 1);
    const CloudGrad grad = pass.backward(loss.grad, zero_opacity);

    const double step = it + 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    for (std::size_t i = 0; i < current.size(); ++i) {
      Gaussian& g = current[i];
      const GaussianGrad& gg = grad[i];
      double* params[kParams] = {&g.mu.x(),    &g.mu.y(),    &g.mu.z(), &g.scale.x(),
                                 &g.scale.y(), &g.scale.z(), &g.alpha,  &g.rgb.x(),
                                 &g.rgb.y(),   &g.rgb.z()};
      const double grads[kParams] = {gg.mu.x(),    gg.mu.y(),    gg.mu.z(), gg.scale.x(),
                                     gg.scale.y(), gg.scale.z(), gg.alpha,  gg.rgb.x(),
                                     gg.rgb.y(),   gg.rgb.z()};
      for (int p = 0; p < kParams; ++p) {
        const std::size_t k = i * kParams + p;
        m1[k] = cfg.adam_beta1 * m1[k] + (1.0 - cfg.adam_beta1) * grads[p];
        m2[k] = cfg.adam_beta2 * m2[k] + (1.0 - cfg.adam_beta2) * grads[p] * grads[p];
        *params[p] -= lrs[p] * (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + cfg.adam_eps);
      }
      g.alpha = std::clamp(g.alpha, kAlphaMin, kAlphaMax);
      g.scale = g.scale.cwiseMax(kScaleMin);
      g.rgb = g.rgb.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return current;
}

ReinitResult reinit_points(std::span<const ReinitView> views, const ReinitParams& params) {
  if (params.stride < 1) throw InvalidArgument("reinit_points: stride must be >= 1");
  // Confident depths per view, for the median fallback.
  std::vector<std::vector<double>> confident_depths(views.size());
  std::vector<double> all_depths;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ReinitView& rv = views[i];
    if (rv.image.width() != rv.camera.width() || rv.image.height() != rv.camera.height() ||
        rv.image.channels() != 3 || !rv.coarse.opacity.same_shape(rv.coarse.depth) ||
        rv.coarse.opacity.width() != rv.camera.width() ||
        rv.coarse.opacity.height() != rv.camera.height()) {
      throw ShapeError("reinit_points: image, camera and coarse render must align");
    }
    for (int v = 0; v < rv.camera.height(); ++v)
      for (int u = 0; u < rv.camera.width(); ++u)
        if (rv.coarse.opacity.at(u, v) >= params.eta_mask && rv.coarse.depth.at(u, v) > 0.0) {
          confident_depths[i].push_back(rv.coarse.depth.at(u, v));
        }
    all_depths.insert(all_depths.end(), confident_depths[i].begin(), confident_depths[i].end());
  }
  auto median = [](std::vector<double> d) {
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
  };
  if (all_depths.empty() && !params.scene_center) {
    throw InvalidArgument("reinit_points: no confident pixels in any view (degenerate init)");
  }

  ReinitResult out;
  GaussianCloud filled;
  const int off = params.stride / 2;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ReinitView& rv = views[i];
    double fallback = 0.0;
    if (!confident_depths[i].empty()) {
      fallback = median(confident_depths[i]);
    } else if (params.scene_center) {
      fallback = rv.camera.world_to_camera(*params.scene_center).z();
    }
    if (!(fallback > 0.0)) fallback = all_depths.empty() ? 1.0 : median(all_depths);

    const double focal = rv.camera.intrinsics.fx;
    for (int v = off; v < rv.camera.height(); v += params.stride) {
      for (int u = off; u < rv.camera.width(); u += params.stride) {
        const bool confident = rv.coarse.opacity.at(u, v) >= params.eta_mask &&
                               rv.coarse.depth.at(u, v) > 0.0;
        const double depth = confident ? rv.coarse.depth.at(u, v) : fallback;
        Gaussian g;
        g.mu = unproject(rv.camera, pixel_center(u, v), depth);
        g.scale = Vec3::Constant(params.stride * depth / focal);
        g.alpha = 0.5;
        g.rgb = Vec3(rv.image.at(u, v, 0), rv.image.at(u, v, 1), rv.image.at(u, v, 2))
                    .cwiseMax(0.0)
                    .cwiseMin(1.0);
        (confident ? out.cloud : filled).push_back(g);
      }
    }
  }
  out.confident = out.cloud.size();
  out.filled = filled.size();
  out.cloud.insert(out.cloud.end(), filled.begin(), filled.end());
  return out;
}

}  // namespace gamo
