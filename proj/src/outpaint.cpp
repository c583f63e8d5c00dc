#include "gamo/outpaint.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "gamo/error.hpp"
#include "gamo/io.hpp"
#include "gamo/simd/kernels.hpp"

namespace gamo {

Mask::Mask(Image values) : values_(std::move(values)) {
  if (values_.channels() != 1) throw ShapeError("Mask: expected a single channel");
}

bool Mask::is_binary() const {
  return std::all_of(values_.values().begin(), values_.values().end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(
      std::count(values_.values().begin(), values_.values().end(), 1.0));
}

bool Mask::subset_of(const Mask& other) const {
  require_same_shape(values_, other.values_, "Mask::subset_of");
  std::span<const double> a = values_.values(), b = other.values_.values();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

Mask opacity_mask(const Image& opacity, double eta) {
  if (opacity.channels() != 1) throw ShapeError("opacity_mask: opacity must be single-channel");
  Mask m(opacity.width(), opacity.height());
  for (int y = 0; y < opacity.height(); ++y)
    for (int x = 0; x < opacity.width(); ++x) m.at(x, y) = opacity.at(x, y) < eta ? 1.0 : 0.0;
  return m;
}

Mask soft_weights(const Image& opacity) {
  if (opacity.channels() != 1) throw ShapeError("soft_weights: opacity must be single-channel");
  Mask m(opacity.width(), opacity.height());
  for (int y = 0; y < opacity.height(); ++y)
    for (int x = 0; x < opacity.width(); ++x)
      m.at(x, y) = std::clamp(1.0 - opacity.at(x, y), 0.0, 1.0);
  return m;
}

Mask max_pool(const Mask& m, int factor) {
  if (factor < 1) throw InvalidArgument("max_pool: factor must be >= 1");
  if (factor == 1) return m;
  const int lw = (m.width() + factor - 1) / factor;
  const int lh = (m.height() + factor - 1) / factor;
  Mask out(lw, lh);
  for (int ly = 0; ly < lh; ++ly)
    for (int lx = 0; lx < lw; ++lx) {
      double best = 0.0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) {
          const int x = lx * factor + dx, y = ly * factor + dy;
          best = std::max(best, (x < m.width() && y < m.height()) ? m.at(x, y) : 1.0);
        }
      out.at(lx, ly) = best;
    }
  return out;
}

Mask dilate(const Mask& m, int iterations, int kernel) {
  if (iterations < 0) throw InvalidArgument("dilate: iterations must be >= 0");
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("dilate: kernel must be odd");
  const int r = kernel / 2;
  Mask cur = m;
  for (int it = 0; it < iterations; ++it) {
    Mask next(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y)
      for (int x = 0; x < cur.width(); ++x) {
        double best = 0.0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx >= 0 && yy >= 0 && xx < cur.width() && yy < cur.height()) {
              best = std::max(best, cur.at(xx, yy));
            }
          }
        next.at(x, y) = best;
      }
    cur = std::move(next);
  }
  return cur;
}

Mask latent_mask(const Mask& m, int factor, int dilation_iters, int kernel) {
  return dilate(max_pool(m, factor), dilation_iters, kernel);
}

Mask upsample_nearest(const Mask& m, int factor, int width, int height) {
  Mask out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.at(x, y) = m.at(x / factor, y / factor);
  return out;
}

MaskSchedule MaskSchedule::from_fractions(int steps, const std::vector<double>& fractions,
                                          MaskMode mode) {
  MaskSchedule s;
  s.mode = mode;
  for (double f : fractions) {
    const int t = static_cast<int>(std::lround(f * steps));
    s.timesteps.push_back(t);
    s.dilations.push_back(dilation_for(t, steps));
  }
  return s;
}

int MaskSchedule::dilation_for(int timestep, int steps) {
  // The schedule is defined on a 50-step grid; other step counts rescale.
  const double on_grid = timestep * 50.0 / steps;
  return std::max(0, static_cast<int>(std::floor((on_grid - 15.0) / 10.0 + 1e-9)));
}

void MaskSchedule::validate(int steps) const {
  if (timesteps.size() != dilations.size()) {
    throw InvalidArgument("MaskSchedule: one dilation count per timestep required");
  }
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    if (timesteps[i] <= 0 || timesteps[i] >= steps) {
      throw InvalidArgument("MaskSchedule: timestep " + std::to_string(timesteps[i]) +
                            " outside (0, T)");
    }
    if (dilations[i] < 0) throw InvalidArgument("MaskSchedule: negative dilation count");
    if (i > 0 && !(timesteps[i] < timesteps[i - 1])) {
      throw InvalidArgument("MaskSchedule: timesteps must be strictly decreasing");
    }
    if (i > 0 && dilations[i] > dilations[i - 1]) {
      throw InvalidArgument("MaskSchedule: dilation counts must be non-increasing");
    }
  }
}

int MaskSchedule::find(int t) const {
  const auto it = std::find(timesteps.begin(), timesteps.end(), t);
  return it == timesteps.end() ? -1 : static_cast<int>(it - timesteps.begin());
}

LatentGrid mask_latent_blend(const Mask& m, const LatentGrid& z_coarse_t, const LatentGrid& z_t) {
  require_same_shape(z_coarse_t, z_t, "mask_latent_blend");
  if (m.width() != z_t.width() || m.height() != z_t.height()) {
    throw ShapeError("mask_latent_blend: mask does not match the latent size");
  }
  const int ch = z_t.channels();
  std::vector<double> weights(z_t.size());
  std::span<const double> mv = m.values().values();
  for (std::size_t px = 0; px < mv.size(); ++px) {
    if (mv[px] < 0.0 || mv[px] > 1.0) throw InvalidArgument("mask_latent_blend: weight outside [0,1]");
    for (int c = 0; c < ch; ++c) weights[px * ch + c] = mv[px];
  }
  LatentGrid out(z_t.width(), z_t.height(), ch);
  simd::masked_blend(weights, z_coarse_t.values(), z_t.values(), out.values());
  return out;
}

LatentGrid noise_resample(const NoiseSchedule& schedule, const LatentGrid& z_blend, int t,
                          const Denoiser& denoiser, const DenoiserContext& ctx, int rounds,
                          Rng& rng) {
  if (rounds < 0) throw InvalidArgument("noise_resample: R must be >= 0");
  if (t < 1) throw InvalidArgument("noise_resample: t must be >= 1");
  LatentGrid z = z_blend;
  for (int r = 0; r < rounds; ++r) {
    const int level = t - 1;
    const LatentGrid x0 =
        level == 0 ? z : predict_x0(schedule, z, denoiser.predict_noise(z, ctx, level), level);
    const LatentGrid eps = rng.normal_like(z);
    const LatentGrid z_resamp = add_noise(schedule, x0, t, eps);
    z = ddim_step(schedule, z_resamp, denoiser.predict_noise(z_resamp, ctx, t), t, t - 1);
  }
  return z;
}

void GamoConfig::validate() const {
  if (!(s_k > 0.0) || s_k > 1.0) throw InvalidArgument("GamoConfig: s_k must lie in (0, 1]");
  if (!(eta_mask > 0.0) || !(eta_mask < 1.0)) {
    throw InvalidArgument("GamoConfig: eta_mask must lie in (0, 1)");
  }
  if (steps < 1) throw InvalidArgument("GamoConfig: T must be >= 1");
  if (resample < 0) throw InvalidArgument("GamoConfig: R must be >= 0");
  if (latent_factor < 1) throw InvalidArgument("GamoConfig: latent factor must be >= 1");
  mask_schedule().validate(steps);
}

MaskSchedule GamoConfig::mask_schedule() const {
  return MaskSchedule::from_fractions(steps, blend_fractions, mode);
}

namespace {

void check_finite(const LatentGrid& z, int view, int step, const char* stage) {
  for (double v : z.values()) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "run_gamo: non-finite latent in view " << view << " at step " << step << " ("
          << stage << ")";
      throw NumericalError(msg.str());
    }
  }
}

GeoGrid rgb_grid(const Image& img, const Image* depth) {
  GeoGrid g(img.width(), img.height());
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u)
      if (depth == nullptr || depth->at(u, v) > 0.0) {
        g.set(u, v, Vec3(img.at(u, v, 0), img.at(u, v, 1), img.at(u, v, 2)));
      }
  return g;
}

// Merges `src` into `dst` keeping the nearer sample per pixel.
void zbuffer_merge(WarpResult& dst, const WarpResult& src) {
  for (int v = 0; v < dst.grid.height(); ++v)
    for (int u = 0; u < dst.grid.width(); ++u) {
      if (!src.grid.valid(u, v)) continue;
      if (dst.grid.valid(u, v) && dst.depth.at(u, v) <= src.depth.at(u, v)) continue;
      dst.grid.set(u, v, src.grid.value(u, v));
      dst.depth.at(u, v) = src.depth.at(u, v);
    }
}

}  // namespace

std::vector<Camera> outpaint_cameras(std::span<const InputView> inputs, const GamoConfig& cfg) {
  std::vector<Camera> out;
  for (const InputView& in : inputs) out.push_back(widen_fov(in.camera, cfg.s_k));
  return out;
}

GamoConditioning build_conditioning(std::span<const InputView> inputs, const GaussianCloud& coarse,
                                    const GamoConfig& cfg, const Aabb& bounds) {
  GamoConditioning cond;
  auto shared = std::make_shared<SharedConditioning>();
  std::vector<Image> src_depth;
  for (const InputView& in : inputs) {
    in.camera.validate();
    if (in.image.width() != in.camera.width() || in.image.height() != in.camera.height() ||
        in.image.channels() != 3) {
      throw ShapeError("run_gamo: input image does not match its camera");
    }
    const RenderOutput r = render(coarse, in.camera);
    Image depth = r.depth;
    for (int v = 0; v < depth.height(); ++v)
      for (int u = 0; u < depth.width(); ++u)
        if (r.opacity.at(u, v) < cfg.eta_mask) depth.at(u, v) = 0.0;
    GeoGrid ccm(in.camera.width(), in.camera.height());
    for (int v = 0; v < depth.height(); ++v)
      for (int u = 0; u < depth.width(); ++u)
        if (depth.at(u, v) > 0.0) {
          ccm.set(u, v, bounds.to_unit(unproject(in.camera, pixel_center(u, v), depth.at(u, v))));
        }
    shared->reference_latents.push_back(in.image);
    shared->reference_rays.push_back(plucker_rays(in.camera));
    shared->reference_ccm.push_back(std::move(ccm));
    shared->reference_rgb.push_back(rgb_grid(in.image, nullptr));
    src_depth.push_back(std::move(depth));
  }

  cond.wide_cameras = outpaint_cameras(inputs, cfg);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Camera& wide = cond.wide_cameras[i];
    WarpResult rgb_warp{GeoGrid(wide.width(), wide.height()), Image(wide.width(), wide.height(), 1),
                        Image(wide.width(), wide.height(), 2)};
    WarpResult ccm_warp = rgb_warp;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      zbuffer_merge(rgb_warp, warp_view_detailed(shared->reference_rgb[r], inputs[r].camera,
                                                 src_depth[r], wide));
      zbuffer_merge(ccm_warp, warp_view_detailed(shared->reference_ccm[r], inputs[r].camera,
                                                 src_depth[r], wide));
    }
    DenoiserContext ctx;
    ctx.shared = shared;
    ctx.view_index = static_cast<int>(i);
    ctx.target_rays = plucker_rays(wide);
    ctx.rgb_aug = augment_condition(rgb_warp.grid, shared->reference_rgb[i], cfg.s_k);
    ctx.ccm_aug = augment_condition(ccm_warp.grid, shared->reference_ccm[i], cfg.s_k);
    cond.contexts.push_back(std::move(ctx));
  }
  cond.shared = std::move(shared);
  return cond;
}

std::vector<OutpaintedView> run_gamo(std::span<const InputView> inputs, const GaussianCloud& coarse,
                                     const GamoConfig& cfg, const Denoiser& denoiser,
                                     const Aabb& bounds) {
  cfg.validate();
  if (inputs.empty()) throw InvalidArgument("run_gamo: no input views");
  if (coarse.empty()) throw InvalidArgument("run_gamo: empty coarse cloud");

  const NoiseSchedule schedule = make_schedule(cfg.steps);
  const MaskSchedule masks = cfg.mask_schedule();
  const GamoConditioning cond = build_conditioning(inputs, coarse, cfg, bounds);
  const bool debug = !cfg.debug_dir.empty();
  if (debug) std::filesystem::create_directories(cfg.debug_dir);
  auto debug_path = [&](std::size_t view, const std::string& what) {
    std::ostringstream name;
    name << cfg.debug_dir << "/view" << view << "_" << what << ".ppm";
    return name.str();
  };

  Rng rng(cfg.seed);
  std::vector<OutpaintedView> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Camera& wide = cond.wide_cameras[i];
    const DenoiserContext& ctx = cond.contexts[i];
    OutpaintedView view;
    view.camera = wide;
    view.coarse = render(coarse, wide);
    view.mask = opacity_mask(view.coarse.opacity, cfg.eta_mask);
    view.rgb_aug = ctx.rgb_aug;
    view.ccm_aug = ctx.ccm_aug;
    const LatentGrid z_coarse = view.coarse.color;  // identity encoder

    // Blend weights per scheduled step, upsampled back to latent (pixel) size.
    const Mask base = masks.mode == MaskMode::kHard ? view.mask : soft_weights(view.coarse.opacity);
    std::vector<Mask> step_masks;
    for (std::size_t k = 0; k < masks.timesteps.size(); ++k) {
      const Mask low = latent_mask(base, cfg.latent_factor, masks.dilations[k], masks.kernel);
      step_masks.push_back(upsample_nearest(low, cfg.latent_factor, wide.width(), wide.height()));
    }
    if (debug) {
      save_ppm(debug_path(i, "coarse"), view.coarse.color);
      save_ppm(debug_path(i, "opacity"), view.coarse.opacity);
    }

    LatentGrid z = rng.normal_like(z_coarse);
    std::optional<LatentGrid> coarse_eps;
    for (int s = cfg.steps; s >= 1; --s) {
      z = ddim_step(schedule, z, denoiser.predict_noise(z, ctx, s), s, s - 1);
      check_finite(z, static_cast<int>(i), s, "denoise");
      const int k = masks.find(s);
      if (!cfg.blending || k < 0) continue;
      if (!cfg.reuse_coarse_noise || !coarse_eps) coarse_eps = rng.normal_like(z_coarse);
      const LatentGrid z_coarse_t = add_noise(schedule, z_coarse, s - 1, *coarse_eps);
      z = mask_latent_blend(step_masks[static_cast<std::size_t>(k)], z_coarse_t, z);
      z = noise_resample(schedule, z, s, denoiser, ctx, cfg.resample, rng);
      check_finite(z, static_cast<int>(i), s, "blend/resample");
      if (debug) {
        save_ppm(debug_path(i, "mask_t" + std::to_string(s)), step_masks[static_cast<std::size_t>(k)].values());
        const LatentGrid x0 =
            s - 1 == 0 ? z : predict_x0(schedule, z, denoiser.predict_noise(z, ctx, s - 1), s - 1);
        save_ppm(debug_path(i, "x0_t" + std::to_string(s)), x0);
      }
    }
    view.image = z.clamped(0.0, 1.0);
    if (debug) save_ppm(debug_path(i, "outpainted"), view.image);
    out.push_back(std::move(view));
  }
  return out;
}

}  // namespace gamo
