#include "gamo/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "gamo/diffusion.hpp"
#include "gamo/metrics.hpp"
#include "json.hpp"

namespace gamo {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kCoarseOnly: return "coarse-only";
    case Strategy::kOutpaint: return "outpaint";
    case Strategy::kNovelViewAugment: return "novel-view-augment";
  }
  return "?";
}

std::string_view denoiser_name(DenoiserKind d) {
  switch (d) {
    case DenoiserKind::kOracle: return "oracle";
    case DenoiserKind::kNoisyOracle: return "noisy-oracle";
    case DenoiserKind::kSmoothPrior: return "smooth-prior";
  }
  return "?";
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (complexity != 3 && complexity != 8 && complexity != 20) fail("complexity must be 3, 8 or 20");
  if (input_views < 1) fail("input_views must be >= 1");
  if (heldout_views < 1) fail("heldout_views must be >= 1");
  if (width < 16 || height < 16) fail("width and height must be >= 16");
  if (paper_mode) {
    if (width % 64 != 0 || height % 64 != 0) fail("paper_mode needs width and height multiples of 64");
  } else if (width % 2 != 0 || height % 2 != 0) {
    fail("width and height must be even");
  }
  if (!(focal > 0.0)) fail("focal must be > 0");
  if (!(arc_span_deg >= 0.0) || arc_span_deg > 360.0) fail("arc_span_deg must lie in [0, 360]");
  if (!(init_noise >= 0.0)) fail("init_noise must be >= 0");
  if (init_stride < 1 || reinit_stride < 1) fail("strides must be >= 1");
  if (coarse_iterations < 1 || refine_iterations < 1) fail("iterations must be >= 1");
  if (!(lr.mu > 0) || !(lr.scale > 0) || !(lr.alpha > 0) || !(lr.rgb > 0)) {
    fail("learning rates must be > 0");
  }
  if (!(rho >= 0.0)) fail("rho must be >= 0");
  if (strategy == Strategy::kNovelViewAugment && input_views < 2) {
    fail("novel-view-augment needs at least 2 input views");
  }
  try {
    gamo.validate();
    loss.validate();
    center_region(width, height, gamo.s_k);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (height % gamo.latent_factor != 0 || width % gamo.latent_factor != 0) {
    fail("latent_factor must divide width and height");
  }
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config: bad value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: bad boolean '" + text + "' for " + key);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_number<double>(key, item));
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

struct KeyBinding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
KeyBinding number_key(std::string key, T RunConfig::*field) {
  return {key, [key, field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(key, v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*field);
            else return std::to_string(c.*field);
          }};
}

template <class T>
KeyBinding nested_number_key(std::string key, std::function<T&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_number<T>(key, v); },
          [ref](const RunConfig& c) {
            const T value = ref(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format_double(value);
            else return std::to_string(value);
          }};
}

KeyBinding bool_key(std::string key, std::function<bool&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); },
          [ref](const RunConfig& c) { return format_bool(ref(const_cast<RunConfig&>(c))); }};
}

template <class E>
KeyBinding enum_key(std::string key, E RunConfig::*field, std::vector<std::pair<E, std::string>> names) {
  return {key,
          [key, field, names](RunConfig& c, const std::string& v) {
            for (const auto& [e, n] : names) {
              if (n == v) {
                c.*field = e;
                return;
              }
            }
            throw ConfigError("config: bad value '" + v + "' for " + key);
          },
          [field, names](const RunConfig& c) {
            for (const auto& [e, n] : names) {
              if (e == c.*field) return n;
            }
            return std::string("?");
          }};
}

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = [] {
    std::vector<KeyBinding> b;
    b.push_back(number_key("seed", &RunConfig::seed));
    b.push_back(number_key("complexity", &RunConfig::complexity));
    b.push_back(number_key("input_views", &RunConfig::input_views));
    b.push_back(number_key("heldout_views", &RunConfig::heldout_views));
    b.push_back(number_key("width", &RunConfig::width));
    b.push_back(number_key("height", &RunConfig::height));
    b.push_back(bool_key("paper_mode", [](RunConfig& c) -> bool& { return c.paper_mode; }));
    b.push_back(number_key("focal", &RunConfig::focal));
    b.push_back(number_key("arc_span_deg", &RunConfig::arc_span_deg));
    b.push_back(number_key("heldout_phase", &RunConfig::heldout_phase));
    b.push_back(number_key("init_noise", &RunConfig::init_noise));
    b.push_back(number_key("init_stride", &RunConfig::init_stride));
    b.push_back(nested_number_key<double>("s_k", [](RunConfig& c) -> double& { return c.gamo.s_k; }));
    b.push_back(nested_number_key<double>("eta_mask", [](RunConfig& c) -> double& { return c.gamo.eta_mask; }));
    b.push_back(nested_number_key<int>("steps", [](RunConfig& c) -> int& { return c.gamo.steps; }));
    b.push_back({"blend_fractions",
                 [](RunConfig& c, const std::string& v) { c.gamo.blend_fractions = parse_list("blend_fractions", v); },
                 [](const RunConfig& c) { return format_list(c.gamo.blend_fractions); }});
    b.push_back(nested_number_key<int>("resample", [](RunConfig& c) -> int& { return c.gamo.resample; }));
    b.push_back(nested_number_key<int>("latent_factor", [](RunConfig& c) -> int& { return c.gamo.latent_factor; }));
    b.push_back({"mask_mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "hard") c.gamo.mode = MaskMode::kHard;
                   else if (v == "soft") c.gamo.mode = MaskMode::kSoft;
                   else throw ConfigError("config: bad value '" + v + "' for mask_mode");
                 },
                 [](const RunConfig& c) { return std::string(c.gamo.mode == MaskMode::kHard ? "hard" : "soft"); }});
    b.push_back(bool_key("blending", [](RunConfig& c) -> bool& { return c.gamo.blending; }));
    b.push_back(bool_key("reuse_coarse_noise", [](RunConfig& c) -> bool& { return c.gamo.reuse_coarse_noise; }));
    b.push_back(number_key("coarse_iterations", &RunConfig::coarse_iterations));
    b.push_back(number_key("refine_iterations", &RunConfig::refine_iterations));
    b.push_back(nested_number_key<double>("lr_mu", [](RunConfig& c) -> double& { return c.lr.mu; }));
    b.push_back(nested_number_key<double>("lr_scale", [](RunConfig& c) -> double& { return c.lr.scale; }));
    b.push_back(nested_number_key<double>("lr_alpha", [](RunConfig& c) -> double& { return c.lr.alpha; }));
    b.push_back(nested_number_key<double>("lr_rgb", [](RunConfig& c) -> double& { return c.lr.rgb; }));
    b.push_back(nested_number_key<double>("lambda_s", [](RunConfig& c) -> double& { return c.loss.lambda_s; }));
    b.push_back(nested_number_key<double>("lambda_perc", [](RunConfig& c) -> double& { return c.loss.lambda_perc; }));
    b.push_back(number_key("reinit_stride", &RunConfig::reinit_stride));
    b.push_back(enum_key<RefineInit>("refine_init", &RunConfig::refine_init,
                                     {{RefineInit::kUnion, "union"}, {RefineInit::kReinit, "reinit"}}));
    b.push_back(enum_key<Strategy>("strategy", &RunConfig::strategy,
                                   {{Strategy::kCoarseOnly, "coarse-only"},
                                    {Strategy::kOutpaint, "outpaint"},
                                    {Strategy::kNovelViewAugment, "novel-view-augment"}}));
    b.push_back(enum_key<DenoiserKind>("denoiser", &RunConfig::denoiser,
                                       {{DenoiserKind::kOracle, "oracle"},
                                        {DenoiserKind::kNoisyOracle, "noisy-oracle"},
                                        {DenoiserKind::kSmoothPrior, "smooth-prior"}}));
    b.push_back(number_key("rho", &RunConfig::rho));
    b.push_back(bool_key("debug", [](RunConfig& c) -> bool& { return c.debug; }));
    b.push_back({"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir; }});
    return b;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeyBinding& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

RunConfig run_config_from(const KeyValueConfig& kv) {
  std::map<std::string, const KeyBinding*> by_key;
  for (const KeyBinding& b : bindings()) by_key[b.key] = &b;
  for (const auto& [key, value] : kv.entries()) {
    if (!by_key.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  RunConfig cfg;
  if (kv.has("paper_mode") && parse_bool("paper_mode", kv.get("paper_mode"))) {
    cfg.paper_mode = true;
    cfg.width = 512;
    cfg.height = 384;
    cfg.coarse_iterations = 10000;
  }
  for (const KeyBinding& b : bindings()) {
    if (kv.has(b.key)) b.set(cfg, kv.get(b.key));
  }
  if (cfg.paper_mode && !kv.has("refine_iterations")) {
    cfg.refine_iterations = cfg.input_views <= 3 ? 3000 : 7000;
  }
  cfg.validate();
  return cfg;
}

std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const KeyBinding& b : bindings()) {
    if (b.key != "output_dir") out.emplace_back(b.key, b.get(cfg));
  }
  return out;
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("git_blob_hash: cannot allocate digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("git_blob_hash: digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ stream);
}

namespace {

// Random streams of one run.
enum Stream : std::uint64_t {
  kSceneStream = 1,
  kViewStream,
  kInitStream,
  kCoarseStream,
  kGamoStream,
  kOracleStream,
  kRefineStream,
  kNovelStream,
};

const Vec3 kLookAt(0.0, 0.5, 0.0);

Intrinsics narrow_intrinsics(const RunConfig& cfg) {
  const double f = cfg.focal * cfg.width;
  return {f, f, 0.5 * cfg.width, 0.5 * cfg.height, cfg.width, cfg.height};
}

template <class F>
auto run_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

double scene_extent(const Scene& scene) { return scene.bounds.extent().maxCoeff(); }

Dataset make_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.scene = generate_scene(derive_seed(cfg.seed, kSceneStream), cfg.complexity);

  ViewSpec spec;
  spec.count = cfg.input_views;
  spec.intrinsics = narrow_intrinsics(cfg);
  spec.target = kLookAt;
  spec.arc_span_deg = cfg.arc_span_deg;
  d.input_cameras = sample_views(d.scene, spec, derive_seed(cfg.seed, kViewStream));

  ViewSpec held = spec;
  held.count = cfg.heldout_views;
  held.phase = cfg.heldout_phase;
  held.intrinsics = scale_intrinsics(spec.intrinsics, cfg.gamo.s_k);
  d.heldout_cameras = sample_views(d.scene, held, derive_seed(cfg.seed, kViewStream));

  for (const Camera& c : d.input_cameras) d.input_images.push_back(gt_render(d.scene, c).color);
  for (const Camera& c : d.heldout_cameras) d.heldout_images.push_back(gt_render(d.scene, c).color);
  return d;
}

GaussianCloud initial_points(const Dataset& data, const RunConfig& cfg) {
  PointInitParams p;
  p.stride = cfg.init_stride;
  p.noise_std = cfg.init_noise * scene_extent(data.scene);
  return init_points(data.scene, data.input_cameras, p, derive_seed(cfg.seed, kInitStream));
}

namespace {

FitConfig fit_config(const RunConfig& cfg, const Dataset& data, int iterations, Stream stream) {
  FitConfig f = FitConfig::coarse(scene_extent(data.scene), iterations);
  f.lr = cfg.lr;
  f.lr.mu = cfg.lr.mu * scene_extent(data.scene);
  f.seed = derive_seed(cfg.seed, stream);
  return f;
}

SupervisionSet input_supervision(const Dataset& data) {
  SupervisionSet set;
  for (std::size_t i = 0; i < data.input_cameras.size(); ++i) {
    set.views.push_back({data.input_images[i], data.input_cameras[i], ViewKind::kInput});
  }
  return set;
}

}  // namespace

GaussianCloud fit_coarse(const Dataset& data, const GaussianCloud& init, const RunConfig& cfg,
                         IterationLog* log) {
  return optimize(init, input_supervision(data), cfg.loss,
                  fit_config(cfg, data, cfg.coarse_iterations, kCoarseStream), log);
}

Image paste_center(const Image& outpainted, const Image& input, double s_k, int feather) {
  require_same_shape(outpainted, input, "paste_center");
  if (outpainted.channels() != 3) throw ShapeError("paste_center: expected RGB images");
  if (feather < 0) throw InvalidArgument("paste_center: feather must be >= 0");
  const int w = outpainted.width(), h = outpainted.height();
  const CenterRegion r = center_region(w, h, s_k);
  const GeoGrid small = area_resample(GeoGrid(input), r.width, r.height);
  Image out = outpainted;
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      // distance of the pixel center to the region border
      const double d = std::min({x + 0.5, r.width - x - 0.5, y + 0.5, r.height - y - 0.5});
      const double a = d >= feather ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * d / feather);
      const Vec3 in = small.value(x, y);
      for (int c = 0; c < 3; ++c) {
        double& o = out.at(r.x0 + x, r.y0 + y, c);
        o = a * in[c] + (1.0 - a) * o;
      }
    }
  }
  return out;
}

OutpaintStage outpaint_stage(const Dataset& data, const GaussianCloud& coarse, const RunConfig& cfg) {
  std::vector<InputView> inputs;
  for (std::size_t i = 0; i < data.input_cameras.size(); ++i) {
    inputs.push_back({data.input_images[i], data.input_cameras[i]});
  }
  GamoConfig g = cfg.gamo;
  g.seed = derive_seed(cfg.seed, kGamoStream);
  if (cfg.debug && !cfg.output_dir.empty()) g.debug_dir = cfg.output_dir + "/debug";

  const NoiseSchedule schedule = make_schedule(g.steps);
  std::unique_ptr<Denoiser> denoiser;
  if (cfg.denoiser == DenoiserKind::kSmoothPrior) {
    denoiser = std::make_unique<SmoothPriorDenoiser>(schedule);
  } else {
    std::vector<LatentGrid> targets;
    for (const Camera& c : outpaint_cameras(inputs, g)) targets.push_back(gt_render(data.scene, c).color);
    if (cfg.denoiser == DenoiserKind::kOracle) {
      denoiser = std::make_unique<OracleDenoiser>(schedule, std::move(targets));
    } else {
      denoiser = std::make_unique<NoisyOracleDenoiser>(schedule, std::move(targets), cfg.rho,
                                                       derive_seed(cfg.seed, kOracleStream));
    }
  }
  OutpaintStage out;
  out.views = run_gamo(inputs, coarse, g, *denoiser, data.scene.bounds);
  for (std::size_t i = 0; i < out.views.size(); ++i) {
    out.views[i].image = paste_center(out.views[i].image, data.input_images[i], g.s_k);
  }
  return out;
}

GaussianCloud refine_stage(const Dataset& data, const GaussianCloud& coarse,
                           std::span<const ReinitView> outpainted, const RunConfig& cfg,
                           IterationLog* log) {
  ReinitParams params;
  params.stride = cfg.reinit_stride;
  params.eta_mask = cfg.gamo.eta_mask;
  params.scene_center = data.scene.bounds.center();
  const ReinitResult re = reinit_points(outpainted, params);

  GaussianCloud start;
  if (cfg.refine_init == RefineInit::kUnion) start = coarse;
  start.insert(start.end(), re.cloud.begin(), re.cloud.end());

  SupervisionSet set = input_supervision(data);
  for (const ReinitView& v : outpainted) set.views.push_back({v.image, v.camera, ViewKind::kOutpainted});
  FitConfig f = fit_config(cfg, data, cfg.refine_iterations, kRefineStream);
  f.alternate_supervision = true;
  return optimize(start, set, cfg.loss, f, log);
}

std::vector<SupervisedView> novel_views(const Dataset& data, const RunConfig& cfg) {
  ViewSpec spec;
  spec.count = cfg.input_views;
  spec.intrinsics = narrow_intrinsics(cfg);
  spec.target = kLookAt;
  spec.arc_span_deg = cfg.arc_span_deg;
  spec.phase = 0.5;
  std::vector<Camera> cams = sample_views(data.scene, spec, derive_seed(cfg.seed, kViewStream));
  cams.pop_back();  // keep the midpoints between consecutive inputs

  const NoiseSchedule schedule = make_schedule(cfg.gamo.steps);
  std::vector<LatentGrid> targets;
  for (const Camera& c : cams) targets.push_back(gt_render(data.scene, c).color);
  const NoisyOracleDenoiser denoiser(schedule, targets, cfg.rho, derive_seed(cfg.seed, kNovelStream));
  const auto shared = std::make_shared<SharedConditioning>();

  std::vector<SupervisedView> out;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    DenoiserContext ctx;
    ctx.shared = shared;
    ctx.view_index = static_cast<int>(i);
    ctx.target_rays = plucker_rays(cams[i]);
    ctx.ccm_aug = GeoGrid(cfg.width, cfg.height);
    ctx.rgb_aug = GeoGrid(cfg.width, cfg.height);
    Rng rng(derive_seed(derive_seed(cfg.seed, kNovelStream), i));
    LatentGrid z = rng.normal_like(targets[i]);
    for (int t = schedule.steps(); t >= 1; --t) {
      z = ddim_step(schedule, z, denoiser.predict_noise(z, ctx, t), t, t - 1);
    }
    out.push_back({z.clamped(0.0, 1.0), cams[i], ViewKind::kInput});
  }
  return out;
}

GaussianCloud augment_stage(const Dataset& data, const GaussianCloud& coarse,
                            const std::vector<SupervisedView>& extra, const RunConfig& cfg,
                            IterationLog* log) {
  SupervisionSet set = input_supervision(data);
  set.views.insert(set.views.end(), extra.begin(), extra.end());
  return optimize(coarse, set, cfg.loss, fit_config(cfg, data, cfg.refine_iterations, kRefineStream),
                  log);
}

ModelMetrics evaluate(const GaussianCloud& cloud, const Dataset& data) {
  ModelMetrics m;
  for (std::size_t i = 0; i < data.heldout_cameras.size(); ++i) {
    const Image r = render(cloud, data.heldout_cameras[i]).color;
    const Image& gt = data.heldout_images[i];
    ViewMetrics v{psnr(r, gt), ssim(r, gt), perceptual_surrogate(r, gt)};
    if (!std::isfinite(v.psnr) || !std::isfinite(v.ssim) || !std::isfinite(v.perceptual)) {
      throw NumericalError("evaluate: non-finite metric on held-out view " + std::to_string(i));
    }
    m.views.push_back(v);
    m.mean_psnr += v.psnr;
    m.mean_ssim += v.ssim;
    m.mean_perceptual += v.perceptual;
  }
  const double n = static_cast<double>(m.views.size());
  m.mean_psnr /= n;
  m.mean_ssim /= n;
  m.mean_perceptual /= n;
  return m;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json metrics_json(const ModelMetrics& m) {
  ordered_json j;
  j["mean_psnr"] = m.mean_psnr;
  j["mean_ssim"] = m.mean_ssim;
  j["mean_perceptual"] = m.mean_perceptual;
  j["views"] = ordered_json::array();
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    ordered_json v;
    v["view"] = i;
    v["psnr"] = m.views[i].psnr;
    v["ssim"] = m.views[i].ssim;
    v["perceptual"] = m.views[i].perceptual;
    j["views"].push_back(v);
  }
  return j;
}

ordered_json config_json(const std::vector<std::pair<std::string, std::string>>& entries) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : entries) j[k] = v;
  return j;
}

std::string config_text(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::string fmt(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_log(const std::filesystem::path& path, const IterationLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_iteration_log(out, log);
}

}  // namespace

std::string report_json(const RunReport& r, bool include_timing) {
  ordered_json j;
  j["schema"] = "gamo-report/1";
  j["strategy"] = std::string(strategy_name(r.strategy));
  j["denoiser"] = r.denoiser;
  j["input_hash"] = r.input_hash;
  j["config"] = config_json(r.config);
  j["points"] = {{"coarse", r.coarse_points}, {"final", r.final_points}};
  j["coarse"] = metrics_json(r.coarse);
  j["final"] = metrics_json(r.final);
  if (include_timing) {
    ordered_json t = ordered_json::object();
    for (const StageTime& s : r.timing) t[s.stage] = s.seconds;
    j["timing"] = t;
  }
  return j.dump(2) + "\n";
}

std::string report_summary(const RunReport& r) {
  std::ostringstream s;
  s << "strategy " << strategy_name(r.strategy) << ", denoiser " << r.denoiser << ", input hash "
    << r.input_hash << "\n";
  s << "held-out view    coarse PSNR  coarse SSIM   final PSNR   final SSIM\n";
  for (std::size_t i = 0; i < r.final.views.size(); ++i) {
    s << std::setw(13) << i << std::setw(13) << fmt(r.coarse.views[i].psnr, 3) << std::setw(13)
      << fmt(r.coarse.views[i].ssim, 4) << std::setw(13) << fmt(r.final.views[i].psnr, 3)
      << std::setw(13) << fmt(r.final.views[i].ssim, 4) << "\n";
  }
  s << std::setw(13) << "mean" << std::setw(13) << fmt(r.coarse.mean_psnr, 3) << std::setw(13)
    << fmt(r.coarse.mean_ssim, 4) << std::setw(13) << fmt(r.final.mean_psnr, 3) << std::setw(13)
    << fmt(r.final.mean_ssim, 4) << "\n";
  return s.str();
}

RunReport run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  const bool write = !cfg.output_dir.empty();
  const fs::path dir(cfg.output_dir);
  if (write) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StageError("setup", "cannot create " + cfg.output_dir + ": " + ec.message());
  }

  RunReport report;
  report.strategy = cfg.strategy;
  report.denoiser = cfg.strategy == Strategy::kCoarseOnly ? "none"
                    : cfg.strategy == Strategy::kNovelViewAugment
                        ? "noisy-oracle"
                        : std::string(denoiser_name(cfg.denoiser));
  report.config = run_config_entries(cfg);

  auto timed = [&](const std::string& stage, auto&& f) {
    const auto t0 = clock::now();
    auto result = run_stage(stage, f);
    report.timing.push_back({stage, std::chrono::duration<double>(clock::now() - t0).count()});
    return result;
  };

  const Dataset data = timed("scene", [&] { return make_dataset(cfg); });
  {
    std::ostringstream scene_text;
    write_scene(scene_text, data.scene);
    report.input_hash = git_blob_hash(config_text(report.config) + scene_text.str());
    if (write) {
      run_stage("write", [&] {
        write_text(dir / "scene.txt", scene_text.str());
        write_text(dir / "config.txt", config_text(report.config));
        save_cameras((dir / "cameras_input.txt").string(), data.input_cameras);
        save_cameras((dir / "cameras_heldout.txt").string(), data.heldout_cameras);
        for (std::size_t i = 0; i < data.input_images.size(); ++i) {
          save_ppm((dir / ("input_" + std::to_string(i) + ".ppm")).string(), data.input_images[i]);
        }
        return 0;
      });
    }
  }

  IterationLog coarse_log;
  const GaussianCloud init = timed("init", [&] { return initial_points(data, cfg); });
  const GaussianCloud coarse =
      timed("coarse", [&] { return fit_coarse(data, init, cfg, &coarse_log); });
  report.coarse_points = coarse.size();
  report.coarse = timed("eval_coarse", [&] { return evaluate(coarse, data); });

  GaussianCloud final_cloud = coarse;
  IterationLog refine_log;
  if (cfg.strategy == Strategy::kOutpaint) {
    const OutpaintStage op = timed("outpaint", [&] { return outpaint_stage(data, coarse, cfg); });
    std::vector<ReinitView> rv;
    for (const OutpaintedView& v : op.views) rv.push_back({v.image, v.camera, v.coarse});
    final_cloud = timed("refine", [&] { return refine_stage(data, coarse, rv, cfg, &refine_log); });
    if (write) {
      run_stage("write", [&] {
        std::vector<Camera> wide;
        for (std::size_t i = 0; i < op.views.size(); ++i) {
          save_ppm((dir / ("outpainted_" + std::to_string(i) + ".ppm")).string(), op.views[i].image);
          wide.push_back(op.views[i].camera);
        }
        save_cameras((dir / "cameras_wide.txt").string(), wide);
        return 0;
      });
    }
  } else if (cfg.strategy == Strategy::kNovelViewAugment) {
    const std::vector<SupervisedView> extra = timed("novel_views", [&] { return novel_views(data, cfg); });
    final_cloud = timed("refine", [&] { return augment_stage(data, coarse, extra, cfg, &refine_log); });
    if (write) {
      run_stage("write", [&] {
        for (std::size_t i = 0; i < extra.size(); ++i) {
          save_ppm((dir / ("novel_" + std::to_string(i) + ".ppm")).string(), extra[i].image);
        }
        return 0;
      });
    }
  }
  report.final_points = final_cloud.size();
  report.final = cfg.strategy == Strategy::kCoarseOnly
                     ? report.coarse
                     : timed("eval_final", [&] { return evaluate(final_cloud, data); });

  if (write) {
    run_stage("write", [&] {
      save_cloud((dir / "coarse.cloud").string(), coarse);
      write_log(dir / "coarse_log.txt", coarse_log);
      if (cfg.strategy != Strategy::kCoarseOnly) {
        save_cloud((dir / "refined.cloud").string(), final_cloud);
        write_log(dir / "refine_log.txt", refine_log);
      }
      for (std::size_t i = 0; i < data.heldout_cameras.size(); ++i) {
        const std::string n = std::to_string(i);
        save_ppm((dir / ("heldout_gt_" + n + ".ppm")).string(), data.heldout_images[i]);
        save_ppm((dir / ("heldout_coarse_" + n + ".ppm")).string(),
                 render(coarse, data.heldout_cameras[i]).color);
        save_ppm((dir / ("heldout_final_" + n + ".ppm")).string(),
                 render(final_cloud, data.heldout_cameras[i]).color);
      }
      write_text(dir / "summary.txt", report_summary(report));
      write_text(dir / "report.json", report_json(report));
      return 0;
    });
  }
  return report;
}

ComparisonReport compare_strategies(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  if (cfg.input_views < 2) throw ConfigError("config: compare needs at least 2 input views");
  if (seeds.empty()) throw ConfigError("config: compare needs at least one seed");
  ComparisonReport out;
  out.config = run_config_entries(cfg);
  for (std::uint64_t seed : seeds) {
    RunConfig c = cfg;
    c.seed = seed;
    c.output_dir.clear();
    c.debug = false;
    const Dataset data = run_stage("scene", [&] { return make_dataset(c); });
    const GaussianCloud init = run_stage("init", [&] { return initial_points(data, c); });
    const GaussianCloud coarse = run_stage("coarse", [&] { return fit_coarse(data, init, c); });

    SeedComparison sc;
    sc.seed = seed;
    sc.results.push_back({Strategy::kCoarseOnly, run_stage("eval_coarse", [&] { return evaluate(coarse, data); })});

    const OutpaintStage op = run_stage("outpaint", [&] { return outpaint_stage(data, coarse, c); });
    std::vector<ReinitView> rv;
    for (const OutpaintedView& v : op.views) rv.push_back({v.image, v.camera, v.coarse});
    const GaussianCloud refined = run_stage("refine", [&] { return refine_stage(data, coarse, rv, c); });
    sc.results.push_back({Strategy::kOutpaint, run_stage("eval_final", [&] { return evaluate(refined, data); })});

    const std::vector<SupervisedView> extra = run_stage("novel_views", [&] { return novel_views(data, c); });
    const GaussianCloud augmented =
        run_stage("refine", [&] { return augment_stage(data, coarse, extra, c); });
    sc.results.push_back(
        {Strategy::kNovelViewAugment, run_stage("eval_final", [&] { return evaluate(augmented, data); })});
    out.seeds.push_back(std::move(sc));
  }
  return out;
}

namespace {

constexpr const char* kComparisonNote =
    "novel views come from a noisy oracle (exact target plus per-view noise of scale rho in the "
    "noise prediction); it reproduces cross-view inconsistency, not a learned multi-view model";

}  // namespace

std::string comparison_json(const ComparisonReport& r) {
  ordered_json j;
  j["schema"] = "gamo-comparison/1";
  j["note"] = kComparisonNote;
  j["config"] = config_json(r.config);
  j["seeds"] = ordered_json::array();
  for (const SeedComparison& s : r.seeds) {
    ordered_json js;
    js["seed"] = s.seed;
    js["strategies"] = ordered_json::array();
    for (const StrategyResult& res : s.results) {
      ordered_json e;
      e["strategy"] = std::string(strategy_name(res.strategy));
      e["mean_psnr"] = res.metrics.mean_psnr;
      e["mean_ssim"] = res.metrics.mean_ssim;
      e["mean_perceptual"] = res.metrics.mean_perceptual;
      js["strategies"].push_back(e);
    }
    j["seeds"].push_back(js);
  }
  return j.dump(2) + "\n";
}

std::string comparison_summary(const ComparisonReport& r) {
  std::ostringstream s;
  s << "# " << kComparisonNote << "\n";
  s << "seed  strategy                  PSNR     SSIM  perceptual\n";
  for (const SeedComparison& sc : r.seeds) {
    for (const StrategyResult& res : sc.results) {
      s << std::left << std::setw(6) << sc.seed << std::setw(22) << strategy_name(res.strategy)
        << std::right << std::setw(9) << fmt(res.metrics.mean_psnr, 3) << std::setw(9)
        << fmt(res.metrics.mean_ssim, 4) << std::setw(12) << fmt(res.metrics.mean_perceptual, 4)
        << "\n";
    }
  }
  return s.str();
}

}  // namespace gamo
