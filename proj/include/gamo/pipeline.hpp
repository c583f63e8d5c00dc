#pragma once

// End-to-end orchestration: procedural scene, sparse input views, coarse fit,
// outpainting, refinement and held-out evaluation, plus the strategy
// comparison and machine-readable reports.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gamo/camera.hpp"
#include "gamo/error.hpp"
#include "gamo/fit.hpp"
#include "gamo/image.hpp"
#include "gamo/io.hpp"
#include "gamo/outpaint.hpp"
#include "gamo/scenegen.hpp"
#include "gamo/splat.hpp"

namespace gamo {

// Bad configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage failed (CLI exit code 3). what() is prefixed with the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class Strategy { kCoarseOnly, kOutpaint, kNovelViewAugment };
enum class DenoiserKind { kOracle, kNoisyOracle, kSmoothPrior };
enum class RefineInit { kUnion, kReinit };

std::string_view strategy_name(Strategy s);
std::string_view denoiser_name(DenoiserKind d);

struct RunConfig {
  std::uint64_t seed = 0;  // every random draw of a run derives from this
  int complexity = 8;
  int input_views = 3;
  int heldout_views = 3;
  int width = 64;
  int height = 48;
  bool paper_mode = false;      // paper resolution and iteration counts; sizes multiple of 64
  double focal = 0.8;           // input focal length, in image widths
  double arc_span_deg = 70.0;
  double heldout_phase = 0.25;  // held-out arc offset, in input spacings
  double init_noise = 0.01;     // point jitter, fraction of the largest scene extent
  int init_stride = 4;
  GamoConfig gamo;
  int coarse_iterations = 2000;
  int refine_iterations = 1500;
  LearningRates lr;             // lr.mu is per unit of scene extent
  LossWeights loss;
  int reinit_stride = 4;
  RefineInit refine_init = RefineInit::kUnion;
  Strategy strategy = Strategy::kOutpaint;
  DenoiserKind denoiser = DenoiserKind::kSmoothPrior;
  double rho = 0.0;             // noisy-oracle perturbation
  std::string output_dir;       // empty: nothing is written
  bool debug = false;           // per-view outpainting artifacts under output_dir/debug

  void validate() const;
};

// Keys accepted by the config file and the CLI, in report order.
const std::vector<std::string>& run_config_keys();

// Applies `key = value` entries on top of the defaults (paper-mode defaults
// when paper_mode is set). Unknown keys and bad values throw ConfigError.
RunConfig run_config_from(const KeyValueConfig& kv);

// Canonical echo of every key except output_dir, in run_config_keys() order.
std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& cfg);

// Git blob hash (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(std::string_view content);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Dataset {
  Scene scene;
  std::vector<Camera> input_cameras;    // narrow FOV
  std::vector<Image> input_images;
  std::vector<Camera> heldout_cameras;  // wide FOV
  std::vector<Image> heldout_images;
};

Dataset make_dataset(const RunConfig& cfg);
double scene_extent(const Scene& scene);

GaussianCloud initial_points(const Dataset& data, const RunConfig& cfg);
GaussianCloud fit_coarse(const Dataset& data, const GaussianCloud& init, const RunConfig& cfg,
                         IterationLog* log = nullptr);

// Pastes `input`, area-downsampled by s_k, into the center of `outpainted`
// with a cosine ramp `feather` pixels wide inside the pasted region.
Image paste_center(const Image& outpainted, const Image& input, double s_k, int feather = 4);

struct OutpaintStage {
  std::vector<OutpaintedView> views;  // image already center-pasted
};

OutpaintStage outpaint_stage(const Dataset& data, const GaussianCloud& coarse, const RunConfig& cfg);

// Re-initialization plus refinement with input and outpainted supervision.
GaussianCloud refine_stage(const Dataset& data, const GaussianCloud& coarse,
                           std::span<const ReinitView> outpainted, const RunConfig& cfg,
                           IterationLog* log = nullptr);

// Interpolated-pose views between consecutive inputs, sampled by plain DDIM
// with a noisy oracle at cfg.rho.
std::vector<SupervisedView> novel_views(const Dataset& data, const RunConfig& cfg);
GaussianCloud augment_stage(const Dataset& data, const GaussianCloud& coarse,
                            const std::vector<SupervisedView>& extra, const RunConfig& cfg,
                            IterationLog* log = nullptr);

struct ViewMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
};

struct ModelMetrics {
  std::vector<ViewMetrics> views;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_perceptual = 0.0;
};

ModelMetrics evaluate(const GaussianCloud& cloud, const Dataset& data);

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  Strategy strategy = Strategy::kOutpaint;
  std::string denoiser;
  std::vector<std::pair<std::string, std::string>> config;
  std::string input_hash;
  std::size_t coarse_points = 0;
  std::size_t final_points = 0;
  ModelMetrics coarse;
  ModelMetrics final;  // equals `coarse` for the coarse-only strategy
  std::vector<StageTime> timing;
};

// Fixed key order; timing goes last under "timing" and is dropped when
// include_timing is false.
std::string report_json(const RunReport& report, bool include_timing = true);
std::string report_summary(const RunReport& report);

// Runs every stage for cfg.strategy; writes artifacts when output_dir is set.
RunReport run_pipeline(const RunConfig& cfg);

struct StrategyResult {
  Strategy strategy = Strategy::kCoarseOnly;
  ModelMetrics metrics;
};

struct SeedComparison {
  std::uint64_t seed = 0;
  std::vector<StrategyResult> results;  // coarse-only, outpaint, novel-view-augment
};

struct ComparisonReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<SeedComparison> seeds;
};

// All three strategies per seed, sharing the coarse model within a seed.
ComparisonReport compare_strategies(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds);
std::string comparison_json(const ComparisonReport& report);
std::string comparison_summary(const ComparisonReport& report);

}  // namespace gamo
