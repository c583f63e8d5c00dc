#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gamo/pipeline.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace gamo;
namespace fs = std::filesystem;

namespace {

RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return run_config_from(KeyValueConfig::parse(in));
}

// Tiny but complete run: every stage executes in a few seconds.
RunConfig tiny_config() {
  return parse_config(
      "complexity = 3\nwidth = 32\nheight = 24\ncoarse_iterations = 40\n"
      "refine_iterations = 30\nsteps = 10\nresample = 1\nheldout_views = 2\n");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gamo_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(GAMO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing, echo and errors") {
  const RunConfig d = parse_config("");
  CHECK(d.width == 64);
  CHECK(d.gamo.s_k == 0.6);
  CHECK(d.strategy == Strategy::kOutpaint);
  const RunConfig c = parse_config(
      "seed = 7\nblend_fractions = 0.8, 0.4\nmask_mode = soft\nstrategy = coarse-only\n"
      "denoiser = noisy-oracle\nrho = 0.25\nblending = off\n");
  CHECK(c.seed == 7);
  CHECK(c.gamo.blend_fractions == std::vector<double>{0.8, 0.4});
  CHECK(c.gamo.mode == MaskMode::kSoft);
  CHECK(c.strategy == Strategy::kCoarseOnly);
  CHECK(c.denoiser == DenoiserKind::kNoisyOracle);
  CHECK_FALSE(c.gamo.blending);

  // the echo parses back to the same configuration
  std::string text;
  for (const auto& [k, v] : run_config_entries(c)) text += k + " = " + v + "\n";
  std::string again;
  for (const auto& [k, v] : run_config_entries(parse_config(text))) again += k + " = " + v + "\n";
  CHECK(again == text);
  CHECK(run_config_entries(c).size() + 1 == run_config_keys().size());

  CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("width = 33\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("complexity = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("s_k = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("blend_fractions = 0.3, 0.7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("debug = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("strategy = novel-view-augment\ninput_views = 1\n"), ConfigError);
}

TEST_CASE("paper mode switches resolution and iteration defaults") {
  const RunConfig p = parse_config("paper_mode = true\n");
  CHECK(p.width == 512);
  CHECK(p.height == 384);
  CHECK(p.coarse_iterations == 10000);
  CHECK(p.refine_iterations == 3000);
  CHECK(parse_config("paper_mode = true\ninput_views = 6\n").refine_iterations == 7000);
  CHECK(parse_config("paper_mode = true\nrefine_iterations = 5\n").refine_iterations == 5);
  CHECK_THROWS_AS(parse_config("paper_mode = true\nwidth = 500\n"), ConfigError);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("derived seeds differ per stream and repeat per input") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("paste_center writes the downsampled input with a feathered edge") {
  const Image base(32, 24, 3, 0.0);
  const Image input(32, 24, 3, 1.0);
  const Image out = paste_center(base, input, 0.6, 4);
  const CenterRegion r = center_region(32, 24, 0.6);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(r.x0 - 1, 12) == 0.0);
  // first pasted column is d = 0.5 into the ramp
  CHECK(out.at(r.x0, 12) == doctest::Approx(0.5 - 0.5 * std::cos(std::numbers::pi * 0.5 / 4)));
  CHECK(out.at(16, 12) == 1.0);
  for (int x = r.x0; x < r.x0 + r.width - 1; ++x)
    if (x < 16) CHECK(out.at(x, 12) <= out.at(x + 1, 12));
  const Image hard = paste_center(base, input, 0.6, 0);
  CHECK(hard.at(r.x0, r.y0) == 1.0);
  CHECK_THROWS_AS(paste_center(base, Image(30, 24, 3), 0.6), ShapeError);
}

TEST_CASE("dataset layout: narrow inputs, wide held-out views") {
  const RunConfig cfg = tiny_config();
  const Dataset d = make_dataset(cfg);
  REQUIRE(d.input_cameras.size() == 3);
  REQUIRE(d.heldout_cameras.size() == 2);
  CHECK(d.heldout_cameras[0].intrinsics.fx == doctest::Approx(cfg.gamo.s_k * d.input_cameras[0].intrinsics.fx));
  CHECK(d.input_images[0].width() == 32);
  CHECK(scene_extent(d.scene) > 0.0);
  CHECK(make_dataset(cfg).input_images[1] == d.input_images[1]);
}

TEST_CASE("small runs are deterministic and write every artifact") {
  RunConfig cfg = tiny_config();
  const fs::path da = scratch("run_a"), db = scratch("run_b");
  cfg.output_dir = da.string();
  const RunReport a = run_pipeline(cfg);
  cfg.output_dir = db.string();
  const RunReport b = run_pipeline(cfg);
  CHECK(report_json(a, false) == report_json(b, false));
  for (const char* f : {"scene.txt", "config.txt", "cameras_input.txt", "cameras_heldout.txt", "cameras_wide.txt",
                        "input_0.ppm", "outpainted_0.ppm", "coarse.cloud", "refined.cloud", "coarse_log.txt",
                        "refine_log.txt", "heldout_gt_1.ppm", "heldout_final_1.ppm", "summary.txt", "report.json"}) {
    CAPTURE(std::string(f));
    CHECK(fs::exists(da / f));
    if (std::string(f) != "report.json") CHECK(slurp(da / f) == slurp(db / f));
  }
  auto j = nlohmann::json::parse(slurp(da / "report.json"));
  auto k = nlohmann::json::parse(slurp(db / "report.json"));
  j.erase("timing");
  k.erase("timing");
  CHECK(j == k);
  CHECK(j["schema"] == "gamo-report/1");
  CHECK(j["strategy"] == "outpaint");
  CHECK(j["final"]["views"].size() == 2);
  CHECK(j["input_hash"].get<std::string>().size() == 40);
  // log lines are `iter kind loss psnr`
  std::istringstream log(slurp(da / "refine_log.txt"));
  int iter;
  std::string kind;
  double loss, psnr;
  REQUIRE(static_cast<bool>(log >> iter >> kind >> loss >> psnr));
  CHECK(iter == 0);
  CHECK(kind == "input");
  REQUIRE(static_cast<bool>(log >> iter >> kind));
  CHECK(kind == "outpainted");
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("coarse-only runs report the coarse model as final") {
  RunConfig cfg = tiny_config();
  cfg.strategy = Strategy::kCoarseOnly;
  const RunReport r = run_pipeline(cfg);
  CHECK(r.final.mean_psnr == r.coarse.mean_psnr);
  CHECK(r.final_points == r.coarse_points);
  CHECK(r.denoiser == "none");
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(cli("--help") == 0);
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("run --complexity 5") == 2);
  CHECK(cli("run --set nonsense=1") == 2);
  CHECK(cli("run -c /nonexistent/config.txt") == 2);
  CHECK(cli("scene --complexity 4") == 2);
  CHECK(cli("scene --seed 3 --complexity 3 -o " + (dir.string() + ".scene")) == 0);
  CHECK(fs::exists(dir.string() + ".scene"));
  // the output directory cannot be created under a regular file
  CHECK(cli("run --complexity 3 --width 32 --height 24 -o " + dir.string() + ".scene/sub") == 3);
  CHECK(cli("render --cameras /nonexistent/cams.txt --scene x -o " + dir.string()) == 3);
  fs::remove(dir.string() + ".scene");
  fs::remove_all(dir);
}

TEST_CASE("CLI stage commands chain through the output directory") {
  const fs::path dir = scratch("stages");
  const std::string common = " --complexity 3 --width 32 --height 24 --coarse-iterations 20 "
                             "--refine-iterations 10 --steps 6 --resample 1 --heldout-views 2 -o " + dir.string();
  CHECK(cli("coarse" + common) == 0);
  CHECK(fs::exists(dir / "coarse.cloud"));
  CHECK(cli("outpaint" + common) == 0);
  CHECK(fs::exists(dir / "outpainted_2.ppm"));
  CHECK(cli("refine" + common) == 0);
  CHECK(fs::exists(dir / "refined.cloud"));
  CHECK(cli("eval" + common) == 0);
  CHECK(cli("render --cameras " + (dir / "cameras_heldout.txt").string() + " --cloud " +
            (dir / "refined.cloud").string() + " -o " + (dir / "renders").string()) == 0);
  CHECK(fs::exists(dir / "renders" / "render_1.ppm"));
  fs::remove_all(dir);
  // refine without a coarse model is a stage failure
  CHECK(cli("refine" + common) == 3);
  fs::remove_all(dir);
}

}
