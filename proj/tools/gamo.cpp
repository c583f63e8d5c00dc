// gamo command line: scene generation, rendering, the individual pipeline
// stages, full runs and the strategy comparison.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gamo/io.hpp"
#include "gamo/pipeline.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace gamo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// Options shared by every subcommand that builds a RunConfig.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::string out;
};

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

void add_config_options(CLI::App* cmd, ConfigOptions& o, bool out_required) {
  cmd->add_option("-c,--config", o.file, "key = value config file");
  cmd->add_option("--set", o.sets, "override, key=value (repeatable)");
  auto* out = cmd->add_option("-o,--out", o.out, "output directory");
  if (out_required) out->required();
  for (const std::string& key : run_config_keys()) {
    if (key == "output_dir") continue;
    cmd->add_option(flag_name(key), o.flags[key], "config key " + key);
  }
}

RunConfig build_config(const ConfigOptions& o) {
  KeyValueConfig kv;
  if (!o.file.empty()) kv = KeyValueConfig::load(o.file);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string t) {
      t.erase(0, t.find_first_not_of(" \t"));
      t.erase(t.find_last_not_of(" \t") + 1);
      return t;
    };
    kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  for (const auto& [key, value] : o.flags) {
    if (!value.empty()) kv.set(key, value);
  }
  if (!o.out.empty()) kv.set("output_dir", o.out);
  return run_config_from(kv);
}

fs::path out_dir(const RunConfig& cfg) {
  if (cfg.output_dir.empty()) throw ConfigError("an output directory (-o) is required");
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string view_file(const fs::path& dir, const std::string& stem, std::size_t i) {
  return (dir / (stem + "_" + std::to_string(i) + ".ppm")).string();
}

int cmd_coarse(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const Dataset data = stage("scene", [&] { return make_dataset(cfg); });
  IterationLog log;
  const GaussianCloud coarse = stage("coarse", [&] {
    return fit_coarse(data, initial_points(data, cfg), cfg, &log);
  });
  stage("write", [&] {
    save_scene((dir / "scene.txt").string(), data.scene);
    save_cameras((dir / "cameras_input.txt").string(), data.input_cameras);
    save_cameras((dir / "cameras_heldout.txt").string(), data.heldout_cameras);
    for (std::size_t i = 0; i < data.input_images.size(); ++i) {
      save_ppm(view_file(dir, "input", i), data.input_images[i]);
    }
    save_cloud((dir / "coarse.cloud").string(), coarse);
    std::ofstream l(dir / "coarse_log.txt");
    write_iteration_log(l, log);
    return 0;
  });
  std::cout << "coarse: " << coarse.size() << " gaussians -> " << (dir / "coarse.cloud").string() << "\n";
  return 0;
}

int cmd_outpaint(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const Dataset data = stage("scene", [&] { return make_dataset(cfg); });
  const GaussianCloud coarse = stage("load", [&] { return load_cloud((dir / "coarse.cloud").string()); });
  const OutpaintStage op = stage("outpaint", [&] { return outpaint_stage(data, coarse, cfg); });
  stage("write", [&] {
    std::vector<Camera> wide;
    for (std::size_t i = 0; i < op.views.size(); ++i) {
      save_ppm(view_file(dir, "outpainted", i), op.views[i].image);
      wide.push_back(op.views[i].camera);
    }
    save_cameras((dir / "cameras_wide.txt").string(), wide);
    return 0;
  });
  std::cout << "outpaint: " << op.views.size() << " views -> " << dir.string() << "\n";
  return 0;
}

int cmd_refine(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const Dataset data = stage("scene", [&] { return make_dataset(cfg); });
  std::vector<ReinitView> views;
  const GaussianCloud coarse = stage("load", [&] {
    const std::vector<Camera> wide = load_cameras((dir / "cameras_wide.txt").string());
    GaussianCloud c = load_cloud((dir / "coarse.cloud").string());
    for (std::size_t i = 0; i < wide.size(); ++i) {
      views.push_back({load_ppm(view_file(dir, "outpainted", i)), wide[i], render(c, wide[i])});
    }
    return c;
  });
  IterationLog log;
  const GaussianCloud refined = stage("refine", [&] { return refine_stage(data, coarse, views, cfg, &log); });
  stage("write", [&] {
    save_cloud((dir / "refined.cloud").string(), refined);
    std::ofstream l(dir / "refine_log.txt");
    write_iteration_log(l, log);
    return 0;
  });
  std::cout << "refine: " << refined.size() << " gaussians -> " << (dir / "refined.cloud").string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::string cloud_path) {
  const fs::path dir = out_dir(cfg);
  if (cloud_path.empty()) {
    cloud_path = fs::exists(dir / "refined.cloud") ? (dir / "refined.cloud").string()
                                                   : (dir / "coarse.cloud").string();
  }
  const Dataset data = stage("scene", [&] { return make_dataset(cfg); });
  const GaussianCloud cloud = stage("load", [&] { return load_cloud(cloud_path); });
  const ModelMetrics m = stage("eval", [&] { return evaluate(cloud, data); });
  nlohmann::ordered_json j;
  j["cloud"] = fs::path(cloud_path).filename().string();
  j["mean_psnr"] = m.mean_psnr;
  j["mean_ssim"] = m.mean_ssim;
  j["mean_perceptual"] = m.mean_perceptual;
  j["views"] = nlohmann::ordered_json::array();
  for (const ViewMetrics& v : m.views) {
    j["views"].push_back({{"psnr", v.psnr}, {"ssim", v.ssim}, {"perceptual", v.perceptual}});
  }
  stage("write", [&] {
    write_file(dir / "eval.json", j.dump(2) + "\n");
    return 0;
  });
  std::cout << "eval " << cloud_path << ": PSNR " << m.mean_psnr << " SSIM " << m.mean_ssim << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  const RunReport r = run_pipeline(cfg);
  std::cout << report_summary(r);
  return 0;
}

int cmd_compare(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds_in) {
  const std::vector<std::uint64_t> seeds = seeds_in.empty() ? std::vector<std::uint64_t>{cfg.seed} : seeds_in;
  const ComparisonReport r = compare_strategies(cfg, seeds);
  if (!cfg.output_dir.empty()) {
    const fs::path dir = out_dir(cfg);
    stage("write", [&] {
      write_file(dir / "comparison.json", comparison_json(r));
      write_file(dir / "comparison.txt", comparison_summary(r));
      return 0;
    });
  }
  std::cout << comparison_summary(r);
  return 0;
}

int cmd_scene(std::uint64_t seed, int complexity, const std::string& out) {
  Scene s;
  try {
    s = generate_scene(seed, complexity);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (out.empty()) {
    write_scene(std::cout, s);
  } else {
    stage("write", [&] {
      save_scene(out, s);
      return 0;
    });
  }
  return 0;
}

int cmd_render(const std::string& scene_path, const std::string& cams_path, const std::string& cloud_path,
               const std::string& out) {
  fs::create_directories(out);
  const std::vector<Camera> cams = stage("load", [&] { return load_cameras(cams_path); });
  if (!cloud_path.empty()) {
    const GaussianCloud cloud = stage("load", [&] { return load_cloud(cloud_path); });
    for (std::size_t i = 0; i < cams.size(); ++i) {
      stage("render", [&] {
        save_ppm(view_file(out, "render", i), render(cloud, cams[i]).color);
        return 0;
      });
    }
  } else {
    if (scene_path.empty()) throw ConfigError("render needs --scene or --cloud");
    const Scene scene = stage("load", [&] { return load_scene(scene_path); });
    for (std::size_t i = 0; i < cams.size(); ++i) {
      stage("render", [&] {
        save_ppm(view_file(out, "render", i), gt_render(scene, cams[i]).color);
        return 0;
      });
    }
  }
  std::cout << "render: " << cams.size() << " views -> " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-aware outpainting for sparse-view splat reconstruction"};
  app.require_subcommand(1);

  std::uint64_t scene_seed = 0;
  int scene_complexity = 8;
  std::string scene_out;
  auto* scene = app.add_subcommand("scene", "write a procedural scene file");
  scene->add_option("--seed", scene_seed, "scene seed");
  scene->add_option("--complexity", scene_complexity, "primitive count: 3, 8 or 20");
  scene->add_option("-o,--out", scene_out, "output file (default stdout)");

  std::string render_scene, render_cams, render_cloud, render_out;
  auto* rnd = app.add_subcommand("render", "render a scene or a cloud through a camera file");
  rnd->add_option("--scene", render_scene, "scene file (ground-truth ray casting)");
  rnd->add_option("--cameras", render_cams, "camera file")->required();
  rnd->add_option("--cloud", render_cloud, "Gaussian cloud file (splatting instead of ray casting)");
  rnd->add_option("-o,--out", render_out, "output directory")->required();

  ConfigOptions o_coarse, o_outpaint, o_refine, o_eval, o_run, o_compare;
  auto* coarse = app.add_subcommand("coarse", "fit the coarse model to the input views");
  add_config_options(coarse, o_coarse, true);
  auto* outpaint = app.add_subcommand("outpaint", "outpaint widened views from coarse.cloud");
  add_config_options(outpaint, o_outpaint, true);
  auto* refine = app.add_subcommand("refine", "re-initialize and refine with outpainted views");
  add_config_options(refine, o_refine, true);
  auto* eval = app.add_subcommand("eval", "evaluate a cloud on the held-out views");
  add_config_options(eval, o_eval, true);
  std::string eval_cloud;
  eval->add_option("--cloud", eval_cloud, "cloud file (default: refined.cloud, else coarse.cloud)");
  auto* run = app.add_subcommand("run", "full pipeline with report");
  add_config_options(run, o_run, false);
  auto* compare = app.add_subcommand("compare", "coarse-only vs outpaint vs novel-view-augment");
  add_config_options(compare, o_compare, false);
  std::vector<std::uint64_t> compare_seeds;
  compare->add_option("--seeds", compare_seeds, "seeds to compare (default: the config seed)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*scene) return cmd_scene(scene_seed, scene_complexity, scene_out);
    if (*rnd) return cmd_render(render_scene, render_cams, render_cloud, render_out);
    if (*coarse) return cmd_coarse(build_config(o_coarse));
    if (*outpaint) return cmd_outpaint(build_config(o_outpaint));
    if (*refine) return cmd_refine(build_config(o_refine));
    if (*eval) return cmd_eval(build_config(o_eval), eval_cloud);
    if (*run) return cmd_run(build_config(o_run));
    if (*compare) return cmd_compare(build_config(o_compare), compare_seeds);
  } catch (const ConfigError& e) {
    std::cerr << "gamo: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "gamo: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gamo: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
