// warprf command-line tool: renders analytic/voxel scenes, computes warping
// uncertainty, evaluates AUSE and image/depth/cloud metrics, and drives the
// active view-selection loop. Every run writes its outputs plus a summary
// (with per-file checksums) under one output directory.
//
// Exit codes: 0 success, 1 runtime failure (single-line "error: ..." on
// stderr), 2 usage error.

#include "warprf/warprf.hpp"
#include "warprf/selftest.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace warprf;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--threads", opts.threads, "worker threads for rendering")
      ->check(CLI::PositiveNumber);
}

/// Output directory precedence: WARPRF_OUT env (CI override) > --out > config.
std::string resolve_out_dir(const CommonOpts& opts, const std::string& config_out) {
  if (const char* env = std::getenv("WARPRF_OUT"); env && *env) return env;
  if (!opts.out_dir.empty()) return opts.out_dir;
  return config_out.empty() ? "out" : config_out;
}

ExperimentConfig load(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a_bytes(config_to_json(cfg).dump());
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

SelectionPolicy policy_from_name(const std::string& name, const SelectionPolicy& base) {
  SelectionPolicy p = base;
  if (name == "warprf_image") p.kind = SelectionPolicy::Kind::warprf_image;
  else if (name == "warprf_depth") p.kind = SelectionPolicy::Kind::warprf_depth;
  else if (name == "random") p.kind = SelectionPolicy::Kind::random;
  else if (name == "farthest") p.kind = SelectionPolicy::Kind::farthest;
  else throw std::invalid_argument("unknown policy '" + name + "'");
  return p;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int cmd_render(const CommonOpts& opts, const std::string& set_name, const std::string& only_id,
               bool float_depth_only) {
  Stopwatch watch;
  ExperimentConfig cfg = load(opts);
  ResultBundle bundle(resolve_out_dir(opts, cfg.out_dir));
  auto backend = make_backend(cfg, opts.threads);
  const auto* degraded = dynamic_cast<const DegradedOracleBackend*>(backend.get());
  int rendered = 0;
  for (const View& v : make_views(cfg, set_name)) {
    if (!only_id.empty() && v.id != only_id) continue;
    RenderOutput r;
    if (degraded) {
      DegradedRender d = degraded->render_with_error(v);
      r.image = std::move(d.image);
      r.depth = std::move(d.depth);
      write_pfm(bundle.path_of(v.id + "_error.pfm"), d.true_error);
      bundle.record_file(v.id + "_error.pfm");
    } else {
      r = backend->render(v);
    }
    if (!float_depth_only) {
      write_ppm(bundle.path_of(v.id + "_image.ppm"), r.image);
      bundle.record_file(v.id + "_image.ppm");
    }
    write_pfm(bundle.path_of(v.id + "_depth.pfm"), r.depth);
    bundle.record_file(v.id + "_depth.pfm");
    ++rendered;
  }
  require(rendered > 0, "render: no view matched set '" + set_name + "'" +
                            (only_id.empty() ? "" : " and id '" + only_id + "'"));
  bundle.write_summary(config_hash(cfg), cfg.seed, watch.seconds());
  std::cout << "rendered " << rendered << " view(s) to " << bundle.out_dir() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// uncertainty
// ---------------------------------------------------------------------------

int cmd_uncertainty(const CommonOpts& opts, std::string mode) {
  Stopwatch watch;
  ExperimentConfig cfg = load(opts);
  if (mode.empty()) mode = cfg.uncertainty.mode;
  require(mode == "pixel" || mode == "image", "uncertainty: mode must be 'pixel' or 'image'");
  ResultBundle bundle(resolve_out_dir(opts, cfg.out_dir));
  auto backend = make_backend(cfg, opts.threads);
  std::vector<View> sources = make_views(cfg, cfg.uncertainty.sources);
  std::vector<View> targets = make_views(cfg, cfg.uncertainty.targets);
  if (mode == "pixel") {
    for (const View& t : targets) {
      std::vector<View> src = nearest_sources(sources, t, cfg.uncertainty.nearest_k);
      UncertaintyMap u = pixel_uncertainty(*backend, src, t);
      write_pfm(bundle.path_of("unc_" + t.id + ".pfm"), u.map);
      bundle.record_file("unc_" + t.id + ".pfm");
    }
    std::cout << "wrote " << targets.size() << " uncertainty map(s) to " << bundle.out_dir()
              << "\n";
  } else {
    std::vector<ViewScore> scores;
    for (const View& t : targets) {
      std::vector<View> src = nearest_sources(sources, t, cfg.uncertainty.nearest_k);
      scores.push_back(image_uncertainty(*backend, src, t, cfg.uncertainty.penalty));
    }
    bundle.write_text("scores.csv", scores_csv(scores));
    for (const auto& s : scores)
      std::cout << s.view_id << " " << fmt_double(s.score) << "\n";
  }
  bundle.write_summary(config_hash(cfg), cfg.seed, watch.seconds());
  return 0;
}

// ---------------------------------------------------------------------------
// ause
// ---------------------------------------------------------------------------

int cmd_ause(const CommonOpts& opts, const std::string& unc_path, const std::string& err_path,
             const std::string& mask_path, int bins) {
  Stopwatch watch;
  ScalarMap u = read_pfm(unc_path);
  ScalarMap e = read_pfm(err_path);
  require(u.width == e.width && u.height == e.height, "ause: map resolutions differ");
  std::vector<std::uint8_t> mask(u.size());
  for (size_t i = 0; i < mask.size(); ++i) mask[i] = (u.valid[i] && e.valid[i]) ? 1 : 0;
  if (!mask_path.empty()) {
    ScalarMap m = read_pfm(mask_path);
    require(m.width == u.width && m.height == u.height, "ause: mask resolution differs");
    for (size_t i = 0; i < mask.size(); ++i)
      mask[i] = (mask[i] && m.valid[i] && m.values[i] != 0.0) ? 1 : 0;
  }
  double value = ause(u.values, e.values, mask, bins);
  SparsificationCurve curve = sparsification(u.values, e.values, mask, bins);

  std::string out_dir = resolve_out_dir(opts, "out");
  ResultBundle bundle(out_dir);
  bundle.write_text("sparsification_curve.csv", curve_csv(curve));
  nlohmann::json j{{"ause", value}, {"bins", bins}, {"normalization", curve.normalization}};
  bundle.write_text("ause.json", j.dump(2) + "\n");
  bundle.write_summary(fnv1a_bytes(unc_path + "|" + err_path), opts.seed.value_or(0),
                       watch.seconds());
  std::printf("%.10f\n", value);
  return 0;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

int cmd_select(const CommonOpts& opts, const std::string& policy_name) {
  Stopwatch watch;
  ExperimentConfig cfg = load(opts);
  ResultBundle bundle(resolve_out_dir(opts, cfg.out_dir));
  auto backend = make_backend(cfg, opts.threads);
  SelectionPolicy policy = cfg.policy;
  if (!policy_name.empty()) policy = policy_from_name(policy_name, cfg.policy);
  if (policy.kind == SelectionPolicy::Kind::random && policy.seed == 0) policy.seed = cfg.seed;
  std::vector<View> train = make_views(cfg, "train");
  std::vector<View> pool = make_views(cfg, "pool");
  std::vector<ViewScore> scores = score_candidates(*backend, train, pool, policy);
  std::string picked = select_next(scores);
  bundle.write_text("scores.csv", scores_csv(scores));
  bundle.write_summary(config_hash(cfg), cfg.seed, watch.seconds());
  std::cout << "selected " << picked << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// active-loop
// ---------------------------------------------------------------------------

int cmd_active_loop(const CommonOpts& opts, const std::string& policy_name, int rounds_override) {
  Stopwatch watch;
  ExperimentConfig cfg = load(opts);
  ResultBundle bundle(resolve_out_dir(opts, cfg.out_dir));
  SelectionPolicy policy = cfg.policy;
  if (!policy_name.empty()) policy = policy_from_name(policy_name, cfg.policy);
  if (policy.kind == SelectionPolicy::Kind::random && policy.seed == 0) policy.seed = cfg.seed;
  LoopConfig lc = make_loop_config(cfg);
  if (rounds_override > 0) lc.rounds = rounds_override;
  lc.seed = cfg.seed;
  auto gt_backend = make_gt_backend(cfg, opts.threads);
  BackendFactory factory = [&cfg, &opts] { return make_backend(cfg, opts.threads); };
  LoopResult result = run_active_loop(factory, *gt_backend, lc, policy);
  bundle.write_text("rounds.csv", rounds_csv(result.records));
  bundle.write_text("rounds.jsonl", rounds_jsonl(result.records));
  bundle.write_text("selected_poses.csv", poses_csv(result.selected_views));
  bundle.write_summary(config_hash(cfg), cfg.seed, watch.seconds());
  for (const auto& rec : result.records) {
    std::cout << "round " << rec.round << ": " << rec.selected_view << " score "
              << fmt_double(rec.selected_score) << "\n";
  }
  if (!result.completed) {
    std::cerr << "error: active-loop: " << result.message << "\n";
    return 1;
  }
  std::cout << "completed " << result.records.size() << " round(s), outputs in "
            << bundle.out_dir() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

int cmd_metrics(const CommonOpts& opts, const std::string& image_a, const std::string& image_b,
                const std::string& depth_a, const std::string& depth_b,
                const std::string& cloud_a, const std::string& cloud_b, double threshold) {
  Stopwatch watch;
  nlohmann::json j;
  if (!image_a.empty() || !image_b.empty()) {
    require(!image_a.empty() && !image_b.empty(), "metrics: need both --image-a and --image-b");
    ImageBuffer a = read_ppm(image_a);
    ImageBuffer b = read_ppm(image_b);
    j["psnr"] = psnr(a, b);
    j["ssim"] = ssim(a, b);
  }
  if (!depth_a.empty() || !depth_b.empty()) {
    require(!depth_a.empty() && !depth_b.empty(), "metrics: need both --depth-a and --depth-b");
    j["depth_mae"] = depth_mae(read_pfm(depth_a), read_pfm(depth_b));
  }
  if (!cloud_a.empty() || !cloud_b.empty()) {
    require(!cloud_a.empty() && !cloud_b.empty(), "metrics: need both --cloud-a and --cloud-b");
    CloudMetrics cm = cloud_metrics(read_xyz(cloud_a), read_xyz(cloud_b), threshold);
    j["cloud_acc"] = cm.acc;
    j["cloud_comp"] = cm.comp;
    j["cloud_cr"] = cm.cr;
    j["cloud_f1"] = cm.f1;
  }
  require(!j.empty(), "metrics: nothing to compare; pass image/depth/cloud pairs");
  ResultBundle bundle(resolve_out_dir(opts, "out"));
  bundle.write_text("metrics.json", j.dump(2) + "\n");
  bundle.write_summary(0, opts.seed.value_or(0), watch.seconds());
  for (auto it = j.begin(); it != j.end(); ++it)
    std::cout << it.key() << " " << fmt_double(it.value().get<double>()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warprf: multi-view-consistency uncertainty for radiance fields"};
  app.require_subcommand(1);

  CommonOpts render_opts, unc_opts, ause_opts, select_opts, loop_opts, metrics_opts;

  auto* render = app.add_subcommand("render", "render views of a scene to image/depth files");
  add_common(render, render_opts);
  std::string render_set = "eval", render_id;
  bool depth_only = false;
  render->add_option("--set", render_set, "view set to render (train|pool|eval)");
  render->add_option("--id", render_id, "render just this view id");
  render->add_flag("--depth-only", depth_only, "skip PPM image output");

  auto* unc = app.add_subcommand("uncertainty", "warping uncertainty (pixel maps or view scores)");
  add_common(unc, unc_opts);
  std::string unc_mode;
  unc->add_option("--mode", unc_mode, "pixel | image (default from config)");

  auto* ause_cmd = app.add_subcommand("ause", "sparsification curve + AUSE from PFM maps");
  add_common(ause_cmd, ause_opts, /*config_required=*/false);
  std::string ause_unc, ause_err, ause_mask;
  int ause_bins = 100;
  ause_cmd->add_option("--uncertainty", ause_unc, "uncertainty PFM")->required();
  ause_cmd->add_option("--error", ause_err, "true-error PFM")->required();
  ause_cmd->add_option("--mask", ause_mask, "optional mask PFM (nonzero = keep)");
  ause_cmd->add_option("--bins", ause_bins, "sparsification bins")->check(CLI::Range(2, 100000));

  auto* select = app.add_subcommand("select", "one-shot candidate scoring and selection");
  add_common(select, select_opts);
  std::string select_policy;
  select->add_option("--policy", select_policy, "override policy kind");

  auto* loop = app.add_subcommand("active-loop", "greedy active view selection loop");
  add_common(loop, loop_opts);
  std::string loop_policy;
  int loop_rounds = 0;
  loop->add_option("--policy", loop_policy, "override policy kind");
  loop->add_option("--rounds", loop_rounds, "override round count");

  auto* metrics = app.add_subcommand("metrics", "pairwise image/depth/cloud metrics from files");
  add_common(metrics, metrics_opts, /*config_required=*/false);
  std::string image_a, image_b, depth_a, depth_b, cloud_a, cloud_b;
  double threshold = 0.05;
  metrics->add_option("--image-a", image_a, "PPM image");
  metrics->add_option("--image-b", image_b, "PPM image");
  metrics->add_option("--depth-a", depth_a, "PFM depth");
  metrics->add_option("--depth-b", depth_b, "PFM depth");
  metrics->add_option("--cloud-a", cloud_a, "XYZ cloud (prediction)");
  metrics->add_option("--cloud-b", cloud_b, "XYZ cloud (ground truth)");
  metrics->add_option("--threshold", threshold, "cloud CR/F1 distance threshold (m)");

  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (render->parsed()) return cmd_render(render_opts, render_set, render_id, depth_only);
    if (unc->parsed()) return cmd_uncertainty(unc_opts, unc_mode);
    if (ause_cmd->parsed())
      return cmd_ause(ause_opts, ause_unc, ause_err, ause_mask, ause_bins);
    if (select->parsed()) return cmd_select(select_opts, select_policy);
    if (loop->parsed()) return cmd_active_loop(loop_opts, loop_policy, loop_rounds);
    if (metrics->parsed())
      return cmd_metrics(metrics_opts, image_a, image_b, depth_a, depth_b, cloud_a, cloud_b,
                         threshold);
    if (selftest->parsed()) return warprf::selftest::run_all(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
