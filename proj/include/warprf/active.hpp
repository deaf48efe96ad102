#pragma once

// Greedy active view selection and the active mapping loop: score a candidate
// pool by uncertainty (or a baseline), pick the argmax, optionally refine its
// pose locally, add it to the training set with its ground-truth image, refit
// the backend, and repeat while logging held-out metrics per round.

#include "warprf/backend.hpp"
#include "warprf/camera.hpp"
#include "warprf/cloud.hpp"
#include "warprf/core.hpp"
#include "warprf/metrics.hpp"
#include "warprf/rng.hpp"
#include "warprf/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace warprf {

struct SelectionPolicy {
  enum class Kind { warprf_image, warprf_depth, random, farthest };
  Kind kind = Kind::warprf_image;
  std::uint64_t seed = 0;                      // random kind only
  double penalty = kDefaultUncoveredPenalty;   // warprf_image uncovered-pixel charge
  int nearest_k = 0;                           // 0 = use all sources
};

inline const char* to_string(SelectionPolicy::Kind k) {
  switch (k) {
    case SelectionPolicy::Kind::warprf_image: return "warprf_image";
    case SelectionPolicy::Kind::warprf_depth: return "warprf_depth";
    case SelectionPolicy::Kind::random: return "random";
    case SelectionPolicy::Kind::farthest: return "farthest";
  }
  return "?";
}

/// Scores every candidate under the policy. warprf_image is the image-level
/// min-reprojection score; warprf_depth sums the valid pixel-wise depth
/// uncertainties; random draws stable per-id pseudo-scores; farthest scores by
/// the minimum camera-center distance to the training set. Source renders are
/// deterministic, so they are rendered once and shared across candidates;
/// per-candidate results are identical to the single-target estimators.
inline std::vector<ViewScore> score_candidates(const RenderingBackend& backend,
                                               const std::vector<View>& train_views,
                                               const std::vector<View>& candidates,
                                               const SelectionPolicy& policy) {
  require(!candidates.empty(), "score_candidates: empty candidate pool");
  if (policy.kind != SelectionPolicy::Kind::random) {
    require(!train_views.empty(), "score_candidates: this policy needs training views");
  }
  const bool warps_images = policy.kind == SelectionPolicy::Kind::warprf_image;
  const bool warps_depths = policy.kind == SelectionPolicy::Kind::warprf_depth;
  std::vector<RenderOutput> source_renders;
  if (warps_images || warps_depths) {
    require(backend.can_render_depth() && (!warps_images || backend.can_render_image()),
            "score_candidates: backend cannot render what the policy warps");
    source_renders.reserve(train_views.size());
    for (const View& s : train_views) source_renders.push_back(backend.render(s));
  }
  auto source_subset = [&](const View& cand) {
    std::vector<size_t> order(train_views.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (policy.nearest_k > 0 && static_cast<size_t>(policy.nearest_k) < order.size()) {
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return camera_center_distance(train_views[a].pose, cand.pose) <
               camera_center_distance(train_views[b].pose, cand.pose);
      });
      order.resize(policy.nearest_k);
    }
    return order;
  };

  std::vector<ViewScore> out;
  out.reserve(candidates.size());
  for (const View& cand : candidates) {
    switch (policy.kind) {
      case SelectionPolicy::Kind::warprf_image: {
        RenderOutput tgt = backend.render(cand);
        std::vector<ImageBuffer> warped;
        for (size_t i : source_subset(cand)) {
          warped.push_back(
              warp_image(train_views[i], source_renders[i].image, cand, tgt.depth));
        }
        ImageScore s = image_uncertainty_from_buffers(tgt.image, warped, policy.penalty);
        out.push_back(ViewScore{cand.id, s.score, s.covered_fraction});
        break;
      }
      case SelectionPolicy::Kind::warprf_depth: {
        DepthMap tgt_depth = backend.render(cand).depth;
        std::vector<DepthMap> warped;
        for (size_t i : source_subset(cand)) {
          warped.push_back(
              warp_depth(train_views[i], source_renders[i].depth, cand, tgt_depth));
        }
        UncertaintyMap u = pixel_uncertainty_from_maps(tgt_depth, warped);
        KahanSum sum;
        int covered = 0;
        for (size_t i = 0; i < u.map.size(); ++i) {
          if (!u.map.valid[i]) continue;
          sum.add(u.map.values[i]);
          ++covered;
        }
        ViewScore s;
        s.view_id = cand.id;
        s.score = sum.value();
        s.covered_fraction = u.map.size() > 0 ? static_cast<double>(covered) / u.map.size() : 0.0;
        out.push_back(s);
        break;
      }
      case SelectionPolicy::Kind::random: {
        ViewScore s;
        s.view_id = cand.id;
        s.score = rng::uniform(rng::combine(policy.seed, rng::fnv1a(cand.id)), 0);
        out.push_back(s);
        break;
      }
      case SelectionPolicy::Kind::farthest: {
        double best = std::numeric_limits<double>::infinity();
        for (const View& t : train_views)
          best = std::min(best, camera_center_distance(cand.pose, t.pose));
        ViewScore s;
        s.view_id = cand.id;
        s.score = best;
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

/// Argmax score; ties broken by lowest view id. NaN scores are an error, never
/// silently compared.
inline std::string select_next(const std::vector<ViewScore>& scores) {
  require(!scores.empty(), "select_next: empty score list");
  const ViewScore* best = nullptr;
  for (const auto& s : scores) {
    if (std::isnan(s.score)) throw std::invalid_argument("select_next: NaN score for " + s.view_id);
    if (!best || s.score > best->score ||
        (s.score == best->score && s.view_id < best->view_id)) {
      best = &s;
    }
  }
  return best->view_id;
}

struct RefineResult {
  View view;
  double score = 0.0;
  double input_score = 0.0;
};

/// Derivative-free local ascent on the image-level uncertainty: evaluates the
/// incumbent against a fixed stencil (+-radius translations along the world
/// axes, +-radius/2 rad rotations about the camera right/up axes), moves to
/// the best, and halves the radius when nothing improves. The returned pose
/// never scores below the input. The seed parameter is reserved for stochastic
/// stencils and is unused by the fixed stencil.
inline RefineResult refine_pose(const RenderingBackend& backend,
                                const std::vector<View>& train_views, const View& candidate,
                                double radius, int iters, std::uint64_t seed = 0,
                                double penalty = kDefaultUncoveredPenalty) {
  (void)seed;
  require(radius > 0.0, "refine_pose: radius must be > 0");
  require(iters >= 0, "refine_pose: iters must be >= 0");
  auto score_of = [&](const View& v) {
    return image_uncertainty(backend, train_views, v, penalty).score;
  };
  RefineResult res;
  res.view = candidate;
  if (iters == 0) return res;  // identity
  res.score = res.input_score = score_of(candidate);
  // a move must beat the incumbent by more than accumulation noise, so flat
  // landscapes shrink out instead of drifting on float dust
  auto improves = [](double s, double cur) {
    return s > cur + 1e-12 + 1e-12 * std::abs(cur);
  };
  double r = radius;
  for (int it = 0; it < iters; ++it) {
    View best = res.view;
    double best_score = res.score;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        View v = res.view;
        v.pose.translation[axis] += sign * r;
        double s = score_of(v);
        if (s > best_score) {
          best_score = s;
          best = v;
        }
      }
    }
    for (int axis = 0; axis < 2; ++axis) {  // camera right / up
      for (double sign : {-1.0, 1.0}) {
        View v = res.view;
        Vec3 world_axis = v.pose.rotation.col(axis);
        v.pose.rotation =
            Eigen::AngleAxisd(sign * 0.5 * r, world_axis).toRotationMatrix() * v.pose.rotation;
        double s = score_of(v);
        if (s > best_score) {
          best_score = s;
          best = v;
        }
      }
    }
    if (improves(best_score, res.score)) {
      res.view = best;
      res.score = best_score;
    } else {
      r *= 0.5;
    }
  }
  if (res.score < res.input_score)
    throw std::logic_error("refine_pose: ascent guarantee violated");
  return res;
}

struct RefineConfig {
  enum class Mode { off, top_k };
  Mode mode = Mode::off;
  int k = 3;
  double radius = 0.2;
  int iters = 5;
};

struct LoopConfig {
  std::vector<std::string> initial_view_ids;  // resolved against the pool and consumed
  std::vector<View> initial_views;            // alternative: views disjoint from the pool
  int rounds = 1;
  int fit_budget_per_round = 0;
  std::vector<View> candidate_pool;
  std::vector<View> eval_views;
  RefineConfig refine;
  std::uint64_t seed = 0;
  bool refit_from_scratch = false;
  double cloud_threshold = 0.05;
  int cloud_stride = 2;
  std::vector<std::string> metric_names = {"psnr", "ssim", "depth_mae"};
};

struct RoundRecord {
  int round = 0;
  std::string selected_view;
  double selected_score = 0.0;
  std::vector<ViewScore> scores;  // pool scores for this round, pool order
  std::map<std::string, double> metrics_after_fit;
};

struct LoopResult {
  std::vector<RoundRecord> records;
  std::vector<View> selected_views;  // final poses, after any refinement
  bool completed = false;
  std::string message;
};

using BackendFactory = std::function<std::unique_ptr<TrainableBackend>()>;

namespace detail {

inline std::map<std::string, double> holdout_metrics(const RenderingBackend& backend,
                                                     const RenderingBackend& gt_backend,
                                                     const LoopConfig& config) {
  std::map<std::string, double> out;
  if (config.eval_views.empty()) return out;
  bool want_cloud = std::find(config.metric_names.begin(), config.metric_names.end(), "cloud") !=
                    config.metric_names.end();
  KahanSum psnr_sum, ssim_sum;
  KahanSum mae_abs;
  long mae_count = 0;
  PointCloud pred_cloud, gt_cloud;
  for (const View& v : config.eval_views) {
    RenderOutput pred = backend.render(v);
    RenderOutput gt = gt_backend.render(v);
    psnr_sum.add(psnr(pred.image, gt.image));
    ssim_sum.add(ssim(pred.image, gt.image));
    for (size_t i = 0; i < pred.depth.size(); ++i) {
      if (!pred.depth.valid[i] || !gt.depth.valid[i]) continue;
      mae_abs.add(std::abs(pred.depth.values[i] - gt.depth.values[i]));
      ++mae_count;
    }
    if (want_cloud) {
      PointCloud p = backproject_depth(pred.depth, v, config.cloud_stride);
      PointCloud g = backproject_depth(gt.depth, v, config.cloud_stride);
      pred_cloud.points.insert(pred_cloud.points.end(), p.points.begin(), p.points.end());
      gt_cloud.points.insert(gt_cloud.points.end(), g.points.begin(), g.points.end());
    }
  }
  const double n = static_cast<double>(config.eval_views.size());
  for (const std::string& name : config.metric_names) {
    if (name == "psnr") out["psnr"] = psnr_sum.value() / n;
    if (name == "ssim") out["ssim"] = ssim_sum.value() / n;
    if (name == "depth_mae")
      out["depth_mae"] = mae_count > 0 ? mae_abs.value() / mae_count
                                       : std::numeric_limits<double>::quiet_NaN();
  }
  if (want_cloud) {
    if (!pred_cloud.points.empty() && !gt_cloud.points.empty()) {
      CloudMetrics cm = cloud_metrics(pred_cloud, gt_cloud, config.cloud_threshold);
      out["cloud_acc"] = cm.acc;
      out["cloud_comp"] = cm.comp;
      out["cloud_cr"] = cm.cr;
      out["cloud_f1"] = cm.f1;
    } else {
      out["cloud_acc"] = out["cloud_comp"] = std::numeric_limits<double>::quiet_NaN();
      out["cloud_cr"] = out["cloud_f1"] = 0.0;
    }
  }
  return out;
}

}  // namespace detail

/// Runs the greedy loop: fit on the current training images, score the pool,
/// select (optionally refining the top-k poses), append the chosen view with
/// its ground-truth image, evaluate held-out metrics, repeat. Deterministic
/// given the config seed. Pool exhaustion before the requested rounds returns
/// partial records with completed = false.
inline LoopResult run_active_loop(const BackendFactory& backend_factory,
                                  const RenderingBackend& gt_backend, const LoopConfig& config,
                                  const SelectionPolicy& policy) {
  require(static_cast<bool>(backend_factory), "run_active_loop: null backend factory");
  require(config.rounds >= 1, "run_active_loop: rounds must be >= 1");
  require(!config.candidate_pool.empty(), "run_active_loop: empty candidate pool");

  std::vector<View> pool = config.candidate_pool;
  std::vector<TrainView> train_set;
  LoopResult result;

  auto take_from_pool = [&pool](const std::string& id) {
    auto it = std::find_if(pool.begin(), pool.end(), [&](const View& v) { return v.id == id; });
    require(it != pool.end(), "run_active_loop: view id not in pool: " + id);
    View v = *it;
    pool.erase(it);
    return v;
  };

  for (const View& v : config.initial_views) {
    train_set.push_back(TrainView{v, gt_backend.render(v).image});
  }
  for (const std::string& id : config.initial_view_ids) {
    View v = take_from_pool(id);
    train_set.push_back(TrainView{v, gt_backend.render(v).image});
  }

  std::unique_ptr<TrainableBackend> backend = backend_factory();
  for (int round = 1; round <= config.rounds; ++round) {
    if (pool.empty()) {
      result.message = "pool exhausted at round " + std::to_string(round);
      return result;
    }
    if (config.refit_from_scratch) backend = backend_factory();
    if (!train_set.empty()) {
      backend->fit(train_set, config.fit_budget_per_round,
                   rng::combine(config.seed, static_cast<std::uint64_t>(round)));
    }

    std::vector<View> train_views;
    train_views.reserve(train_set.size());
    for (const auto& tv : train_set) train_views.push_back(tv.view);

    SelectionPolicy round_policy = policy;
    if (policy.kind == SelectionPolicy::Kind::random)
      round_policy.seed = rng::combine(policy.seed, static_cast<std::uint64_t>(round));
    std::vector<ViewScore> scores = score_candidates(*backend, train_views, pool, round_policy);
    std::string selected_id = select_next(scores);
    double selected_score = 0.0;
    for (const auto& s : scores)
      if (s.view_id == selected_id) selected_score = s.score;
    View selected;

    if (config.refine.mode == RefineConfig::Mode::top_k &&
        (policy.kind == SelectionPolicy::Kind::warprf_image ||
         policy.kind == SelectionPolicy::Kind::warprf_depth)) {
      // Refine the k highest-scoring poses and keep the best refined one; the
      // runners-up stay in the pool.
      std::vector<ViewScore> sorted = scores;
      std::sort(sorted.begin(), sorted.end(), [](const ViewScore& a, const ViewScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.view_id < b.view_id;
      });
      RefineResult best;
      bool have_best = false;
      for (int i = 0; i < std::min<int>(config.refine.k, static_cast<int>(sorted.size())); ++i) {
        auto it = std::find_if(pool.begin(), pool.end(),
                               [&](const View& v) { return v.id == sorted[i].view_id; });
        RefineResult r = refine_pose(*backend, train_views, *it, config.refine.radius,
                                     config.refine.iters, config.seed, round_policy.penalty);
        if (!have_best || r.score > best.score) {
          best = r;
          have_best = true;
        }
      }
      selected_id = best.view.id;
      selected_score = best.score;
      take_from_pool(selected_id);
      selected = best.view;  // refined pose, original id
    } else {
      selected = take_from_pool(selected_id);
    }

    train_set.push_back(TrainView{selected, gt_backend.render(selected).image});
    result.selected_views.push_back(selected);

    RoundRecord rec;
    rec.round = round;
    rec.selected_view = selected_id;
    rec.selected_score = selected_score;
    rec.scores = std::move(scores);
    rec.metrics_after_fit = detail::holdout_metrics(*backend, gt_backend, config);
    result.records.push_back(std::move(rec));
  }
  result.completed = true;
  return result;
}

}  // namespace warprf
