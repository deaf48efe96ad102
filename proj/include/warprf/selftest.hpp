#pragma once

// Built-in oracle checks, runnable from the CLI. Each check compares a
// library code path against an independent reference computed right here:
// analytic warp geometry, hand compositing, finite differences, brute-force
// enumeration. Prints one line per check.

#include "warprf/active.hpp"
#include "warprf/backend.hpp"
#include "warprf/cloud.hpp"
#include "warprf/degrade.hpp"
#include "warprf/metrics.hpp"
#include "warprf/scene.hpp"
#include "warprf/uncertainty.hpp"
#include "warprf/viewgen.hpp"
#include "warprf/voxel.hpp"
#include "warprf/warp.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace warprf::selftest {

namespace detail {

inline View axial_view(int size, double focal) {
  View v;
  v.intrinsics = default_intrinsics(size, size, focal);
  v.id = "self";
  return v;
}

// Translated fronto-parallel plane: the correspondence shift and warped depth
// are known in closed form.
inline bool check_plane_warp() {
  View target = axial_view(64, 80.0);
  View source = axial_view(64, 80.0);
  source.pose.translation = Vec3(0.16, 0, 0);  // 80 * 0.16 / 2 = 6.4 px shift
  DepthMap tgt(64, 64), src(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      tgt.set(x, y, 2.0);
      src.set(x, y, 2.0);
    }
  DepthMap warped = warp_depth(source, src, target, tgt);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      bool overlap = x - 6.4 >= 0.0 && x - 6.4 <= 63.0;
      if (warped.is_valid(x, y) != overlap) return false;
      if (overlap && std::abs(warped.at(x, y) - 2.0) > 1e-9) return false;
    }
  return true;
}

inline bool check_alpha_compositing() {
  const double step = 0.2, near = 1.0;
  const double t1 = near + 0.5 * step, t2 = near + 1.5 * step;
  VoxelField f = make_voxel_field(Eigen::Vector3i(2, 2, 2), Vec3(-1, -1, t1), Vec3(1, 1, t2),
                                  step, near, near + 2 * step, Vec3(0.5, 0.5, 0.5));
  for (auto& d : f.density_raw) d = std::log(std::exp(std::log(2.0) / step) - 1.0);
  const Vec3 c1(0.7, 0.3, 0.2), c2(0.2, 0.8, 0.5);
  for (int z = 0; z < 2; ++z) {
    const Vec3& c = z == 0 ? c1 : c2;
    for (int yx = 0; yx < 4; ++yx)
      for (int ch = 0; ch < 3; ++ch)
        f.color_raw[3 * (static_cast<size_t>(z) * 4 + yx) + ch] = std::log(c[ch] / (1 - c[ch]));
  }
  View v = axial_view(8, 8.0);
  RenderOutput r = voxel_render(f, v);
  Vec3 expect_c = 0.5 * c1 + 0.25 * c2 + 0.25 * f.background;
  double expect_d = 0.5 * t1 + 0.25 * t2;
  return r.depth.is_valid(4, 4) && (r.image.at(4, 4) - expect_c).cwiseAbs().maxCoeff() < 1e-9 &&
         std::abs(r.depth.at(4, 4) - expect_d) < 1e-9;
}

inline bool check_gradients() {
  VoxelField f = make_voxel_field(Eigen::Vector3i(4, 4, 4), Vec3(-1, -1, -1), Vec3(1, 1, 1),
                                  0.25, 1.0, 3.8, Vec3(0.2, 0.1, 0.3));
  for (size_t i = 0; i < f.density_raw.size(); ++i)
    f.density_raw[i] = -3.0 + 4.0 * rng::uniform(17, i);
  for (size_t i = 0; i < f.color_raw.size(); ++i)
    f.color_raw[i] = -2.0 + 4.0 * rng::uniform(18, i);
  View v = axial_view(16, 16.0);
  v.pose.translation = Vec3(0, 0, -2.5);
  std::vector<TrainView> views{{v, ImageBuffer(16, 16, Vec3(0.3, 0.6, 0.2), true)}};
  std::vector<RayRef> rays{{0, 8, 8}, {0, 3, 12}, {0, 13, 5}};
  std::vector<double> gd(f.density_raw.size(), 0.0), gc(f.color_raw.size(), 0.0);
  voxel_batch_loss(f, views, rays, &gd, &gc);
  const double eps = 1e-4;
  auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
    double worst = 0.0, scale = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
      double keep = params[i];
      params[i] = keep + eps;
      double lp = voxel_batch_loss(f, views, rays);
      params[i] = keep - eps;
      double lm = voxel_batch_loss(f, views, rays);
      params[i] = keep;
      double fd = (lp - lm) / (2 * eps);
      worst = std::max(worst, std::abs(fd - analytic[i]));
      scale = std::max(scale, std::abs(fd));
    }
    return scale > 0.0 && worst / scale < 1e-3;
  };
  return check(f.density_raw, gd) && check(f.color_raw, gc);
}

inline bool check_ause_brute_force() {
  const int n = 16 * 16, bins = 20;
  std::vector<double> u(n), e(n);
  std::vector<std::uint8_t> mask(n, 1);
  for (int i = 0; i < n; ++i) {
    u[i] = rng::uniform(21, i);
    e[i] = rng::uniform(22, i);
  }
  // brute-force enumeration
  std::vector<size_t> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  auto curve = [&](const std::vector<double>& key) {
    std::vector<size_t> idx = order;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      if (key[a] != key[b]) return key[a] > key[b];
      return a < b;
    });
    std::vector<double> mae(bins);
    for (int k = 0; k < bins; ++k) {
      size_t removed = (static_cast<size_t>(k) * n) / bins;
      double s = 0.0;
      for (size_t i = removed; i < n; ++i) s += e[idx[i]];
      mae[k] = s / (n - removed);
    }
    double base = mae[0];
    for (auto& m : mae) m /= base;
    return mae;
  };
  std::vector<double> cu = curve(u), ce = curve(e);
  double expect = 0.0;
  for (int k = 0; k < bins; ++k) expect += cu[k] - ce[k];
  expect /= bins;
  double got = ause(u, e, mask, bins);
  if (std::abs(got - expect) > 1e-12) return false;
  if (ause(e, e, mask, bins) != 0.0) return false;
  std::vector<double> cubed(u);
  for (auto& x : cubed) x = x * x * x;
  return ause(cubed, e, mask, bins) == got;
}

inline bool check_nn_brute_force() {
  PointCloud a, b;
  for (int i = 0; i < 200; ++i)
    a.points.emplace_back(rng::uniform(31, 3 * i), rng::uniform(31, 3 * i + 1),
                          rng::uniform(31, 3 * i + 2));
  for (int i = 0; i < 150; ++i)
    b.points.emplace_back(rng::uniform(32, 3 * i), rng::uniform(32, 3 * i + 1),
                          rng::uniform(32, 3 * i + 2));
  std::vector<double> grid = warprf::detail::nearest_distances(a.points, b.points);
  for (size_t i = 0; i < a.points.size(); ++i) {
    double best = 1e300;
    for (const auto& p : b.points) best = std::min(best, (a.points[i] - p).norm());
    if (grid[i] != best) return false;
  }
  return true;
}

inline bool check_ssim_closed_form() {
  ImageBuffer a(16, 16, Vec3(0.3, 0.3, 0.3), true);
  ImageBuffer b(16, 16, Vec3(0.6, 0.6, 0.6), true);
  double c1 = 1e-4;
  double expect = (2 * 0.3 * 0.6 + c1) / (0.3 * 0.3 + 0.6 * 0.6 + c1);
  return std::abs(ssim(a, b) - expect) < 1e-9 && std::abs(ssim(a, a) - 1.0) < 1e-12;
}

inline bool check_noise_statistics() {
  AnalyticScene scene;
  Primitive wall;
  RectGeom r;
  r.normal = Vec3(0, 0, -1);
  r.center = Vec3(0, 0, 2);
  r.offset = r.normal.dot(r.center);
  r.half_u = r.half_v = 4.0;
  wall.geom = r;
  scene.primitives.push_back(wall);
  DegradationSpec spec;
  spec.depth_noise_sigma = 0.04;
  spec.seed = 99;
  View v = axial_view(96, 60.0);
  DegradedRender d = degraded_render(scene, spec, v);
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < d.true_error.size(); ++i)
    if (d.true_error.valid[i]) {
      sum += d.true_error.values[i];
      ++n;
    }
  double expect = 0.04 * std::sqrt(2.0 / M_PI);
  double mean = sum / n;
  return n > 5000 && mean > 0.8 * expect && mean < 1.2 * expect;
}

inline bool check_refine_ascent() {
  AnalyticScene scene;
  scene.light.direction = Vec3(0.3, -0.5, 1.0);
  Primitive wall;
  RectGeom r;
  r.normal = Vec3(0, 0, -1);
  r.center = Vec3(0, 0, 2.2);
  r.offset = r.normal.dot(r.center);
  r.half_u = r.half_v = 3.5;
  wall.geom = r;
  wall.albedo = Vec3(0.8, 0.6, 0.3);
  scene.primitives.push_back(wall);
  DegradationSpec spec;
  spec.region = RegionWorldSphere{Vec3(1.0, 0.0, 2.2), 0.5};
  spec.color_noise_sigma = 0.3;
  spec.seed = 5;
  DegradedOracleBackend backend(scene, spec);
  Vec3 eye(-0.8, 0.0, -0.5);
  View cand;
  cand.intrinsics = default_intrinsics(32, 32, 40.0);
  cand.pose = look_at(eye, eye + Vec3(0, 0, 1));
  cand.id = "c";
  std::vector<View> train;
  for (int i = 0; i < 4; ++i) {
    View t = cand;
    t.pose.translation += Vec3(0.1 * std::cos(1.57 * i), 0.05, 0.1 * std::sin(1.57 * i));
    t.id = "t" + std::to_string(i);
    train.push_back(t);
  }
  RefineResult res = refine_pose(backend, train, cand, 1.0, 2);
  return res.score > res.input_score;
}

}  // namespace detail

/// Runs every oracle check, printing one line each. Returns true if all pass.
inline bool run_all(std::ostream& out) {
  struct Check {
    const char* name;
    std::function<bool()> fn;
  };
  const std::vector<Check> checks = {
      {"plane-warp-analytic", detail::check_plane_warp},
      {"alpha-compositing-hand", detail::check_alpha_compositing},
      {"gradients-finite-difference", detail::check_gradients},
      {"ause-brute-force", detail::check_ause_brute_force},
      {"nearest-neighbor-brute-force", detail::check_nn_brute_force},
      {"ssim-closed-form", detail::check_ssim_closed_form},
      {"degradation-noise-statistics", detail::check_noise_statistics},
      {"refine-ascent", detail::check_refine_ascent},
  };
  bool all = true;
  for (const auto& c : checks) {
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      out << "selftest " << c.name << ": exception: " << e.what() << "\n";
    }
    out << "selftest " << c.name << ": " << (ok ? "ok" : "FAIL") << "\n";
    all = all && ok;
  }
  return all;
}

}  // namespace warprf::selftest
