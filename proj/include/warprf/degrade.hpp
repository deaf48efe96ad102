#pragma once

// Degradation wrapper over the analytic oracle: injects depth bias, seeded
// depth/color noise, or primitive deletion inside a configurable region, and
// returns the exact per-pixel depth error it introduced. Provides controlled
// error maps for validating uncertainty estimators.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"
#include "warprf/rng.hpp"
#include "warprf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace warprf {

struct RegionAll {};

/// Pixel-space rectangle, inclusive of [x0, x1) x [y0, y1).
struct RegionImageRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct RegionWorldSphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Angular sector around `center`, measured as azimuth atan2(z-cz, x-cx).
/// Wraps when az_min > az_max.
struct RegionWorldSector {
  Vec3 center = Vec3::Zero();
  double az_min = 0.0;
  double az_max = 1.0;
};

using Region = std::variant<RegionAll, RegionImageRect, RegionWorldSphere, RegionWorldSector>;

struct DegradationSpec {
  Region region = RegionAll{};
  double depth_bias = 0.0;        // meters
  double depth_noise_sigma = 0.0; // meters
  double color_noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> apply_to_views;  // empty = every view
  std::vector<int> drop_primitives;         // rendered without these; truth keeps them

  void validate() const {
    require(depth_noise_sigma >= 0.0, "degradation: depth_noise_sigma must be >= 0");
    require(color_noise_sigma >= 0.0, "degradation: color_noise_sigma must be >= 0");
  }
};

struct DegradedRender {
  ImageBuffer image;
  DepthMap depth;
  ScalarMap true_error;  // |degraded - oracle| depth, valid where both depths are
};

namespace detail {

inline bool region_contains(const Region& region, int px, int py,
                            bool has_point, const Vec3& world_point) {
  if (std::holds_alternative<RegionAll>(region)) return true;
  if (const auto* r = std::get_if<RegionImageRect>(&region)) {
    return px >= r->x0 && px < r->x1 && py >= r->y0 && py < r->y1;
  }
  if (!has_point) return false;
  if (const auto* s = std::get_if<RegionWorldSphere>(&region)) {
    return (world_point - s->center).norm() <= s->radius;
  }
  const auto& sec = std::get<RegionWorldSector>(region);
  double az = std::atan2(world_point.z() - sec.center.z(), world_point.x() - sec.center.x());
  if (sec.az_min <= sec.az_max) return az >= sec.az_min && az <= sec.az_max;
  return az >= sec.az_min || az <= sec.az_max;
}

inline bool applies_to_view(const DegradationSpec& spec, const std::string& view_id) {
  if (spec.apply_to_views.empty()) return true;
  return std::find(spec.apply_to_views.begin(), spec.apply_to_views.end(), view_id) !=
         spec.apply_to_views.end();
}

}  // namespace detail

/// Oracle render with the degradation applied, plus the exact per-pixel
/// absolute depth error against the clean oracle.
inline DegradedRender degraded_render(const AnalyticScene& scene, const DegradationSpec& spec,
                                      const View& view, int threads = 1) {
  spec.validate();
  RenderOutput truth = oracle_render(scene, view, threads);

  RenderOutput base;
  if (spec.drop_primitives.empty()) {
    base = truth;
  } else {
    AnalyticScene reduced = scene;
    reduced.primitives.clear();
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
      bool dropped = std::find(spec.drop_primitives.begin(), spec.drop_primitives.end(),
                               static_cast<int>(i)) != spec.drop_primitives.end();
      if (!dropped) reduced.primitives.push_back(scene.primitives[i]);
    }
    base = oracle_render(reduced, view, threads);
  }

  DegradedRender out;
  out.image = base.image;
  out.depth = base.depth;
  out.true_error = ScalarMap(truth.depth.width, truth.depth.height);

  const bool active = detail::applies_to_view(spec, view.id);
  const std::uint64_t key = rng::combine(spec.seed, rng::fnv1a(view.id));
  for (int y = 0; y < out.depth.height; ++y) {
    for (int x = 0; x < out.depth.width; ++x) {
      const std::uint64_t px_counter = out.depth.idx(x, y);
      if (active) {
        bool has_depth = out.depth.is_valid(x, y);
        Vec3 world = Vec3::Zero();
        if (has_depth) world = unproject(Vec2(x, y), out.depth.at(x, y), view);
        bool in_region = detail::region_contains(spec.region, x, y, has_depth, world);
        if (in_region) {
          if (has_depth && (spec.depth_bias != 0.0 || spec.depth_noise_sigma > 0.0)) {
            double d = out.depth.at(x, y) + spec.depth_bias;
            if (spec.depth_noise_sigma > 0.0)
              d += spec.depth_noise_sigma * rng::normal(key, 4 * px_counter);
            out.depth.set(x, y, std::max(d, 1e-6));
          }
          if (spec.color_noise_sigma > 0.0 && out.image.is_valid(x, y)) {
            Vec3 c = out.image.at(x, y);
            for (int ch = 0; ch < 3; ++ch)
              c[ch] += spec.color_noise_sigma * rng::normal(key, 4 * px_counter + 1 + ch);
            out.image.set(x, y, clamp01(c));
          }
        }
      }
      if (out.depth.is_valid(x, y) && truth.depth.is_valid(x, y)) {
        out.true_error.set(x, y, std::abs(out.depth.at(x, y) - truth.depth.at(x, y)));
      }
    }
  }
  return out;
}

}  // namespace warprf
