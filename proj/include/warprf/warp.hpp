#pragma once

// Backward warping of depth and color between posed views.
//
// For each valid target pixel the target depth fixes a 3D point; that point
// is projected into the source view and the source buffer is sampled there
// bilinearly. Warped depth is the source surface re-expressed in the target
// camera frame, so consistent geometry compares like with like.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"

#include <cmath>
#include <optional>

namespace warprf {

/// Bilinear sample over the four neighbors of (x, y). Weights of invalid or
/// out-of-grid neighbors are dropped and the rest renormalized; a sample with
/// no valid contributor is empty. The result never leaves the [min, max] hull
/// of its contributing neighbors.
inline std::optional<double> sample_bilinear(const ScalarMap& map, double x, double y) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  double fx = x - x0;
  double fy = y - y0;
  double acc = 0.0, wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      int xi = x0 + dx, yi = y0 + dy;
      if (xi < 0 || xi >= map.width || yi < 0 || yi >= map.height) continue;
      if (!map.is_valid(xi, yi)) continue;
      double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      acc += w * map.at(xi, yi);
      wsum += w;
    }
  }
  if (wsum <= 0.0) return std::nullopt;
  return acc / wsum;
}

inline std::optional<Vec3> sample_bilinear(const ImageBuffer& img, double x, double y) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  double fx = x - x0;
  double fy = y - y0;
  Vec3 acc = Vec3::Zero();
  double wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      int xi = x0 + dx, yi = y0 + dy;
      if (xi < 0 || xi >= img.width || yi < 0 || yi >= img.height) continue;
      if (!img.is_valid(xi, yi)) continue;
      double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      acc += w * img.at(xi, yi);
      wsum += w;
    }
  }
  if (wsum <= 0.0) return std::nullopt;
  return Vec3(acc / wsum);
}

namespace detail {

inline void check_warp_sizes(const View& src_view, int sw, int sh,
                             const View& tgt_view, const DepthMap& tgt_depth) {
  require(sw == src_view.intrinsics.width && sh == src_view.intrinsics.height,
          "warp: source buffer does not match source view resolution");
  require(tgt_depth.width == tgt_view.intrinsics.width &&
              tgt_depth.height == tgt_view.intrinsics.height,
          "warp: target depth does not match target view resolution");
}

}  // namespace detail

/// Warps source depth into the target view; output pixels are valid only when
/// the correspondence lands in front of both cameras, in source bounds, on
/// valid source depth, and the re-expressed depth is positive.
inline DepthMap warp_depth(const View& src_view, const DepthMap& src_depth,
                           const View& tgt_view, const DepthMap& tgt_depth) {
  detail::check_warp_sizes(src_view, src_depth.width, src_depth.height, tgt_view, tgt_depth);
  DepthMap out(tgt_depth.width, tgt_depth.height);
  for (int y = 0; y < tgt_depth.height; ++y) {
    for (int x = 0; x < tgt_depth.width; ++x) {
      if (!tgt_depth.is_valid(x, y)) continue;
      Vec3 world = unproject(Vec2(x, y), tgt_depth.at(x, y), tgt_view);
      Projection q = project(world, src_view);
      if (q.depth <= 0.0 || !pixel_in_bounds(q.pixel, src_view.intrinsics)) continue;
      auto ds = sample_bilinear(src_depth, q.pixel.x(), q.pixel.y());
      if (!ds || *ds <= 0.0) continue;
      Vec3 src_surface = unproject(q.pixel, *ds, src_view);
      double z = tgt_view.pose.camera_from_world(src_surface).z();
      if (z <= 0.0) continue;  // negative-depth exclusion
      out.set(x, y, z);
    }
  }
  return out;
}

/// Warps source color into the target view using the target depth for
/// correspondence.
inline ImageBuffer warp_image(const View& src_view, const ImageBuffer& src_image,
                              const View& tgt_view, const DepthMap& tgt_depth) {
  detail::check_warp_sizes(src_view, src_image.width, src_image.height, tgt_view, tgt_depth);
  ImageBuffer out(tgt_depth.width, tgt_depth.height);
  for (int y = 0; y < tgt_depth.height; ++y) {
    for (int x = 0; x < tgt_depth.width; ++x) {
      if (!tgt_depth.is_valid(x, y)) continue;
      Vec3 world = unproject(Vec2(x, y), tgt_depth.at(x, y), tgt_view);
      Projection q = project(world, src_view);
      if (q.depth <= 0.0 || !pixel_in_bounds(q.pixel, src_view.intrinsics)) continue;
      auto color = sample_bilinear(src_image, q.pixel.x(), q.pixel.y());
      if (!color) continue;
      out.set(x, y, *color);
    }
  }
  return out;
}

}  // namespace warprf
