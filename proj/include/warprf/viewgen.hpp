#pragma once

// View-set generators: camera rings and Fibonacci-sphere samplings looking at
// a common target. Used for training/candidate/evaluation pools.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace warprf {

inline Intrinsics default_intrinsics(int width, int height, double focal) {
  Intrinsics in;
  in.width = width;
  in.height = height;
  in.fx = in.fy = focal;
  in.cx = (width - 1) / 2.0;
  in.cy = (height - 1) / 2.0;
  return in;
}

/// Cameras on a horizontal circle of given radius and height around `center`,
/// all looking at `center`.
inline std::vector<View> ring_views(int count, double radius, double height, const Vec3& center,
                                    const Intrinsics& intrinsics,
                                    const std::string& id_prefix = "ring") {
  require(count >= 1, "ring_views: count must be >= 1");
  std::vector<View> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    double az = 2.0 * M_PI * i / count;
    Vec3 eye = center + Vec3(radius * std::cos(az), height, radius * std::sin(az));
    View v;
    v.intrinsics = intrinsics;
    v.pose = look_at(eye, center);
    v.id = id_prefix + std::to_string(i);
    out.push_back(v);
  }
  return out;
}

/// Cameras on a Fibonacci spiral over the spherical band y/radius in
/// [min_y_frac, 1] around `center`, looking at `center`. The default band is
/// the full sphere; min_y_frac = 0 keeps the upper hemisphere.
inline std::vector<View> fibonacci_sphere_views(int count, double radius, const Vec3& center,
                                                const Intrinsics& intrinsics,
                                                const std::string& id_prefix = "cand",
                                                double min_y_frac = -1.0) {
  require(count >= 1, "fibonacci_sphere_views: count must be >= 1");
  require(min_y_frac >= -1.0 && min_y_frac < 1.0, "fibonacci_sphere_views: bad min_y_frac");
  constexpr double golden_angle = 2.399963229728653;  // pi * (3 - sqrt(5))
  std::vector<View> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    double yf = 1.0 - (1.0 - min_y_frac) * (i + 0.5) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - yf * yf));
    double phi = golden_angle * i;
    Vec3 eye = center + radius * Vec3(r * std::cos(phi), yf, r * std::sin(phi));
    View v;
    v.intrinsics = intrinsics;
    v.pose = look_at(eye, center);
    v.id = id_prefix + std::to_string(i);
    out.push_back(v);
  }
  return out;
}

}  // namespace warprf
