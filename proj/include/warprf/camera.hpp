#pragma once

// Pinhole camera model and SE(3) pose algebra.
//
// Conventions used everywhere in this library:
//  - poses are stored camera-to-world: X_world = R * X_cam + t
//  - camera frame: +z forward (optical axis), +x along pixel u, +y along pixel v
//  - depth means camera-frame z (planar depth), not ray length
//  - pixel centers sit at integer coordinates; (0,0) is the center of the
//    top-left pixel and in-bounds means [0, W-1] x [0, H-1]

#include "warprf/core.hpp"

#include <Eigen/Dense>

#include <string>

namespace warprf {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    require(fx > 0.0, "intrinsics: fx must be > 0");
    require(fy > 0.0, "intrinsics: fy must be > 0");
    require(width >= 1 && height >= 1, "intrinsics: image size must be >= 1");
    require(cx >= 0.0 && cx < width, "intrinsics: cx out of [0, width)");
    require(cy >= 0.0 && cy < height, "intrinsics: cy out of [0, height)");
  }
};

/// Camera-to-world rigid transform.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 world_from_camera(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 camera_from_world(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  /// Composition: (a * b) maps b's input frame through b then a.
  friend Pose operator*(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
  }

  double orthonormality_error() const {
    Mat3 e = rotation.transpose() * rotation - Mat3::Identity();
    return e.cwiseAbs().maxCoeff();
  }

  void validate(double tol = 1e-9) const {
    require(orthonormality_error() < tol, "pose: rotation not orthonormal");
    require(std::abs(rotation.determinant() - 1.0) < tol, "pose: det(R) != 1");
  }
};

struct View {
  Intrinsics intrinsics;
  Pose pose;
  std::string id;

  void validate() const {
    intrinsics.validate();
    pose.validate();
  }
};

struct Projection {
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;  // camera-frame z; may be <= 0, caller interprets
};

/// Pinhole projection of a world point. z = 0 yields a non-finite pixel which
/// downstream code must treat as invalid.
inline Projection project(const Vec3& point_world, const View& view) {
  Vec3 p = view.pose.camera_from_world(point_world);
  Projection out;
  out.depth = p.z();
  out.pixel.x() = view.intrinsics.fx * p.x() / p.z() + view.intrinsics.cx;
  out.pixel.y() = view.intrinsics.fy * p.y() / p.z() + view.intrinsics.cy;
  return out;
}

/// Exact right-inverse of project for depth > 0.
inline Vec3 unproject(const Vec2& pixel, double depth, const View& view) {
  require(depth > 0.0, "unproject: depth must be > 0");
  Vec3 p_cam((pixel.x() - view.intrinsics.cx) / view.intrinsics.fx * depth,
             (pixel.y() - view.intrinsics.cy) / view.intrinsics.fy * depth,
             depth);
  return view.pose.world_from_camera(p_cam);
}

// Tolerance absorbs round-trip noise so border pixels stay in bounds.
inline constexpr double kInBoundsEps = 1e-9;

inline bool pixel_in_bounds(const Vec2& px, const Intrinsics& in) {
  return std::isfinite(px.x()) && std::isfinite(px.y()) &&
         px.x() >= -kInBoundsEps && px.x() <= in.width - 1.0 + kInBoundsEps &&
         px.y() >= -kInBoundsEps && px.y() <= in.height - 1.0 + kInBoundsEps;
}

/// Camera-to-world pose with +z looking from eye toward target.
inline Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0, 1, 0)) {
  Vec3 fwd = (target - eye).normalized();
  Vec3 up_ref = up;
  if (std::abs(fwd.dot(up_ref.normalized())) > 0.999) up_ref = Vec3(1, 0, 0);
  Vec3 x = up_ref.cross(fwd).normalized();
  Vec3 y = fwd.cross(x);
  Pose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = fwd;
  pose.translation = eye;
  return pose;
}

/// Euclidean distance between camera centers; the pose distance used by the
/// farthest-view baseline.
inline double camera_center_distance(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm();
}

}  // namespace warprf
