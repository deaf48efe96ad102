#pragma once

// Analytic ray-traced scene: spheres, axis-aligned boxes and finite rectangles
// with Lambertian + ambient shading and optional checker textures. Serves as
// an exact, multi-view-consistent ground-truth renderer.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace warprf {

struct SphereGeom {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct BoxGeom {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

/// Finite rectangle on the plane normal . x = offset. In-plane axes are
/// derived deterministically from the normal.
struct RectGeom {
  Vec3 normal = Vec3(0, 1, 0);
  double offset = 0.0;
  Vec3 center = Vec3::Zero();  // must lie on the plane
  double half_u = 1.0;
  double half_v = 1.0;

  void axes(Vec3& u, Vec3& v) const {
    Vec3 ref = std::abs(normal.y()) < 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
    u = ref.cross(normal).normalized();
    v = normal.cross(u);
  }
};

/// Checker texture in primitive-local surface coordinates: cells alternate
/// between the primitive albedo and color2. Scale is the cell size (meters
/// for boxes/rects, radians for spheres).
struct CheckerTexture {
  Vec3 color2 = Vec3(0.1, 0.1, 0.1);
  double scale = 0.25;
};

struct Primitive {
  std::variant<SphereGeom, BoxGeom, RectGeom> geom;
  Vec3 albedo = Vec3(0.7, 0.7, 0.7);
  std::optional<CheckerTexture> checker;
};

struct SceneLight {
  Vec3 direction = Vec3(-0.4, -1.0, -0.3);  // photon travel direction
  double ambient = 0.3;
};

struct AnalyticScene {
  std::vector<Primitive> primitives;
  Vec3 background = Vec3::Zero();
  SceneLight light;

  void validate() const {
    for (const auto& p : primitives) {
      if (const auto* s = std::get_if<SphereGeom>(&p.geom)) {
        require(s->radius > 0.0, "scene: sphere radius must be > 0");
      } else if (const auto* b = std::get_if<BoxGeom>(&p.geom)) {
        require((b->min.array() < b->max.array()).all(), "scene: box min must be < max");
      } else if (const auto* r = std::get_if<RectGeom>(&p.geom)) {
        require(std::abs(r->normal.norm() - 1.0) < 1e-9, "scene: rect normal must be unit");
        require(std::abs(r->normal.dot(r->center) - r->offset) < 1e-9,
                "scene: rect center must lie on its plane");
        require(r->half_u > 0.0 && r->half_v > 0.0, "scene: rect extent must be > 0");
      }
    }
  }
};

struct SceneHit {
  bool hit = false;
  double t = std::numeric_limits<double>::infinity();  // ray parameter, unit direction
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  Vec2 surface_uv = Vec2::Zero();  // local texture coordinates
  int prim_index = -1;
};

namespace detail {

constexpr double kRayEps = 1e-9;

inline bool hit_sphere(const SphereGeom& s, const Vec3& o, const Vec3& d, double& t) {
  Vec3 oc = o - s.center;
  double b = oc.dot(d);
  double c = oc.squaredNorm() - s.radius * s.radius;
  double disc = b * b - c;
  if (disc < 0.0) return false;
  double sq = std::sqrt(disc);
  double t0 = -b - sq;
  double t1 = -b + sq;
  if (t0 > kRayEps) {
    t = t0;
    return true;
  }
  if (t1 > kRayEps) {
    t = t1;
    return true;
  }
  return false;
}

inline bool hit_box(const BoxGeom& b, const Vec3& o, const Vec3& d, double& t, Vec3& n) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  int axis_min = -1;
  double sign_min = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return false;
      continue;
    }
    double inv = 1.0 / d[a];
    double t0 = (b.min[a] - o[a]) * inv;
    double t1 = (b.max[a] - o[a]) * inv;
    double sign = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      sign = 1.0;
    }
    if (t0 > tmin) {
      tmin = t0;
      axis_min = a;
      sign_min = sign;
    }
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  if (tmin <= kRayEps || axis_min < 0) return false;  // origins inside boxes not supported
  t = tmin;
  n = Vec3::Zero();
  n[axis_min] = sign_min;
  return true;
}

inline bool hit_rect(const RectGeom& r, const Vec3& o, const Vec3& d, double& t, Vec2& uv) {
  double denom = r.normal.dot(d);
  if (std::abs(denom) < 1e-12) return false;
  double tt = (r.offset - r.normal.dot(o)) / denom;
  if (tt <= kRayEps) return false;
  Vec3 p = o + tt * d;
  Vec3 u, v;
  r.axes(u, v);
  Vec3 rel = p - r.center;
  double pu = rel.dot(u);
  double pv = rel.dot(v);
  if (std::abs(pu) > r.half_u || std::abs(pv) > r.half_v) return false;
  t = tt;
  uv = Vec2(pu, pv);
  return true;
}

inline Vec2 sphere_uv(const SphereGeom& s, const Vec3& p) {
  Vec3 n = (p - s.center) / s.radius;
  double theta = std::acos(std::clamp(n.y(), -1.0, 1.0));
  double phi = std::atan2(n.z(), n.x());
  return Vec2(theta, phi);
}

inline Vec2 box_uv(const BoxGeom& b, const Vec3& p, const Vec3& n) {
  Vec3 rel = p - b.min;
  if (std::abs(n.x()) > 0.5) return Vec2(rel.y(), rel.z());
  if (std::abs(n.y()) > 0.5) return Vec2(rel.x(), rel.z());
  return Vec2(rel.x(), rel.y());
}

}  // namespace detail

/// Nearest primitive intersection along origin + t * dir (dir unit length).
inline SceneHit trace_ray(const AnalyticScene& scene, const Vec3& origin, const Vec3& dir) {
  SceneHit best;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& prim = scene.primitives[i];
    double t;
    if (const auto* s = std::get_if<SphereGeom>(&prim.geom)) {
      if (detail::hit_sphere(*s, origin, dir, t) && t < best.t) {
        best.hit = true;
        best.t = t;
        best.point = origin + t * dir;
        best.normal = (best.point - s->center).normalized();
        best.surface_uv = detail::sphere_uv(*s, best.point);
        best.prim_index = static_cast<int>(i);
      }
    } else if (const auto* b = std::get_if<BoxGeom>(&prim.geom)) {
      Vec3 n;
      if (detail::hit_box(*b, origin, dir, t, n) && t < best.t) {
        best.hit = true;
        best.t = t;
        best.point = origin + t * dir;
        best.normal = n;
        best.surface_uv = detail::box_uv(*b, best.point, n);
        best.prim_index = static_cast<int>(i);
      }
    } else if (const auto* r = std::get_if<RectGeom>(&prim.geom)) {
      Vec2 uv;
      if (detail::hit_rect(*r, origin, dir, t, uv) && t < best.t) {
        best.hit = true;
        best.t = t;
        best.point = origin + t * dir;
        best.normal = r->normal;
        best.surface_uv = uv;
        best.prim_index = static_cast<int>(i);
      }
    }
  }
  return best;
}

/// Shaded color at a hit point: checker-resolved albedo under directional
/// Lambertian light plus an ambient term. View independent.
inline Vec3 shade_hit(const AnalyticScene& scene, const SceneHit& hit) {
  const Primitive& prim = scene.primitives[hit.prim_index];
  Vec3 albedo = prim.albedo;
  if (prim.checker) {
    double s = prim.checker->scale;
    long long pu = static_cast<long long>(std::floor(hit.surface_uv.x() / s));
    long long pv = static_cast<long long>(std::floor(hit.surface_uv.y() / s));
    if (((pu + pv) & 1LL) != 0) albedo = prim.checker->color2;
  }
  Vec3 to_light = -scene.light.direction.normalized();
  double lambert = std::max(0.0, hit.normal.dot(to_light));
  double shade = scene.light.ambient + (1.0 - scene.light.ambient) * lambert;
  return clamp01(Vec3(albedo * shade));
}

/// Casts one central ray per pixel. Misses give background color and invalid
/// depth; hits give shaded color and camera-frame (planar) depth.
inline RenderOutput oracle_render(const AnalyticScene& scene, const View& view, int threads = 1) {
  const Intrinsics& in = view.intrinsics;
  RenderOutput out;
  out.image = ImageBuffer(in.width, in.height, scene.background, true);
  out.depth = DepthMap(in.width, in.height);
  const Vec3 origin = view.pose.translation;
  parallel_for_rows(in.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < in.width; ++x) {
        Vec3 dir_cam((x - in.cx) / in.fx, (y - in.cy) / in.fy, 1.0);
        Vec3 dir = (view.pose.rotation * dir_cam).normalized();
        SceneHit hit = trace_ray(scene, origin, dir);
        if (!hit.hit) continue;
        out.image.set(x, y, shade_hit(scene, hit));
        double z = view.pose.camera_from_world(hit.point).z();
        if (z > 0.0) out.depth.set(x, y, z);
      }
    }
  });
  return out;
}

}  // namespace warprf
