#pragma once

// Experiment configuration: a strict JSON schema covering scene, view sets,
// backend, selection policy and loop parameters. Unknown keys are rejected,
// semantic errors name the offending field, and load -> serialize -> load is
// a fixpoint.

#include "warprf/active.hpp"
#include "warprf/backend.hpp"
#include "warprf/camera.hpp"
#include "warprf/core.hpp"
#include "warprf/degrade.hpp"
#include "warprf/scene.hpp"
#include "warprf/uncertainty.hpp"
#include "warprf/viewgen.hpp"
#include "warprf/voxel.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace warprf {

using json = nlohmann::json;

namespace cfg_detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& ctx) {
  require(obj.is_object(), "config: " + ctx + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

inline double get_number(const json& obj, const std::string& key, const std::string& ctx) {
  require(obj.contains(key), "config: missing '" + key + "' in " + ctx);
  require(obj[key].is_number(), "config: '" + key + "' in " + ctx + " must be a number");
  return obj[key].get<double>();
}

inline double get_number_or(const json& obj, const std::string& key, double fallback,
                            const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  require(obj[key].is_number(), "config: '" + key + "' in " + ctx + " must be a number");
  return obj[key].get<double>();
}

inline Vec3 get_vec3(const json& obj, const std::string& key, const std::string& ctx) {
  require(obj.contains(key), "config: missing '" + key + "' in " + ctx);
  const json& a = obj[key];
  require(a.is_array() && a.size() == 3, "config: '" + key + "' in " + ctx + " must be [x,y,z]");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline Vec3 get_vec3_or(const json& obj, const std::string& key, const Vec3& fallback,
                        const std::string& ctx) {
  return obj.contains(key) ? get_vec3(obj, key, ctx) : fallback;
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace cfg_detail

// ---------------------------------------------------------------------------
// View sets
// ---------------------------------------------------------------------------

struct ExplicitView {
  std::string id;
  std::optional<Vec3> eye, target;  // look-at form
  std::optional<Mat3> rotation;     // direct form
  std::optional<Vec3> translation;
};

struct ViewSetSpec {
  enum class Type { explicit_list, ring, sphere };
  Type type = Type::ring;
  Intrinsics image = default_intrinsics(64, 64, 70.0);
  std::string prefix;
  // ring / sphere parameters
  int count = 8;
  double radius = 3.0;
  double height = 1.0;     // ring only
  double min_y_frac = -1;  // sphere only
  Vec3 center = Vec3::Zero();
  std::vector<ExplicitView> views;  // explicit_list only
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  bool has_scene = false;
  AnalyticScene scene;

  enum class BackendKind { oracle, degraded, voxel };
  BackendKind backend_kind = BackendKind::oracle;
  DegradationSpec degradation;
  struct VoxelParams {
    Eigen::Vector3i resolution = Eigen::Vector3i(32, 32, 32);
    Vec3 bounds_min = Vec3(-1, -1, -1);
    Vec3 bounds_max = Vec3(1, 1, 1);
    double step = 0.05;
    double near = 0.2;
    double far = 5.0;
    Vec3 background = Vec3::Zero();
    double weight_threshold = 0.5;
    double init_density_raw = -2.0;
    double init_color_raw = 0.0;
    TrainOptions train;
  } voxel;
  std::string checkpoint;  // optional voxel checkpoint to load

  std::map<std::string, ViewSetSpec> view_sets;  // "train", "pool", "eval"

  SelectionPolicy policy;

  struct LoopParams {
    std::vector<std::string> initial_view_ids;
    int rounds = 1;
    int fit_budget_per_round = 0;
    RefineConfig refine;
    bool from_scratch = false;
    double cloud_threshold = 0.05;
    int cloud_stride = 2;
    std::vector<std::string> metrics = {"psnr", "ssim", "depth_mae"};
  } loop;

  struct UncertaintyParams {
    std::string mode = "pixel";  // pixel | image
    std::string sources = "train";
    std::string targets = "eval";
    double penalty = kDefaultUncoveredPenalty;
    int nearest_k = 0;
  } uncertainty;

  int ause_bins = 100;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace cfg_detail {

inline Primitive parse_primitive(const json& j, size_t index) {
  const std::string ctx = "scene.primitives[" + std::to_string(index) + "]";
  require(j.contains("type") && j["type"].is_string(), "config: missing 'type' in " + ctx);
  const std::string type = j["type"].get<std::string>();
  Primitive prim;
  prim.albedo = get_vec3_or(j, "albedo", Vec3(0.7, 0.7, 0.7), ctx);
  if (j.contains("checker")) {
    check_keys(j["checker"], {"color2", "scale"}, ctx + ".checker");
    CheckerTexture tex;
    tex.color2 = get_vec3_or(j["checker"], "color2", Vec3(0.1, 0.1, 0.1), ctx + ".checker");
    tex.scale = get_number_or(j["checker"], "scale", 0.25, ctx + ".checker");
    require(tex.scale > 0.0, "config: checker scale must be > 0 in " + ctx);
    prim.checker = tex;
  }
  if (type == "sphere") {
    check_keys(j, {"type", "albedo", "checker", "center", "radius"}, ctx);
    SphereGeom s;
    s.center = get_vec3(j, "center", ctx);
    s.radius = get_number(j, "radius", ctx);
    require(s.radius > 0.0, "config: radius must be > 0 in " + ctx);
    prim.geom = s;
  } else if (type == "box") {
    check_keys(j, {"type", "albedo", "checker", "min", "max"}, ctx);
    BoxGeom b;
    b.min = get_vec3(j, "min", ctx);
    b.max = get_vec3(j, "max", ctx);
    require((b.min.array() < b.max.array()).all(), "config: box min must be < max in " + ctx);
    prim.geom = b;
  } else if (type == "plane") {
    check_keys(j, {"type", "albedo", "checker", "normal", "offset", "center", "half_extent"}, ctx);
    RectGeom r;
    r.normal = get_vec3(j, "normal", ctx);
    require(r.normal.norm() > 0.0, "config: normal must be nonzero in " + ctx);
    r.normal.normalize();
    if (j.contains("center")) {
      r.center = get_vec3(j, "center", ctx);
      r.offset = get_number_or(j, "offset", r.normal.dot(r.center), ctx);
      require(std::abs(r.normal.dot(r.center) - r.offset) < 1e-9,
              "config: plane center must lie on the plane in " + ctx);
    } else {
      r.offset = get_number(j, "offset", ctx);
      r.center = r.offset * r.normal;
    }
    require(j.contains("half_extent") && j["half_extent"].is_array() &&
                j["half_extent"].size() == 2,
            "config: 'half_extent' in " + ctx + " must be [hu,hv]");
    r.half_u = j["half_extent"][0].get<double>();
    r.half_v = j["half_extent"][1].get<double>();
    require(r.half_u > 0.0 && r.half_v > 0.0, "config: half_extent must be > 0 in " + ctx);
    prim.geom = r;
  } else {
    throw std::invalid_argument("config: unknown primitive type '" + type + "' in " + ctx);
  }
  return prim;
}

inline json primitive_json(const Primitive& p) {
  json j;
  if (const auto* s = std::get_if<SphereGeom>(&p.geom)) {
    j["type"] = "sphere";
    j["center"] = vec3_json(s->center);
    j["radius"] = s->radius;
  } else if (const auto* b = std::get_if<BoxGeom>(&p.geom)) {
    j["type"] = "box";
    j["min"] = vec3_json(b->min);
    j["max"] = vec3_json(b->max);
  } else if (const auto* r = std::get_if<RectGeom>(&p.geom)) {
    j["type"] = "plane";
    j["normal"] = vec3_json(r->normal);
    j["offset"] = r->offset;
    j["center"] = vec3_json(r->center);
    j["half_extent"] = json::array({r->half_u, r->half_v});
  }
  j["albedo"] = vec3_json(p.albedo);
  if (p.checker) {
    j["checker"] = {{"color2", vec3_json(p.checker->color2)}, {"scale", p.checker->scale}};
  }
  return j;
}

inline AnalyticScene parse_scene(const json& j) {
  check_keys(j, {"background", "light_direction", "ambient", "primitives"}, "scene");
  AnalyticScene scene;
  scene.background = get_vec3_or(j, "background", Vec3::Zero(), "scene");
  scene.light.direction = get_vec3_or(j, "light_direction", Vec3(-0.4, -1.0, -0.3), "scene");
  scene.light.ambient = get_number_or(j, "ambient", 0.3, "scene");
  require(scene.light.ambient >= 0.0 && scene.light.ambient <= 1.0,
          "config: ambient must be in [0,1]");
  if (j.contains("primitives")) {
    require(j["primitives"].is_array(), "config: scene.primitives must be an array");
    for (size_t i = 0; i < j["primitives"].size(); ++i)
      scene.primitives.push_back(parse_primitive(j["primitives"][i], i));
  }
  scene.validate();
  return scene;
}

inline json scene_json(const AnalyticScene& s) {
  json j;
  j["background"] = vec3_json(s.background);
  j["light_direction"] = vec3_json(s.light.direction);
  j["ambient"] = s.light.ambient;
  j["primitives"] = json::array();
  for (const auto& p : s.primitives) j["primitives"].push_back(primitive_json(p));
  return j;
}

inline Intrinsics parse_image_spec(const json& j, const std::string& ctx) {
  check_keys(j, {"width", "height", "focal", "fx", "fy", "cx", "cy"}, ctx);
  int width = static_cast<int>(get_number_or(j, "width", 64, ctx));
  int height = static_cast<int>(get_number_or(j, "height", 64, ctx));
  double focal = get_number_or(j, "focal", 70.0, ctx);
  Intrinsics in = default_intrinsics(width, height, focal);
  in.fx = get_number_or(j, "fx", in.fx, ctx);
  in.fy = get_number_or(j, "fy", in.fy, ctx);
  in.cx = get_number_or(j, "cx", in.cx, ctx);
  in.cy = get_number_or(j, "cy", in.cy, ctx);
  if (in.fx <= 0.0) throw std::invalid_argument("config: fx must be > 0 in " + ctx);
  if (in.fy <= 0.0) throw std::invalid_argument("config: fy must be > 0 in " + ctx);
  in.validate();
  return in;
}

inline json image_spec_json(const Intrinsics& in) {
  return json{{"width", in.width}, {"height", in.height}, {"fx", in.fx},
              {"fy", in.fy},       {"cx", in.cx},         {"cy", in.cy}};
}

inline ViewSetSpec parse_view_set(const json& j, const std::string& name) {
  const std::string ctx = "views." + name;
  require(j.contains("type") && j["type"].is_string(), "config: missing 'type' in " + ctx);
  const std::string type = j["type"].get<std::string>();
  ViewSetSpec spec;
  spec.prefix = name;
  if (j.contains("prefix")) spec.prefix = j["prefix"].get<std::string>();
  if (j.contains("image")) spec.image = parse_image_spec(j["image"], ctx + ".image");
  if (type == "ring") {
    check_keys(j, {"type", "prefix", "image", "count", "radius", "height", "center"}, ctx);
    spec.type = ViewSetSpec::Type::ring;
    spec.count = static_cast<int>(get_number(j, "count", ctx));
    spec.radius = get_number(j, "radius", ctx);
    spec.height = get_number_or(j, "height", 0.0, ctx);
    spec.center = get_vec3_or(j, "center", Vec3::Zero(), ctx);
  } else if (type == "sphere") {
    check_keys(j, {"type", "prefix", "image", "count", "radius", "min_y_frac", "center"}, ctx);
    spec.type = ViewSetSpec::Type::sphere;
    spec.count = static_cast<int>(get_number(j, "count", ctx));
    spec.radius = get_number(j, "radius", ctx);
    spec.min_y_frac = get_number_or(j, "min_y_frac", -1.0, ctx);
    spec.center = get_vec3_or(j, "center", Vec3::Zero(), ctx);
  } else if (type == "explicit") {
    check_keys(j, {"type", "prefix", "image", "views"}, ctx);
    spec.type = ViewSetSpec::Type::explicit_list;
    require(j.contains("views") && j["views"].is_array() && !j["views"].empty(),
            "config: " + ctx + " needs a non-empty 'views' array");
    for (size_t i = 0; i < j["views"].size(); ++i) {
      const json& vj = j["views"][i];
      const std::string vctx = ctx + ".views[" + std::to_string(i) + "]";
      check_keys(vj, {"id", "eye", "look_at", "rotation", "translation"}, vctx);
      ExplicitView ev;
      require(vj.contains("id") && vj["id"].is_string(), "config: missing 'id' in " + vctx);
      ev.id = vj["id"].get<std::string>();
      if (vj.contains("eye")) {
        ev.eye = get_vec3(vj, "eye", vctx);
        ev.target = get_vec3_or(vj, "look_at", Vec3::Zero(), vctx);
      } else {
        require(vj.contains("rotation") && vj["rotation"].is_array() &&
                    vj["rotation"].size() == 9,
                "config: " + vctx + " needs 'eye' or a 9-element 'rotation'");
        Mat3 r;
        for (int k = 0; k < 9; ++k) r(k / 3, k % 3) = vj["rotation"][k].get<double>();
        ev.rotation = r;
        ev.translation = get_vec3(vj, "translation", vctx);
      }
      spec.views.push_back(ev);
    }
  } else {
    throw std::invalid_argument("config: unknown view set type '" + type + "' in " + ctx);
  }
  require(spec.count >= 1, "config: count must be >= 1 in " + ctx);
  return spec;
}

inline json view_set_json(const ViewSetSpec& s) {
  json j;
  j["image"] = image_spec_json(s.image);
  j["prefix"] = s.prefix;
  switch (s.type) {
    case ViewSetSpec::Type::ring:
      j["type"] = "ring";
      j["count"] = s.count;
      j["radius"] = s.radius;
      j["height"] = s.height;
      j["center"] = vec3_json(s.center);
      break;
    case ViewSetSpec::Type::sphere:
      j["type"] = "sphere";
      j["count"] = s.count;
      j["radius"] = s.radius;
      j["min_y_frac"] = s.min_y_frac;
      j["center"] = vec3_json(s.center);
      break;
    case ViewSetSpec::Type::explicit_list: {
      j["type"] = "explicit";
      json arr = json::array();
      for (const auto& v : s.views) {
        json vj{{"id", v.id}};
        if (v.eye) {
          vj["eye"] = vec3_json(*v.eye);
          vj["look_at"] = vec3_json(*v.target);
        } else {
          json r = json::array();
          for (int k = 0; k < 9; ++k) r.push_back((*v.rotation)(k / 3, k % 3));
          vj["rotation"] = r;
          vj["translation"] = vec3_json(*v.translation);
        }
        arr.push_back(vj);
      }
      j["views"] = arr;
      break;
    }
  }
  return j;
}

inline Region parse_region(const json& j) {
  check_keys(j, {"type", "x0", "y0", "x1", "y1", "center", "radius", "az_min", "az_max"},
             "backend.degradation.region");
  require(j.contains("type") && j["type"].is_string(),
          "config: missing 'type' in backend.degradation.region");
  const std::string type = j["type"].get<std::string>();
  const std::string ctx = "backend.degradation.region";
  if (type == "all") return RegionAll{};
  if (type == "image_rect") {
    RegionImageRect r;
    r.x0 = static_cast<int>(get_number(j, "x0", ctx));
    r.y0 = static_cast<int>(get_number(j, "y0", ctx));
    r.x1 = static_cast<int>(get_number(j, "x1", ctx));
    r.y1 = static_cast<int>(get_number(j, "y1", ctx));
    return r;
  }
  if (type == "world_sphere") {
    RegionWorldSphere r;
    r.center = get_vec3(j, "center", ctx);
    r.radius = get_number(j, "radius", ctx);
    require(r.radius > 0.0, "config: region radius must be > 0");
    return r;
  }
  if (type == "world_sector") {
    RegionWorldSector r;
    r.center = get_vec3(j, "center", ctx);
    r.az_min = get_number(j, "az_min", ctx);
    r.az_max = get_number(j, "az_max", ctx);
    return r;
  }
  throw std::invalid_argument("config: unknown region type '" + type + "'");
}

inline json region_json(const Region& r) {
  if (std::holds_alternative<RegionAll>(r)) return json{{"type", "all"}};
  if (const auto* ir = std::get_if<RegionImageRect>(&r))
    return json{{"type", "image_rect"}, {"x0", ir->x0}, {"y0", ir->y0}, {"x1", ir->x1},
                {"y1", ir->y1}};
  if (const auto* ws = std::get_if<RegionWorldSphere>(&r))
    return json{{"type", "world_sphere"}, {"center", vec3_json(ws->center)},
                {"radius", ws->radius}};
  const auto& sec = std::get<RegionWorldSector>(r);
  return json{{"type", "world_sector"}, {"center", vec3_json(sec.center)},
              {"az_min", sec.az_min}, {"az_max", sec.az_max}};
}

inline DegradationSpec parse_degradation(const json& j) {
  const std::string ctx = "backend.degradation";
  check_keys(j, {"region", "depth_bias", "depth_noise_sigma", "color_noise_sigma", "seed",
                 "apply_to_views", "drop_primitives"}, ctx);
  DegradationSpec spec;
  if (j.contains("region")) spec.region = parse_region(j["region"]);
  spec.depth_bias = get_number_or(j, "depth_bias", 0.0, ctx);
  spec.depth_noise_sigma = get_number_or(j, "depth_noise_sigma", 0.0, ctx);
  spec.color_noise_sigma = get_number_or(j, "color_noise_sigma", 0.0, ctx);
  spec.seed = static_cast<std::uint64_t>(get_number_or(j, "seed", 0.0, ctx));
  if (j.contains("apply_to_views")) {
    for (const auto& v : j["apply_to_views"]) spec.apply_to_views.push_back(v.get<std::string>());
  }
  if (j.contains("drop_primitives")) {
    for (const auto& v : j["drop_primitives"]) spec.drop_primitives.push_back(v.get<int>());
  }
  spec.validate();
  return spec;
}

inline json degradation_json(const DegradationSpec& s) {
  json j;
  j["region"] = region_json(s.region);
  j["depth_bias"] = s.depth_bias;
  j["depth_noise_sigma"] = s.depth_noise_sigma;
  j["color_noise_sigma"] = s.color_noise_sigma;
  j["seed"] = s.seed;
  j["apply_to_views"] = s.apply_to_views;
  j["drop_primitives"] = s.drop_primitives;
  return j;
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(const json& root) {
  using namespace cfg_detail;
  check_keys(root, {"seed", "out_dir", "scene", "backend", "views", "policy", "loop",
                    "uncertainty", "ause_bins"}, "config");
  ExperimentConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(get_number_or(root, "seed", 0.0, "config"));
  if (root.contains("out_dir")) cfg.out_dir = root["out_dir"].get<std::string>();
  if (root.contains("scene")) {
    cfg.scene = parse_scene(root["scene"]);
    cfg.has_scene = true;
  }
  if (root.contains("views")) {
    check_keys(root["views"], {"train", "pool", "eval"}, "views");
    for (const std::string name : {"train", "pool", "eval"}) {
      if (root["views"].contains(name))
        cfg.view_sets[name] = parse_view_set(root["views"][name], name);
    }
  }
  if (root.contains("backend")) {
    const json& b = root["backend"];
    check_keys(b, {"type", "degradation", "voxel", "checkpoint"}, "backend");
    std::string type = b.contains("type") ? b["type"].get<std::string>() : "oracle";
    if (type == "oracle") {
      cfg.backend_kind = ExperimentConfig::BackendKind::oracle;
    } else if (type == "degraded") {
      cfg.backend_kind = ExperimentConfig::BackendKind::degraded;
      if (b.contains("degradation")) cfg.degradation = parse_degradation(b["degradation"]);
    } else if (type == "voxel") {
      cfg.backend_kind = ExperimentConfig::BackendKind::voxel;
    } else {
      throw std::invalid_argument("config: unknown backend type '" + type + "'");
    }
    if (b.contains("voxel")) {
      const json& v = b["voxel"];
      check_keys(v, {"resolution", "bounds_min", "bounds_max", "step", "near", "far",
                     "background", "weight_threshold", "init_density_raw", "init_color_raw",
                     "train"}, "backend.voxel");
      auto& vp = cfg.voxel;
      if (v.contains("resolution")) {
        require(v["resolution"].is_array() && v["resolution"].size() == 3,
                "config: backend.voxel.resolution must be [nx,ny,nz]");
        for (int k = 0; k < 3; ++k) vp.resolution[k] = v["resolution"][k].get<int>();
      }
      vp.bounds_min = get_vec3_or(v, "bounds_min", vp.bounds_min, "backend.voxel");
      vp.bounds_max = get_vec3_or(v, "bounds_max", vp.bounds_max, "backend.voxel");
      vp.step = get_number_or(v, "step", vp.step, "backend.voxel");
      vp.near = get_number_or(v, "near", vp.near, "backend.voxel");
      vp.far = get_number_or(v, "far", vp.far, "backend.voxel");
      vp.background = get_vec3_or(v, "background", vp.background, "backend.voxel");
      vp.weight_threshold = get_number_or(v, "weight_threshold", vp.weight_threshold,
                                          "backend.voxel");
      vp.init_density_raw = get_number_or(v, "init_density_raw", vp.init_density_raw,
                                          "backend.voxel");
      vp.init_color_raw = get_number_or(v, "init_color_raw", vp.init_color_raw, "backend.voxel");
      if (v.contains("train")) {
        check_keys(v["train"], {"learning_rate", "ray_batch", "momentum"}, "backend.voxel.train");
        vp.train.learning_rate =
            get_number_or(v["train"], "learning_rate", vp.train.learning_rate,
                          "backend.voxel.train");
        vp.train.ray_batch = static_cast<int>(
            get_number_or(v["train"], "ray_batch", vp.train.ray_batch, "backend.voxel.train"));
        vp.train.momentum =
            get_number_or(v["train"], "momentum", vp.train.momentum, "backend.voxel.train");
      }
      require(vp.near > 0.0 && vp.near < vp.far, "config: backend.voxel needs 0 < near < far");
      require(vp.step > 0.0, "config: backend.voxel.step must be > 0");
    }
    if (b.contains("checkpoint")) {
      cfg.checkpoint = b["checkpoint"].get<std::string>();
      require(std::filesystem::exists(cfg.checkpoint),
              "config: checkpoint file does not exist: " + cfg.checkpoint);
    }
  }
  if (root.contains("policy")) {
    const json& p = root["policy"];
    check_keys(p, {"kind", "seed", "penalty", "nearest_k"}, "policy");
    std::string kind = p.contains("kind") ? p["kind"].get<std::string>() : "warprf_image";
    if (kind == "warprf_image") cfg.policy.kind = SelectionPolicy::Kind::warprf_image;
    else if (kind == "warprf_depth") cfg.policy.kind = SelectionPolicy::Kind::warprf_depth;
    else if (kind == "random") cfg.policy.kind = SelectionPolicy::Kind::random;
    else if (kind == "farthest") cfg.policy.kind = SelectionPolicy::Kind::farthest;
    else throw std::invalid_argument("config: unknown policy kind '" + kind + "'");
    cfg.policy.seed = static_cast<std::uint64_t>(get_number_or(p, "seed", 0.0, "policy"));
    cfg.policy.penalty = get_number_or(p, "penalty", kDefaultUncoveredPenalty, "policy");
    cfg.policy.nearest_k = static_cast<int>(get_number_or(p, "nearest_k", 0.0, "policy"));
  }
  if (root.contains("loop")) {
    const json& l = root["loop"];
    check_keys(l, {"initial_view_ids", "rounds", "fit_budget_per_round", "refine",
                   "from_scratch", "cloud_threshold", "cloud_stride", "metrics"}, "loop");
    if (l.contains("initial_view_ids")) {
      for (const auto& v : l["initial_view_ids"])
        cfg.loop.initial_view_ids.push_back(v.get<std::string>());
    }
    cfg.loop.rounds = static_cast<int>(get_number_or(l, "rounds", 1.0, "loop"));
    require(cfg.loop.rounds >= 1, "config: loop.rounds must be >= 1");
    cfg.loop.fit_budget_per_round =
        static_cast<int>(get_number_or(l, "fit_budget_per_round", 0.0, "loop"));
    if (l.contains("refine")) {
      const json& r = l["refine"];
      check_keys(r, {"mode", "k", "radius", "iters"}, "loop.refine");
      std::string mode = r.contains("mode") ? r["mode"].get<std::string>() : "off";
      if (mode == "off") cfg.loop.refine.mode = RefineConfig::Mode::off;
      else if (mode == "top_k") cfg.loop.refine.mode = RefineConfig::Mode::top_k;
      else throw std::invalid_argument("config: unknown refine mode '" + mode + "'");
      cfg.loop.refine.k = static_cast<int>(get_number_or(r, "k", 3.0, "loop.refine"));
      cfg.loop.refine.radius = get_number_or(r, "radius", 0.2, "loop.refine");
      cfg.loop.refine.iters = static_cast<int>(get_number_or(r, "iters", 5.0, "loop.refine"));
      require(cfg.loop.refine.radius > 0.0, "config: loop.refine.radius must be > 0");
    }
    if (l.contains("from_scratch")) cfg.loop.from_scratch = l["from_scratch"].get<bool>();
    cfg.loop.cloud_threshold = get_number_or(l, "cloud_threshold", 0.05, "loop");
    cfg.loop.cloud_stride = static_cast<int>(get_number_or(l, "cloud_stride", 2.0, "loop"));
    if (l.contains("metrics")) {
      cfg.loop.metrics.clear();
      for (const auto& m : l["metrics"]) cfg.loop.metrics.push_back(m.get<std::string>());
    }
  }
  if (root.contains("uncertainty")) {
    const json& u = root["uncertainty"];
    check_keys(u, {"mode", "sources", "targets", "penalty", "nearest_k"}, "uncertainty");
    if (u.contains("mode")) cfg.uncertainty.mode = u["mode"].get<std::string>();
    require(cfg.uncertainty.mode == "pixel" || cfg.uncertainty.mode == "image",
            "config: uncertainty.mode must be 'pixel' or 'image'");
    if (u.contains("sources")) cfg.uncertainty.sources = u["sources"].get<std::string>();
    if (u.contains("targets")) cfg.uncertainty.targets = u["targets"].get<std::string>();
    cfg.uncertainty.penalty =
        get_number_or(u, "penalty", kDefaultUncoveredPenalty, "uncertainty");
    cfg.uncertainty.nearest_k =
        static_cast<int>(get_number_or(u, "nearest_k", 0.0, "uncertainty"));
  }
  cfg.ause_bins = static_cast<int>(cfg_detail::get_number_or(root, "ause_bins", 100.0, "config"));
  require(cfg.ause_bins >= 2, "config: ause_bins must be >= 2");
  return cfg;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  using namespace cfg_detail;
  json root;
  root["seed"] = cfg.seed;
  root["out_dir"] = cfg.out_dir;
  if (cfg.has_scene) root["scene"] = scene_json(cfg.scene);
  json views;
  for (const auto& [name, spec] : cfg.view_sets) views[name] = view_set_json(spec);
  if (!views.is_null()) root["views"] = views;
  json backend;
  switch (cfg.backend_kind) {
    case ExperimentConfig::BackendKind::oracle: backend["type"] = "oracle"; break;
    case ExperimentConfig::BackendKind::degraded:
      backend["type"] = "degraded";
      backend["degradation"] = degradation_json(cfg.degradation);
      break;
    case ExperimentConfig::BackendKind::voxel: backend["type"] = "voxel"; break;
  }
  {
    const auto& vp = cfg.voxel;
    json v;
    v["resolution"] = json::array({vp.resolution.x(), vp.resolution.y(), vp.resolution.z()});
    v["bounds_min"] = vec3_json(vp.bounds_min);
    v["bounds_max"] = vec3_json(vp.bounds_max);
    v["step"] = vp.step;
    v["near"] = vp.near;
    v["far"] = vp.far;
    v["background"] = vec3_json(vp.background);
    v["weight_threshold"] = vp.weight_threshold;
    v["init_density_raw"] = vp.init_density_raw;
    v["init_color_raw"] = vp.init_color_raw;
    v["train"] = json{{"learning_rate", vp.train.learning_rate},
                      {"ray_batch", vp.train.ray_batch},
                      {"momentum", vp.train.momentum}};
    backend["voxel"] = v;
  }
  if (!cfg.checkpoint.empty()) backend["checkpoint"] = cfg.checkpoint;
  root["backend"] = backend;
  root["policy"] = json{{"kind", to_string(cfg.policy.kind)},
                        {"seed", cfg.policy.seed},
                        {"penalty", cfg.policy.penalty},
                        {"nearest_k", cfg.policy.nearest_k}};
  json refine;
  refine["mode"] = cfg.loop.refine.mode == RefineConfig::Mode::off ? "off" : "top_k";
  refine["k"] = cfg.loop.refine.k;
  refine["radius"] = cfg.loop.refine.radius;
  refine["iters"] = cfg.loop.refine.iters;
  root["loop"] = json{{"initial_view_ids", cfg.loop.initial_view_ids},
                      {"rounds", cfg.loop.rounds},
                      {"fit_budget_per_round", cfg.loop.fit_budget_per_round},
                      {"refine", refine},
                      {"from_scratch", cfg.loop.from_scratch},
                      {"cloud_threshold", cfg.loop.cloud_threshold},
                      {"cloud_stride", cfg.loop.cloud_stride},
                      {"metrics", cfg.loop.metrics}};
  root["uncertainty"] = json{{"mode", cfg.uncertainty.mode},
                             {"sources", cfg.uncertainty.sources},
                             {"targets", cfg.uncertainty.targets},
                             {"penalty", cfg.uncertainty.penalty},
                             {"nearest_k", cfg.uncertainty.nearest_k}};
  root["ause_bins"] = cfg.ause_bins;
  return root;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

/// Loads and validates a config file. Parse errors report line and column.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::invalid_argument("config: parse error at line " + std::to_string(line) +
                                ", column " + std::to_string(col) + " in " + path);
  }
  return parse_config(root);
}

inline void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  require(out.good(), "config: cannot open for writing: " + path);
  out << config_to_json(cfg).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

/// Instantiates the views of a named set ("train", "pool", "eval").
inline std::vector<View> make_views(const ExperimentConfig& cfg, const std::string& set_name) {
  auto it = cfg.view_sets.find(set_name);
  require(it != cfg.view_sets.end(), "config: view set '" + set_name + "' not defined");
  const ViewSetSpec& s = it->second;
  switch (s.type) {
    case ViewSetSpec::Type::ring:
      return ring_views(s.count, s.radius, s.height, s.center, s.image, s.prefix);
    case ViewSetSpec::Type::sphere:
      return fibonacci_sphere_views(s.count, s.radius, s.center, s.image, s.prefix,
                                    s.min_y_frac);
    case ViewSetSpec::Type::explicit_list: {
      std::vector<View> out;
      for (const auto& ev : s.views) {
        View v;
        v.intrinsics = s.image;
        v.id = ev.id;
        if (ev.eye) {
          v.pose = look_at(*ev.eye, *ev.target);
        } else {
          v.pose.rotation = *ev.rotation;
          v.pose.translation = *ev.translation;
        }
        v.validate();
        out.push_back(v);
      }
      return out;
    }
  }
  return {};
}

/// Builds the configured backend. Oracle and degraded kinds require a scene;
/// the voxel kind starts from the checkpoint when given, else from init values.
inline std::unique_ptr<TrainableBackend> make_backend(const ExperimentConfig& cfg,
                                                      int threads = 1) {
  switch (cfg.backend_kind) {
    case ExperimentConfig::BackendKind::oracle:
      require(cfg.has_scene, "config: oracle backend requires a scene");
      return std::make_unique<OracleBackend>(cfg.scene, threads);
    case ExperimentConfig::BackendKind::degraded:
      require(cfg.has_scene, "config: degraded backend requires a scene");
      return std::make_unique<DegradedOracleBackend>(cfg.scene, cfg.degradation, threads);
    case ExperimentConfig::BackendKind::voxel: {
      VoxelField field;
      if (!cfg.checkpoint.empty()) {
        field = read_voxel_checkpoint(cfg.checkpoint);
      } else {
        const auto& vp = cfg.voxel;
        field = make_voxel_field(vp.resolution, vp.bounds_min, vp.bounds_max, vp.step, vp.near,
                                 vp.far, vp.background, vp.init_density_raw, vp.init_color_raw);
        field.weight_threshold = vp.weight_threshold;
      }
      return std::make_unique<VoxelBackend>(std::move(field), cfg.voxel.train, threads);
    }
  }
  throw std::logic_error("config: unreachable backend kind");
}

/// Ground-truth backend for loops and evaluation: the clean oracle.
inline std::unique_ptr<TrainableBackend> make_gt_backend(const ExperimentConfig& cfg,
                                                         int threads = 1) {
  require(cfg.has_scene, "config: ground-truth backend requires a scene");
  return std::make_unique<OracleBackend>(cfg.scene, threads);
}

inline LoopConfig make_loop_config(const ExperimentConfig& cfg) {
  LoopConfig lc;
  lc.initial_view_ids = cfg.loop.initial_view_ids;
  // no pool ids given: a defined train set seeds the loop as disjoint views
  if (lc.initial_view_ids.empty() && cfg.view_sets.count("train"))
    lc.initial_views = make_views(cfg, "train");
  lc.rounds = cfg.loop.rounds;
  lc.fit_budget_per_round = cfg.loop.fit_budget_per_round;
  lc.candidate_pool = make_views(cfg, "pool");
  if (cfg.view_sets.count("eval")) lc.eval_views = make_views(cfg, "eval");
  lc.refine = cfg.loop.refine;
  lc.seed = cfg.seed;
  lc.refit_from_scratch = cfg.loop.from_scratch;
  lc.cloud_threshold = cfg.loop.cloud_threshold;
  lc.cloud_stride = cfg.loop.cloud_stride;
  lc.metric_names = cfg.loop.metrics;
  return lc;
}

}  // namespace warprf
