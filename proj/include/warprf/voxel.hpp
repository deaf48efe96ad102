#pragma once

// Trainable voxel radiance field. Density and color live on a regular grid of
// nodes (softplus / sigmoid activations, trilinearly interpolated), rendered
// by alpha compositing along rays:
//
//   a_i = 1 - exp(-sigma_i * step),  T_i = prod_{j<i} (1 - a_j)
//   color = sum_i a_i T_i c_i + T_end * background
//   depth = sum_i a_i T_i t_i        (valid when sum_i a_i T_i >= threshold)
//
// Rays are sampled uniformly in camera-frame depth, so rendered depth shares
// the planar-depth convention of the rest of the library. Training runs SGD
// on the photometric L2 loss with gradients derived in closed form through
// the compositing recurrence and activations.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"
#include "warprf/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace warprf {

struct VoxelField {
  Eigen::Vector3i resolution = Eigen::Vector3i(8, 8, 8);  // grid nodes per axis
  Vec3 bounds_min = Vec3(-1, -1, -1);
  Vec3 bounds_max = Vec3(1, 1, 1);
  double step = 0.05;  // sample spacing in camera-depth meters
  double near = 0.1;
  double far = 4.0;
  Vec3 background = Vec3::Zero();
  double weight_threshold = 0.5;  // accumulated weight gate for depth validity

  std::vector<double> density_raw;  // nx*ny*nz, activated by softplus
  std::vector<double> color_raw;    // 3 per node, activated by sigmoid

  size_t node_count() const {
    return static_cast<size_t>(resolution.x()) * resolution.y() * resolution.z();
  }

  void validate() const {
    require((resolution.array() >= 2).all(), "voxel: resolution must be >= 2 per axis");
    require((bounds_min.array() < bounds_max.array()).all(), "voxel: bounds_min must be < bounds_max");
    require(step > 0.0, "voxel: step must be > 0");
    require(near > 0.0 && near < far, "voxel: need 0 < near < far");
    require(density_raw.size() == node_count() && color_raw.size() == 3 * node_count(),
            "voxel: parameter arrays do not match resolution");
  }
};

inline VoxelField make_voxel_field(const Eigen::Vector3i& resolution, const Vec3& bmin,
                                   const Vec3& bmax, double step, double near, double far,
                                   const Vec3& background = Vec3::Zero(),
                                   double init_density_raw = -2.0, double init_color_raw = 0.0) {
  VoxelField f;
  f.resolution = resolution;
  f.bounds_min = bmin;
  f.bounds_max = bmax;
  f.step = step;
  f.near = near;
  f.far = far;
  f.background = background;
  f.density_raw.assign(f.node_count(), init_density_raw);
  f.color_raw.assign(3 * f.node_count(), init_color_raw);
  f.validate();
  return f;
}

namespace detail {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct TrilinearStencil {
  size_t node[8];
  double w[8];
  bool inside = false;
};

inline TrilinearStencil stencil_at(const VoxelField& f, const Vec3& p) {
  TrilinearStencil st;
  const int nx = f.resolution.x(), ny = f.resolution.y(), nz = f.resolution.z();
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    double span = f.bounds_max[a] - f.bounds_min[a];
    g[a] = (p[a] - f.bounds_min[a]) / span * (f.resolution[a] - 1);
    if (g[a] < 0.0 || g[a] > f.resolution[a] - 1) return st;  // outside: zero density
  }
  int ix = std::min(static_cast<int>(g.x()), nx - 2);
  int iy = std::min(static_cast<int>(g.y()), ny - 2);
  int iz = std::min(static_cast<int>(g.z()), nz - 2);
  double fx = g.x() - ix, fy = g.y() - iy, fz = g.z() - iz;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        st.node[k] = (static_cast<size_t>(iz + dz) * ny + (iy + dy)) * nx + (ix + dx);
        st.w[k] = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) * (dz ? fz : 1.0 - fz);
        ++k;
      }
    }
  }
  st.inside = true;
  return st;
}

/// Per-sample state recorded by the forward pass; reused by the backward pass.
struct RaySample {
  TrilinearStencil stencil;
  double t = 0.0;
  double sigma = 0.0;
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;
  double transmittance = 1.0;  // T_i, before this sample
};

struct RayWorkspace {
  std::vector<RaySample> samples;
};

struct RayRadiance {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  double weight = 0.0;  // sum of compositing weights
};

/// Marches one ray; dir_world must have unit z in the camera frame so that the
/// ray parameter equals camera depth. Fills ws when record_samples is set.
inline RayRadiance march_ray(const VoxelField& f, const Vec3& origin, const Vec3& dir_world,
                             RayWorkspace* ws) {
  // epsilon keeps exact multiples of step from losing their last sample
  const int n_samples = static_cast<int>((f.far - f.near) / f.step + 1e-9);
  RayRadiance out;
  double transmittance = 1.0;
  Vec3 color_acc = Vec3::Zero();
  double depth_acc = 0.0;
  double weight_acc = 0.0;
  if (ws) ws->samples.clear();
  for (int i = 0; i < n_samples; ++i) {
    double t = f.near + (i + 0.5) * f.step;
    Vec3 p = origin + t * dir_world;
    TrilinearStencil st = stencil_at(f, p);
    if (!st.inside) continue;
    double sigma = 0.0;
    Vec3 c = Vec3::Zero();
    for (int k = 0; k < 8; ++k) {
      sigma += st.w[k] * softplus(f.density_raw[st.node[k]]);
      for (int ch = 0; ch < 3; ++ch)
        c[ch] += st.w[k] * sigmoid(f.color_raw[3 * st.node[k] + ch]);
    }
    double alpha = 1.0 - std::exp(-sigma * f.step);
    double w = alpha * transmittance;
    color_acc += w * c;
    depth_acc += w * t;
    weight_acc += w;
    if (ws) {
      RaySample s;
      s.stencil = st;
      s.t = t;
      s.sigma = sigma;
      s.color = c;
      s.alpha = alpha;
      s.transmittance = transmittance;
      ws->samples.push_back(s);
    }
    transmittance *= (1.0 - alpha);
    // same truncation with and without sample recording, so the gradient is
    // exact for the loss actually computed
    if (transmittance < 1e-12) break;
  }
  out.color = color_acc + transmittance * f.background;
  out.depth = depth_acc;
  out.weight = weight_acc;
  return out;
}

inline Vec3 pixel_ray_dir(const View& view, int x, int y) {
  Vec3 dir_cam((x - view.intrinsics.cx) / view.intrinsics.fx,
               (y - view.intrinsics.cy) / view.intrinsics.fy, 1.0);
  return view.pose.rotation * dir_cam;
}

}  // namespace detail

/// Renders image and depth for a view. Depth pixels are valid only where the
/// accumulated compositing weight reaches the field's threshold.
inline RenderOutput voxel_render(const VoxelField& field, const View& view, int threads = 1) {
  field.validate();
  const Intrinsics& in = view.intrinsics;
  RenderOutput out;
  out.image = ImageBuffer(in.width, in.height, field.background, true);
  out.depth = DepthMap(in.width, in.height);
  const Vec3 origin = view.pose.translation;
  parallel_for_rows(in.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < in.width; ++x) {
        Vec3 dir = detail::pixel_ray_dir(view, x, y);
        detail::RayRadiance r = detail::march_ray(field, origin, dir, nullptr);
        out.image.set(x, y, clamp01(r.color));
        if (r.weight >= field.weight_threshold && r.depth > 0.0) out.depth.set(x, y, r.depth);
      }
    }
  });
  return out;
}

struct TrainView {
  View view;
  ImageBuffer image;
};

/// One training ray: (view index, pixel).
struct RayRef {
  int view_index = 0;
  int x = 0;
  int y = 0;
};

/// Photometric loss over the ray batch: sum_r ||C(r) - C_gt(r)||^2. When
/// grads are non-null, accumulates d(loss)/d(raw params) into them (arrays
/// must be pre-sized and zeroed by the caller).
inline double voxel_batch_loss(const VoxelField& field, const std::vector<TrainView>& views,
                               const std::vector<RayRef>& rays,
                               std::vector<double>* grad_density = nullptr,
                               std::vector<double>* grad_color = nullptr) {
  require(!rays.empty(), "voxel: empty ray batch");
  detail::RayWorkspace ws;
  double loss_acc = 0.0;
  for (const RayRef& ray : rays) {
    const TrainView& tv = views[ray.view_index];
    if (!tv.image.is_valid(ray.x, ray.y)) continue;
    Vec3 dir = detail::pixel_ray_dir(tv.view, ray.x, ray.y);
    detail::RayRadiance r =
        detail::march_ray(field, tv.view.pose.translation, dir, grad_density ? &ws : nullptr);
    Vec3 residual = r.color - tv.image.at(ray.x, ray.y);
    loss_acc += residual.squaredNorm();
    if (!grad_density) continue;

    // dL/dC for this ray; the 1/batch factor is applied after the loop.
    Vec3 g = 2.0 * residual;
    const int n = static_cast<int>(ws.samples.size());
    double t_end = n > 0 ? ws.samples[n - 1].transmittance * (1.0 - ws.samples[n - 1].alpha) : 1.0;
    // suffix = sum_{i>k} w_i c_i + T_end * background, built back to front
    Vec3 suffix = t_end * field.background;
    for (int k = n - 1; k >= 0; --k) {
      const detail::RaySample& s = ws.samples[k];
      double w = s.alpha * s.transmittance;
      double t_next = s.transmittance * (1.0 - s.alpha);
      // dC/dsigma_k = step * (c_k * T_{k+1} - suffix)
      Vec3 dc_dsigma = field.step * (s.color * t_next - suffix);
      double dl_dsigma = g.dot(dc_dsigma);
      for (int i = 0; i < 8; ++i) {
        size_t node = s.stencil.node[i];
        double wtri = s.stencil.w[i];
        (*grad_density)[node] +=
            dl_dsigma * wtri * detail::sigmoid(field.density_raw[node]);  // softplus'
        for (int ch = 0; ch < 3; ++ch) {
          double sg = detail::sigmoid(field.color_raw[3 * node + ch]);
          (*grad_color)[3 * node + ch] += g[ch] * w * wtri * sg * (1.0 - sg);
        }
      }
      suffix += w * s.color;
    }
  }
  return loss_acc;
}

struct TrainOptions {
  double learning_rate = 2.0;
  int ray_batch = 256;
  double momentum = 0.0;  // plain SGD by default
};

/// SGD on the photometric loss over randomly sampled ray batches. Ray picks
/// are counter-based on (seed, step, ray), so the trace is reproducible and
/// independent of scheduling. Returns the per-step batch loss.
inline std::vector<double> voxel_train(VoxelField& field, const std::vector<TrainView>& views,
                                       int steps, const TrainOptions& opt, std::uint64_t seed) {
  require(!views.empty(), "voxel_train: need at least one training view");
  require(opt.ray_batch >= 1, "voxel_train: ray_batch must be >= 1");
  field.validate();
  for (const auto& tv : views) {
    require(tv.image.width == tv.view.intrinsics.width &&
                tv.image.height == tv.view.intrinsics.height,
            "voxel_train: image does not match view resolution");
  }
  std::vector<double> trace;
  trace.reserve(std::max(steps, 0));
  std::vector<double> grad_density(field.density_raw.size());
  std::vector<double> grad_color(field.color_raw.size());
  std::vector<double> vel_density, vel_color;
  if (opt.momentum > 0.0) {
    vel_density.assign(field.density_raw.size(), 0.0);
    vel_color.assign(field.color_raw.size(), 0.0);
  }
  std::vector<RayRef> batch(opt.ray_batch);
  for (int s = 0; s < steps; ++s) {
    const std::uint64_t key = rng::combine(seed, static_cast<std::uint64_t>(s));
    for (int r = 0; r < opt.ray_batch; ++r) {
      const TrainView& tv = views[rng::uniform_index(key, 2 * r, views.size())];
      size_t px = rng::uniform_index(key, 2 * r + 1,
                                     static_cast<size_t>(tv.image.width) * tv.image.height);
      batch[r] = RayRef{static_cast<int>(&tv - views.data()),
                        static_cast<int>(px % tv.image.width),
                        static_cast<int>(px / tv.image.width)};
    }
    std::fill(grad_density.begin(), grad_density.end(), 0.0);
    std::fill(grad_color.begin(), grad_color.end(), 0.0);
    trace.push_back(voxel_batch_loss(field, views, batch, &grad_density, &grad_color));
    if (opt.momentum > 0.0) {
      for (size_t i = 0; i < field.density_raw.size(); ++i) {
        vel_density[i] = opt.momentum * vel_density[i] - opt.learning_rate * grad_density[i];
        field.density_raw[i] += vel_density[i];
      }
      for (size_t i = 0; i < field.color_raw.size(); ++i) {
        vel_color[i] = opt.momentum * vel_color[i] - opt.learning_rate * grad_color[i];
        field.color_raw[i] += vel_color[i];
      }
    } else {
      for (size_t i = 0; i < field.density_raw.size(); ++i)
        field.density_raw[i] -= opt.learning_rate * grad_density[i];
      for (size_t i = 0; i < field.color_raw.size(); ++i)
        field.color_raw[i] -= opt.learning_rate * grad_color[i];
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Checkpoint format: one ASCII header line
//   VXF1 nx ny nz bminx bminy bminz bmaxx bmaxy bmaxz step near far br bg bb wthresh
// followed by raw little-endian float32 arrays: density (nx*ny*nz), then
// color (3*nx*ny*nz).
// ---------------------------------------------------------------------------

inline void write_voxel_checkpoint(const std::string& path, const VoxelField& f) {
  f.validate();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "voxel checkpoint: cannot open for writing: " + path);
  char header[512];
  std::snprintf(header, sizeof(header),
                "VXF1 %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                "%.17g %.17g %.17g %.17g\n",
                f.resolution.x(), f.resolution.y(), f.resolution.z(), f.bounds_min.x(),
                f.bounds_min.y(), f.bounds_min.z(), f.bounds_max.x(), f.bounds_max.y(),
                f.bounds_max.z(), f.step, f.near, f.far, f.background.x(), f.background.y(),
                f.background.z(), f.weight_threshold);
  out << header;
  auto write_floats = [&out](const std::vector<double>& src) {
    std::vector<float> buf(src.size());
    for (size_t i = 0; i < src.size(); ++i) buf[i] = static_cast<float>(src[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  };
  write_floats(f.density_raw);
  write_floats(f.color_raw);
  require(out.good(), "voxel checkpoint: write failed: " + path);
}

inline VoxelField read_voxel_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "voxel checkpoint: cannot open: " + path);
  std::string line;
  std::getline(in, line);
  VoxelField f;
  char magic[8] = {0};
  double vals[13];
  int nx, ny, nz;
  int n = std::sscanf(line.c_str(), "%7s %d %d %d %lg %lg %lg %lg %lg %lg %lg %lg %lg %lg %lg %lg %lg",
                      magic, &nx, &ny, &nz, &vals[0], &vals[1], &vals[2], &vals[3], &vals[4],
                      &vals[5], &vals[6], &vals[7], &vals[8], &vals[9], &vals[10], &vals[11],
                      &vals[12]);
  require(n == 17 && std::string(magic) == "VXF1", "voxel checkpoint: bad header: " + path);
  f.resolution = Eigen::Vector3i(nx, ny, nz);
  f.bounds_min = Vec3(vals[0], vals[1], vals[2]);
  f.bounds_max = Vec3(vals[3], vals[4], vals[5]);
  f.step = vals[6];
  f.near = vals[7];
  f.far = vals[8];
  f.background = Vec3(vals[9], vals[10], vals[11]);
  f.weight_threshold = vals[12];
  auto read_floats = [&in, &path](size_t count) {
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float)));
    require(in.gcount() == static_cast<std::streamsize>(count * sizeof(float)),
            "voxel checkpoint: truncated payload: " + path);
    std::vector<double> out(count);
    for (size_t i = 0; i < count; ++i) out[i] = buf[i];
    return out;
  };
  f.density_raw = read_floats(f.node_count());
  f.color_raw = read_floats(3 * f.node_count());
  f.validate();
  return f;
}

}  // namespace warprf
