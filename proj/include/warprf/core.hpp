#pragma once

// Shared value types: scalar grids with validity masks, RGB image buffers,
// and small numeric helpers used throughout the library.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace warprf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// H x W scalar field with a per-pixel validity mask. Row-major, index = y*width + x.
/// Holds depth maps (meters, valid => value > 0 and finite), error maps and
/// uncertainty surfaces (valid => value >= 0).
struct ScalarMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  ScalarMap() = default;
  ScalarMap(int w, int h, double fill = 0.0, bool fill_valid = false)
      : width(w), height(h),
        values(static_cast<size_t>(w) * h, fill),
        valid(static_cast<size_t>(w) * h, fill_valid ? 1 : 0) {}

  size_t size() const { return values.size(); }
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  double at(int x, int y) const { return values[idx(x, y)]; }
  bool is_valid(int x, int y) const { return valid[idx(x, y)] != 0; }
  void set(int x, int y, double v) {
    values[idx(x, y)] = v;
    valid[idx(x, y)] = 1;
  }
  void invalidate(int x, int y) { valid[idx(x, y)] = 0; }

  int count_valid() const {
    int n = 0;
    for (auto v : valid) n += v ? 1 : 0;
    return n;
  }
};

using DepthMap = ScalarMap;

/// H x W RGB buffer, channels in [0,1], with a validity mask.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<Vec3> values;
  std::vector<std::uint8_t> valid;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, const Vec3& fill = Vec3::Zero(), bool fill_valid = false)
      : width(w), height(h),
        values(static_cast<size_t>(w) * h, fill),
        valid(static_cast<size_t>(w) * h, fill_valid ? 1 : 0) {}

  size_t size() const { return values.size(); }
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  const Vec3& at(int x, int y) const { return values[idx(x, y)]; }
  bool is_valid(int x, int y) const { return valid[idx(x, y)] != 0; }
  void set(int x, int y, const Vec3& c) {
    values[idx(x, y)] = c;
    valid[idx(x, y)] = 1;
  }
};

struct RenderOutput {
  ImageBuffer image;
  DepthMap depth;
};

/// Compensated (Kahan) accumulator; keeps large reductions stable.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline Vec3 clamp01(const Vec3& v) {
  return Vec3(clamp01(v.x()), clamp01(v.y()), clamp01(v.z()));
}

/// Runs fn(y_begin, y_end) over disjoint row chunks. Each row is written by
/// exactly one worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_for_rows(int height, int threads, Fn&& fn) {
  if (threads <= 1 || height <= 1) {
    fn(0, height);
    return;
  }
  int n = std::min(threads, height);
  std::vector<std::thread> pool;
  pool.reserve(n);
  int chunk = (height + n - 1) / n;
  for (int i = 0; i < n; ++i) {
    int y0 = i * chunk;
    int y1 = std::min(height, y0 + chunk);
    if (y0 >= y1) break;
    pool.emplace_back([&fn, y0, y1] { fn(y0, y1); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace warprf
