#pragma once

// Point-cloud reconstruction metrics: Accuracy (mean prediction-to-GT nearest
// distance), Completion (mean GT-to-prediction), Completion Ratio and F1 at a
// distance threshold. Nearest neighbors use a uniform spatial hash grid with
// an expanding-shell search that is exact; tiny clouds fall back to brute
// force.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

namespace warprf {

struct PointCloud {
  std::vector<Vec3> points;

  void validate() const {
    for (const auto& p : points)
      require(p.allFinite(), "point cloud: non-finite point");
  }
};

struct CloudMetrics {
  double acc = 0.0;
  double comp = 0.0;
  double cr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellKeyHash {
  size_t operator()(const CellKey& k) const {
    return static_cast<size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

class PointGrid {
 public:
  explicit PointGrid(const std::vector<Vec3>& pts) : points_(pts) {
    Vec3 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    double diag = (hi - lo).norm();
    cell_ = diag > 0.0 ? diag / std::max(4.0, std::cbrt(static_cast<double>(pts.size()))) : 1.0;
    for (size_t i = 0; i < pts.size(); ++i) cells_[key_of(pts[i])].push_back(i);
  }

  /// Exact nearest-neighbor distance via expanding Chebyshev shells: after
  /// scanning all cells within shell radius s, any unscanned point is at
  /// least s * cell away, so the search stops as soon as best <= s * cell.
  double nearest_distance(const Vec3& q) const {
    CellKey c = key_of(q);
    double best = std::numeric_limits<double>::infinity();
    for (long long s = 0;; ++s) {
      scan_shell(q, c, s, best);
      if (best <= static_cast<double>(s) * cell_) return best;
    }
  }

 private:
  CellKey key_of(const Vec3& p) const {
    return CellKey{static_cast<long long>(std::floor(p.x() / cell_)),
                   static_cast<long long>(std::floor(p.y() / cell_)),
                   static_cast<long long>(std::floor(p.z() / cell_))};
  }

  void scan_cell(const Vec3& q, const CellKey& k, double& best) const {
    auto it = cells_.find(k);
    if (it == cells_.end()) return;
    for (size_t i : it->second) best = std::min(best, (points_[i] - q).norm());
  }

  void scan_shell(const Vec3& q, const CellKey& c, long long s, double& best) const {
    if (s == 0) {
      scan_cell(q, c, best);
      return;
    }
    for (long long dx = -s; dx <= s; ++dx) {
      for (long long dy = -s; dy <= s; ++dy) {
        for (long long dz = -s; dz <= s; ++dz) {
          if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != s) continue;
          scan_cell(q, CellKey{c.x + dx, c.y + dy, c.z + dz}, best);
        }
      }
    }
  }

  const std::vector<Vec3>& points_;
  double cell_ = 1.0;
  std::unordered_map<CellKey, std::vector<size_t>, CellKeyHash> cells_;
};

inline std::vector<double> nearest_distances(const std::vector<Vec3>& from,
                                             const std::vector<Vec3>& to) {
  std::vector<double> out(from.size());
  if (to.size() < 32) {
    for (size_t i = 0; i < from.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : to) best = std::min(best, (from[i] - p).norm());
      out[i] = best;
    }
    return out;
  }
  PointGrid grid(to);
  for (size_t i = 0; i < from.size(); ++i) out[i] = grid.nearest_distance(from[i]);
  return out;
}

}  // namespace detail

inline CloudMetrics cloud_metrics(const PointCloud& pred, const PointCloud& gt,
                                  double threshold) {
  require(!pred.points.empty() && !gt.points.empty(), "cloud_metrics: empty cloud");
  require(threshold > 0.0, "cloud_metrics: threshold must be > 0");
  pred.validate();
  gt.validate();
  std::vector<double> d_pred = detail::nearest_distances(pred.points, gt.points);
  std::vector<double> d_gt = detail::nearest_distances(gt.points, pred.points);
  CloudMetrics m;
  KahanSum acc, comp;
  long under_pred = 0, under_gt = 0;
  for (double d : d_pred) {
    acc.add(d);
    if (d < threshold) ++under_pred;
  }
  for (double d : d_gt) {
    comp.add(d);
    if (d < threshold) ++under_gt;
  }
  m.acc = acc.value() / d_pred.size();
  m.comp = comp.value() / d_gt.size();
  m.cr = static_cast<double>(under_gt) / d_gt.size();
  m.precision = static_cast<double>(under_pred) / d_pred.size();
  m.recall = m.cr;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

/// Back-projects valid depth pixels (on a stride grid) to world points.
inline PointCloud backproject_depth(const DepthMap& depth, const View& view, int stride = 1) {
  require(stride >= 1, "backproject_depth: stride must be >= 1");
  PointCloud cloud;
  for (int y = 0; y < depth.height; y += stride) {
    for (int x = 0; x < depth.width; x += stride) {
      if (!depth.is_valid(x, y)) continue;
      cloud.points.push_back(unproject(Vec2(x, y), depth.at(x, y), view));
    }
  }
  return cloud;
}

}  // namespace warprf
