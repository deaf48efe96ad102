#pragma once

// The two multi-view-consistency uncertainty estimators.
//
// Pixel-wise: render depth at the target and at every source view, warp each
// source depth into the target, and average the per-pixel absolute depth
// difference over the sources whose warp is valid there. Warps that land
// behind a camera or out of bounds are excluded from the average.
//
// Image-level: warp each source image into the target and score the view by
// the per-pixel MINIMUM reprojection difference (robust to occlusions),
// summed over the image. Pixels no source reaches are charged a configurable
// penalty so unobserved regions read as maximally uncertain.

#include "warprf/backend.hpp"
#include "warprf/camera.hpp"
#include "warprf/core.hpp"
#include "warprf/warp.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace warprf {

/// Per-pixel uncertainty with the number of source views that contributed.
struct UncertaintyMap {
  ScalarMap map;
  std::vector<int> contributing;

  UncertaintyMap() = default;
  UncertaintyMap(int w, int h)
      : map(w, h), contributing(static_cast<size_t>(w) * h, 0) {}
};

/// Image-level uncertainty of one view.
struct ViewScore {
  std::string view_id;
  double score = 0.0;
  double covered_fraction = 0.0;  // fraction of target pixels with >= 1 valid source
};

constexpr double kDefaultUncoveredPenalty = 1.0;  // max per-pixel color difference

/// Average absolute depth difference per pixel over the valid warps; the
/// rendering-free core of the pixel-wise estimator.
inline UncertaintyMap pixel_uncertainty_from_maps(const DepthMap& target_depth,
                                                  const std::vector<DepthMap>& warped_depths) {
  for (const auto& w : warped_depths) {
    require(w.width == target_depth.width && w.height == target_depth.height,
            "uncertainty: warped depth resolution mismatch");
  }
  UncertaintyMap out(target_depth.width, target_depth.height);
  for (int y = 0; y < target_depth.height; ++y) {
    for (int x = 0; x < target_depth.width; ++x) {
      if (!target_depth.is_valid(x, y)) continue;
      double acc = 0.0;
      int count = 0;
      for (const auto& w : warped_depths) {
        if (!w.is_valid(x, y)) continue;
        acc += std::abs(target_depth.at(x, y) - w.at(x, y));
        ++count;
      }
      if (count == 0) continue;
      out.map.set(x, y, acc / count);
      out.contributing[out.map.idx(x, y)] = count;
    }
  }
  return out;
}

struct ImageScore {
  double score = 0.0;
  double covered_fraction = 0.0;
};

/// Sum over pixels of the minimum mean-absolute color difference across valid
/// warps; uncovered pixels contribute `penalty` each. The rendering-free core
/// of the image-level estimator.
inline ImageScore image_uncertainty_from_buffers(const ImageBuffer& target_image,
                                                 const std::vector<ImageBuffer>& warped_images,
                                                 double penalty = kDefaultUncoveredPenalty) {
  for (const auto& w : warped_images) {
    require(w.width == target_image.width && w.height == target_image.height,
            "uncertainty: warped image resolution mismatch");
  }
  KahanSum sum;
  long covered = 0;
  const long total = static_cast<long>(target_image.width) * target_image.height;
  for (int y = 0; y < target_image.height; ++y) {
    for (int x = 0; x < target_image.width; ++x) {
      double best = -1.0;
      if (target_image.is_valid(x, y)) {
        for (const auto& w : warped_images) {
          if (!w.is_valid(x, y)) continue;
          Vec3 diff = (target_image.at(x, y) - w.at(x, y)).cwiseAbs();
          double d = (diff.x() + diff.y() + diff.z()) / 3.0;
          if (best < 0.0 || d < best) best = d;
        }
      }
      if (best >= 0.0) {
        sum.add(best);
        ++covered;
      } else {
        sum.add(penalty);
      }
    }
  }
  ImageScore out;
  out.score = sum.value();
  out.covered_fraction = total > 0 ? static_cast<double>(covered) / total : 0.0;
  return out;
}

/// Optional speed knob: keep only the k sources nearest to the target by
/// camera-center distance (k <= 0 keeps everything).
inline std::vector<View> nearest_sources(const std::vector<View>& sources, const View& target,
                                         int k) {
  if (k <= 0 || static_cast<size_t>(k) >= sources.size()) return sources;
  std::vector<std::pair<double, size_t>> order;
  order.reserve(sources.size());
  for (size_t i = 0; i < sources.size(); ++i)
    order.emplace_back(camera_center_distance(sources[i].pose, target.pose), i);
  std::sort(order.begin(), order.end());
  std::vector<View> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(sources[order[i].second]);
  return out;
}

/// Pixel-wise depth-consistency uncertainty of `target` given source views.
inline UncertaintyMap pixel_uncertainty(const RenderingBackend& backend,
                                        const std::vector<View>& sources, const View& target) {
  require(!sources.empty(), "pixel_uncertainty: need at least one source view");
  require(backend.can_render_depth(), "pixel_uncertainty: backend cannot render depth");
  DepthMap target_depth = backend.render(target).depth;
  std::vector<DepthMap> warped;
  warped.reserve(sources.size());
  for (const View& src : sources) {
    DepthMap src_depth = backend.render(src).depth;
    warped.push_back(warp_depth(src, src_depth, target, target_depth));
  }
  return pixel_uncertainty_from_maps(target_depth, warped);
}

/// Image-level min-reprojection uncertainty of `target` given source views.
inline ViewScore image_uncertainty(const RenderingBackend& backend,
                                   const std::vector<View>& sources, const View& target,
                                   double penalty = kDefaultUncoveredPenalty) {
  require(!sources.empty(), "image_uncertainty: need at least one source view");
  require(backend.can_render_image() && backend.can_render_depth(),
          "image_uncertainty: backend cannot render image and depth");
  RenderOutput tgt = backend.render(target);
  std::vector<ImageBuffer> warped;
  warped.reserve(sources.size());
  for (const View& src : sources) {
    ImageBuffer src_image = backend.render(src).image;
    warped.push_back(warp_image(src, src_image, target, tgt.depth));
  }
  ImageScore s = image_uncertainty_from_buffers(tgt.image, warped, penalty);
  return ViewScore{target.id, s.score, s.covered_fraction};
}

}  // namespace warprf
