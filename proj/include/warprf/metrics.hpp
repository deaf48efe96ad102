#pragma once

// Evaluation metrics: sparsification curves and AUSE for uncertainty quality,
// plus standard image metrics (PSNR, SSIM) and depth MAE.
//
// Sparsification: sort pixels by descending uncertainty (ties by ascending
// pixel index), remove the top k/num_bins share, and record the mean absolute
// error of what remains, normalized by the full-set MAE. AUSE is the mean gap
// between that curve and the oracle curve obtained by removing in order of
// true error.

#include "warprf/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace warprf {

struct SparsificationCurve {
  std::vector<double> fractions;  // k / num_bins, k = 0..num_bins-1
  std::vector<double> mae;        // normalized remaining MAE per fraction
  double normalization = 0.0;     // raw MAE at fraction 0
};

inline SparsificationCurve sparsification(const std::vector<double>& uncertainty,
                                          const std::vector<double>& error,
                                          const std::vector<std::uint8_t>& mask, int num_bins) {
  require(uncertainty.size() == error.size() && error.size() == mask.size(),
          "sparsification: input sizes differ");
  require(num_bins >= 2, "sparsification: num_bins must be >= 2");
  std::vector<size_t> order;
  order.reserve(mask.size());
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) order.push_back(i);
  const size_t n = order.size();
  require(n > 0, "sparsification: empty mask");
  require(n >= static_cast<size_t>(num_bins), "sparsification: fewer masked pixels than bins");
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (uncertainty[a] != uncertainty[b]) return uncertainty[a] > uncertainty[b];
    return a < b;
  });

  // suffix_sum[r] = sum of |error| over pixels remaining after removing the
  // top r; built once so every bin is O(1)
  std::vector<double> suffix(n + 1, 0.0);
  for (size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + std::abs(error[order[i]]);

  SparsificationCurve curve;
  curve.fractions.reserve(num_bins);
  curve.mae.reserve(num_bins);
  curve.normalization = suffix[0] / static_cast<double>(n);
  for (int k = 0; k < num_bins; ++k) {
    size_t removed = (static_cast<size_t>(k) * n) / num_bins;
    double mae = suffix[removed] / static_cast<double>(n - removed);
    curve.fractions.push_back(static_cast<double>(k) / num_bins);
    curve.mae.push_back(curve.normalization > 0.0 ? mae / curve.normalization : mae);
  }
  return curve;
}

/// Area under the sparsification error: mean signed gap between the
/// uncertainty-ordered curve and the oracle (true-error-ordered) curve.
inline double ause(const std::vector<double>& uncertainty, const std::vector<double>& error,
                   const std::vector<std::uint8_t>& mask, int num_bins) {
  SparsificationCurve by_unc = sparsification(uncertainty, error, mask, num_bins);
  SparsificationCurve oracle = sparsification(error, error, mask, num_bins);
  double acc = 0.0;
  for (int k = 0; k < num_bins; ++k) acc += by_unc.mae[k] - oracle.mae[k];
  return acc / num_bins;
}

constexpr double kPsnrCap = 99.0;  // reported for identical images

/// PSNR in dB over jointly valid pixels, peak 1.0.
inline double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require(a.width == b.width && a.height == b.height, "psnr: resolution mismatch");
  KahanSum se;
  long count = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    Vec3 d = a.values[i] - b.values[i];
    se.add(d.squaredNorm());
    count += 3;
  }
  require(count > 0, "psnr: no jointly valid pixels");
  double mse = se.value() / count;
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  double sum = 0.0;
  double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace detail

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), computed per
/// channel at every position where the window fits, then averaged.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b, int window = 11, double k1 = 0.01,
                   double k2 = 0.03) {
  require(a.width == b.width && a.height == b.height, "ssim: resolution mismatch");
  require(a.width >= window && a.height >= window, "ssim: image smaller than window");
  const double c1 = k1 * k1;
  const double c2 = k2 * k2;
  const std::vector<double> w1d = detail::gaussian_window(window, 1.5);
  const int half = window / 2;

  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    KahanSum acc;
    long count = 0;
    for (int y = half; y < a.height - half; ++y) {
      for (int x = half; x < a.width - half; ++x) {
        double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx) {
            double w = w1d[dy + half] * w1d[dx + half];
            double va = a.at(x + dx, y + dy)[ch];
            double vb = b.at(x + dx, y + dy)[ch];
            ma += w * va;
            mb += w * vb;
            maa += w * va * va;
            mbb += w * vb * vb;
            mab += w * va * vb;
          }
        }
        double var_a = maa - ma * ma;
        double var_b = mbb - mb * mb;
        double cov = mab - ma * mb;
        double s = ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        acc.add(s);
        ++count;
      }
    }
    total += acc.value() / count;
  }
  return total / 3.0;
}

/// Mean absolute depth difference over jointly valid pixels.
inline double depth_mae(const DepthMap& pred, const DepthMap& gt) {
  require(pred.width == gt.width && pred.height == gt.height, "depth_mae: resolution mismatch");
  KahanSum acc;
  long count = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    acc.add(std::abs(pred.values[i] - gt.values[i]));
    ++count;
  }
  require(count > 0, "depth_mae: no jointly valid pixels");
  return acc.value() / count;
}

}  // namespace warprf
