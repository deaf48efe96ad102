#include "warprf/camera.hpp"
#include "warprf/rng.hpp"
#include "warprf/scene.hpp"
#include "warprf/warp.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace warprf;
using testutil::simple_view;

TEST(Project, OnAxisPoint) {
  View v = simple_view();
  Projection p = project(Vec3(0, 0, 2), v);
  EXPECT_NEAR(p.pixel.x(), 50.0, 1e-12);
  EXPECT_NEAR(p.pixel.y(), 50.0, 1e-12);
  EXPECT_NEAR(p.depth, 2.0, 1e-12);
}

TEST(Project, LateralOffset) {
  View v = simple_view();
  Projection p = project(Vec3(0.2, 0, 2), v);
  EXPECT_NEAR(p.pixel.x(), 60.0, 1e-12);  // fx * 0.2 / 2 = 10
  EXPECT_NEAR(p.pixel.y(), 50.0, 1e-12);
  EXPECT_NEAR(p.depth, 2.0, 1e-12);
}

TEST(Project, BehindCamera) {
  View v = simple_view();
  Projection p = project(Vec3(0.1, 0.1, -1), v);
  EXPECT_NEAR(p.depth, -1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(p.pixel.x()));
}

TEST(Project, ZeroDepthYieldsNonFinitePixel) {
  View v = simple_view();
  Projection p = project(Vec3(0.1, 0.0, 0.0), v);
  EXPECT_FALSE(std::isfinite(p.pixel.x()));
}

TEST(Unproject, PrincipalPoint) {
  View v = simple_view();
  Vec3 w = unproject(Vec2(50, 50), 2.0, v);
  EXPECT_NEAR((w - Vec3(0, 0, 2)).norm(), 0.0, 1e-12);
}

TEST(Unproject, RejectsNonPositiveDepth) {
  View v = simple_view();
  EXPECT_THROW(unproject(Vec2(50, 50), 0.0, v), std::invalid_argument);
  EXPECT_THROW(unproject(Vec2(50, 50), -1.0, v), std::invalid_argument);
}

TEST(Unproject, NinetyDegreeYaw) {
  // R = yaw 90 deg about +y maps camera +z to world +x. Hand multiply:
  // X_c = (0,0,1), X_w = R X_c + t = (1,0,0) + (0.5,0,0).
  View v = simple_view();
  v.pose.rotation << 0, 0, 1,
                     0, 1, 0,
                    -1, 0, 0;
  v.pose.translation = Vec3(0.5, 0, 0);
  Vec3 w = unproject(Vec2(50, 50), 1.0, v);
  EXPECT_NEAR((w - Vec3(1.5, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Unproject, RoundTripProperty) {
  for (int i = 0; i < 200; ++i) {
    View v = testutil::random_inward_view(42, i);
    double px = rng::uniform(7, 2 * i) * (v.intrinsics.width - 1);
    double py = rng::uniform(7, 2 * i + 1) * (v.intrinsics.height - 1);
    double d = 0.2 + 5.0 * rng::uniform(9, i);
    Vec3 w = unproject(Vec2(px, py), d, v);
    Projection p = project(w, v);
    EXPECT_NEAR(p.pixel.x(), px, 1e-9);
    EXPECT_NEAR(p.pixel.y(), py, 1e-9);
    EXPECT_NEAR(p.depth, d, 1e-9);
  }
}

TEST(Pose, RelativeTransformConsistency) {
  for (int i = 0; i < 50; ++i) {
    Pose a, b;
    a.rotation = testutil::random_rotation(11, 2 * i);
    a.translation = Vec3(rng::uniform(3, 3 * i), rng::uniform(3, 3 * i + 1),
                         rng::uniform(3, 3 * i + 2));
    b.rotation = testutil::random_rotation(11, 2 * i + 1);
    b.translation = Vec3(rng::uniform(5, 3 * i), rng::uniform(5, 3 * i + 1),
                         rng::uniform(5, 3 * i + 2));
    Pose fwd = a.inverse() * b;   // b's camera -> a's camera
    Pose bwd = b.inverse() * a;
    Pose ident = fwd * bwd;
    EXPECT_LT((ident.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(ident.translation.norm(), 1e-9);
  }
}

TEST(Pose, LookAtIsOrthonormal) {
  for (int i = 0; i < 20; ++i) {
    Vec3 eye(rng::uniform(1, 3 * i) * 4 - 2, rng::uniform(1, 3 * i + 1) * 4 - 2,
             rng::uniform(1, 3 * i + 2) * 4 - 2);
    if (eye.norm() < 0.2) continue;
    Pose p = look_at(eye, Vec3::Zero());
    p.validate();
    // +z column points from eye toward the target
    EXPECT_NEAR((p.rotation.col(2) - (-eye).normalized()).norm(), 0.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Bilinear sampling
// ---------------------------------------------------------------------------

TEST(Bilinear, StaysInsideContributingHull) {
  ScalarMap map(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (rng::uniform(21, map.idx(x, y)) > 0.3) map.set(x, y, rng::uniform(22, map.idx(x, y)));
  for (int i = 0; i < 2000; ++i) {
    double x = rng::uniform(23, 2 * i) * 7.0;
    double y = rng::uniform(23, 2 * i + 1) * 7.0;
    auto s = sample_bilinear(map, x, y);
    if (!s) continue;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double lo = 1e30, hi = -1e30;
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        int xi = x0 + dx, yi = y0 + dy;
        if (xi < 0 || xi >= 8 || yi < 0 || yi >= 8 || !map.is_valid(xi, yi)) continue;
        lo = std::min(lo, map.at(xi, yi));
        hi = std::max(hi, map.at(xi, yi));
      }
    EXPECT_GE(*s, lo - 1e-12);
    EXPECT_LE(*s, hi + 1e-12);
  }
}

TEST(Bilinear, ExactAtIntegerPixels) {
  ScalarMap map(4, 4);
  map.set(2, 1, 3.25);
  auto s = sample_bilinear(map, 2.0, 1.0);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(*s, 3.25);
}

TEST(Bilinear, RenormalizesOverValidNeighbors) {
  ScalarMap map(4, 4);
  map.set(0, 0, 2.0);
  map.set(1, 0, 4.0);
  // (0,1) and (1,1) invalid: sample at (0.5, 0.5) uses only the top row
  auto s = sample_bilinear(map, 0.5, 0.5);
  ASSERT_TRUE(s.has_value());
  EXPECT_NEAR(*s, 3.0, 1e-12);
  EXPECT_FALSE(sample_bilinear(map, 2.5, 2.5).has_value());
}

// ---------------------------------------------------------------------------
// Warping
// ---------------------------------------------------------------------------

namespace {

DepthMap constant_depth(const View& v, double d) {
  DepthMap m(v.intrinsics.width, v.intrinsics.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m.set(x, y, d);
  return m;
}

}  // namespace

TEST(WarpDepth, IdentityWarpReproducesSource) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = testutil::random_inward_view(31, 0);
  DepthMap depth = oracle_render(scene, v).depth;
  DepthMap warped = warp_depth(v, depth, v, depth);
  double max_err = 0.0;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!depth.is_valid(x, y)) {
        EXPECT_FALSE(warped.is_valid(x, y));
        continue;
      }
      ASSERT_TRUE(warped.is_valid(x, y));
      max_err = std::max(max_err, std::abs(warped.at(x, y) - depth.at(x, y)));
    }
  }
  EXPECT_LT(max_err, 1e-6);
}

// Analytic oracle: fronto-parallel plane at z=2, source shifted 0.2 m along x,
// fx=100 -> the correspondence lands exactly 10 px to the left and the warped
// depth is 2.0 everywhere in the overlap.
TEST(WarpDepth, TranslatedPlaneMatchesAnalyticOracle) {
  View target = simple_view(100, 100.0, "t");
  View source = simple_view(100, 100.0, "s");
  source.pose.translation = Vec3(0.2, 0, 0);
  DepthMap tgt_depth = constant_depth(target, 2.0);
  DepthMap src_depth = constant_depth(source, 2.0);
  DepthMap warped = warp_depth(source, src_depth, target, tgt_depth);
  int valid_count = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      double expected_px = x - 10.0;
      bool overlap = expected_px >= 0.0 && expected_px <= 99.0;
      EXPECT_EQ(warped.is_valid(x, y), overlap) << "pixel " << x << "," << y;
      if (overlap) {
        EXPECT_NEAR(warped.at(x, y), 2.0, 1e-9);
        ++valid_count;
      }
    }
  }
  EXPECT_EQ(valid_count, 90 * 100);
}

TEST(WarpDepth, BackFacingSourceIsFullyInvalid) {
  View target = simple_view(50, 60.0, "t");
  View source = simple_view(50, 60.0, "s");
  source.pose.rotation = Eigen::AngleAxisd(M_PI, Vec3(0, 1, 0)).toRotationMatrix();
  DepthMap tgt_depth = constant_depth(target, 2.0);
  DepthMap src_depth = constant_depth(source, 2.0);
  DepthMap warped = warp_depth(source, src_depth, target, tgt_depth);
  EXPECT_EQ(warped.count_valid(), 0);
}

TEST(WarpDepth, NoValidOutputFromNegativeTargetDepth) {
  // Recompute the target-frame depth of every valid output; none may be <= 0.
  AnalyticScene scene = testutil::sphere_ground_scene();
  View target = testutil::random_inward_view(77, 1);
  View source = testutil::random_inward_view(77, 2);
  DepthMap dt = oracle_render(scene, target).depth;
  DepthMap ds = oracle_render(scene, source).depth;
  DepthMap warped = warp_depth(source, ds, target, dt);
  for (int y = 0; y < warped.height; ++y)
    for (int x = 0; x < warped.width; ++x)
      if (warped.is_valid(x, y)) ASSERT_GT(warped.at(x, y), 0.0);
}

TEST(WarpDepth, ResolutionMismatchThrows) {
  View target = simple_view(50, 60.0, "t");
  View source = simple_view(50, 60.0, "s");
  DepthMap tgt_depth = constant_depth(target, 2.0);
  DepthMap bad(49, 50);
  EXPECT_THROW(warp_depth(source, bad, target, tgt_depth), std::invalid_argument);
}

TEST(WarpImage, IdentityWarpReproducesSource) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = testutil::random_inward_view(37, 3);
  RenderOutput r = oracle_render(scene, v);
  ImageBuffer warped = warp_image(v, r.image, v, r.depth);
  double max_err = 0.0;
  for (int y = 0; y < r.depth.height; ++y) {
    for (int x = 0; x < r.depth.width; ++x) {
      if (!r.depth.is_valid(x, y)) continue;
      ASSERT_TRUE(warped.is_valid(x, y));
      max_err = std::max(max_err, (warped.at(x, y) - r.image.at(x, y)).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LT(max_err, 1e-6);
}

TEST(WarpImage, UniformColorSceneWarpsExactly) {
  AnalyticScene scene = testutil::plane_scene(2.0, /*checker=*/false);
  scene.light.ambient = 1.0;  // flat shading -> exactly uniform color
  View target = simple_view(64, 70.0, "t");
  View source = simple_view(64, 70.0, "s");
  source.pose.translation = Vec3(0.15, 0.05, 0);
  RenderOutput rt = oracle_render(scene, target);
  RenderOutput rs = oracle_render(scene, source);
  Vec3 uniform = rs.image.at(32, 32);
  ImageBuffer warped = warp_image(source, rs.image, target, rt.depth);
  int valid = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (warped.is_valid(x, y)) {
        EXPECT_NEAR((warped.at(x, y) - uniform).cwiseAbs().maxCoeff(), 0.0, 1e-12);
        ++valid;
      }
  EXPECT_GT(valid, 1000);
}

// Warped textured plane vs the target's own oracle render: only bilinear blur
// at checker edges separates them.
TEST(WarpImage, TexturedPlaneMatchesTargetRender) {
  AnalyticScene scene = testutil::plane_scene(2.0, /*checker=*/true);
  View target = simple_view(100, 100.0, "t");
  View source = simple_view(100, 100.0, "s");
  source.pose.translation = Vec3(0.2, 0, 0);
  RenderOutput rt = oracle_render(scene, target);
  RenderOutput rs = oracle_render(scene, source);
  ImageBuffer warped = warp_image(source, rs.image, target, rt.depth);
  double sum_abs = 0.0;
  long n = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      if (!warped.is_valid(x, y)) continue;
      Vec3 d = (warped.at(x, y) - rt.image.at(x, y)).cwiseAbs();
      sum_abs += (d.x() + d.y() + d.z()) / 3.0;
      ++n;
    }
  }
  ASSERT_GT(n, 5000);
  EXPECT_LT(sum_abs / n, 0.02);
}
