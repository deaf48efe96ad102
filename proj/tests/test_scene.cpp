#include "warprf/degrade.hpp"
#include "warprf/scene.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace warprf;
using testutil::simple_view;

TEST(OracleRender, EmptySceneIsBackgroundOnly) {
  AnalyticScene scene;
  scene.background = Vec3(0.2, 0.4, 0.6);
  View v = simple_view(32, 40.0);
  RenderOutput r = oracle_render(scene, v);
  EXPECT_EQ(r.depth.count_valid(), 0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      EXPECT_EQ((r.image.at(x, y) - scene.background).norm(), 0.0);
}

TEST(OracleRender, UnitSphereCenterDepth) {
  AnalyticScene scene;
  Primitive p;
  p.geom = SphereGeom{Vec3(0, 0, 3), 1.0};
  scene.primitives.push_back(p);
  View v = simple_view();
  RenderOutput r = oracle_render(scene, v);
  ASSERT_TRUE(r.depth.is_valid(50, 50));
  EXPECT_NEAR(r.depth.at(50, 50), 2.0, 1e-9);
}

TEST(OracleRender, FrontoParallelPlaneHasPlanarDepth) {
  AnalyticScene scene = testutil::plane_scene(2.0);
  View v = simple_view(64, 40.0);
  RenderOutput r = oracle_render(scene, v);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (r.depth.is_valid(x, y)) EXPECT_NEAR(r.depth.at(x, y), 2.0, 1e-12);
  EXPECT_GT(r.depth.count_valid(), 3000);  // wide wall covers nearly the frame
}

TEST(OracleRender, BoxFaceDepthAndNormal) {
  AnalyticScene scene;
  Primitive p;
  p.geom = BoxGeom{Vec3(-0.5, -0.5, 2.0), Vec3(0.5, 0.5, 3.0)};
  scene.primitives.push_back(p);
  View v = simple_view();
  RenderOutput r = oracle_render(scene, v);
  ASSERT_TRUE(r.depth.is_valid(50, 50));
  EXPECT_NEAR(r.depth.at(50, 50), 2.0, 1e-12);
  // ray through a pixel far outside the face misses
  EXPECT_FALSE(r.depth.is_valid(0, 0));
}

TEST(OracleRender, ShadingIsViewIndependent) {
  // Untextured sphere: color differences can only come from shading, which is
  // Lambertian + ambient and therefore a function of the surface point alone.
  AnalyticScene scene = testutil::sphere_ground_scene();
  for (auto& p : scene.primitives) p.checker.reset();
  Vec3 probe(0.0, 0.35 + 0.45, 0.0);  // top of the sphere
  View a = simple_view(64, 70.0, "a");
  a.pose = look_at(Vec3(0.3, 2.3, 0.4), probe);
  View b = simple_view(64, 70.0, "b");
  b.pose = look_at(Vec3(-0.5, 2.4, -0.2), probe);
  RenderOutput ra = oracle_render(scene, a);
  RenderOutput rb = oracle_render(scene, b);
  Projection pa = project(probe, a);
  Projection pb = project(probe, b);
  Vec3 ca = ra.image.at(static_cast<int>(std::lround(pa.pixel.x())),
                        static_cast<int>(std::lround(pa.pixel.y())));
  Vec3 cb = rb.image.at(static_cast<int>(std::lround(pb.pixel.x())),
                        static_cast<int>(std::lround(pb.pixel.y())));
  EXPECT_LT((ca - cb).cwiseAbs().maxCoeff(), 0.05);  // same surface patch, same shading
}

TEST(OracleRender, DeterministicAcrossThreadCounts) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = testutil::random_inward_view(5, 0);
  RenderOutput a = oracle_render(scene, v, 1);
  RenderOutput b = oracle_render(scene, v, 4);
  EXPECT_EQ(a.depth.values, b.depth.values);
  EXPECT_EQ(a.depth.valid, b.depth.valid);
  for (size_t i = 0; i < a.image.size(); ++i) EXPECT_EQ(a.image.values[i], b.image.values[i]);
}

// ---------------------------------------------------------------------------
// Degradation
// ---------------------------------------------------------------------------

TEST(Degraded, ZeroSpecMatchesOracle) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = testutil::random_inward_view(9, 0);
  DegradationSpec spec;
  DegradedRender d = degraded_render(scene, spec, v);
  RenderOutput o = oracle_render(scene, v);
  EXPECT_EQ(d.depth.values, o.depth.values);
  EXPECT_EQ(d.depth.valid, o.depth.valid);
  for (size_t i = 0; i < d.true_error.size(); ++i)
    if (d.true_error.valid[i]) EXPECT_EQ(d.true_error.values[i], 0.0);
}

TEST(Degraded, LeftHalfBiasGivesExactErrorMap) {
  AnalyticScene scene = testutil::plane_scene(2.0);
  View v = simple_view(64, 40.0);
  DegradationSpec spec;
  spec.region = RegionImageRect{0, 0, 32, 64};
  spec.depth_bias = 0.1;
  DegradedRender d = degraded_render(scene, spec, v);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!d.true_error.is_valid(x, y)) continue;
      EXPECT_NEAR(d.true_error.at(x, y), x < 32 ? 0.1 : 0.0, 1e-12);
    }
  }
}

// Sample-statistics oracle: for gaussian noise the expected |error| is
// sigma * sqrt(2/pi).
TEST(Degraded, NoiseMagnitudeMatchesHalfNormalMean) {
  AnalyticScene scene = testutil::plane_scene(2.0);
  View v = simple_view(128, 80.0);
  DegradationSpec spec;
  spec.depth_noise_sigma = 0.05;
  spec.seed = 1234;
  DegradedRender d = degraded_render(scene, spec, v);
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < d.true_error.size(); ++i) {
    if (!d.true_error.valid[i]) continue;
    sum += d.true_error.values[i];
    ++n;
  }
  ASSERT_GT(n, 10000);
  double expected = 0.05 * std::sqrt(2.0 / M_PI);
  double mean = sum / n;
  EXPECT_GT(mean, expected * 0.8);
  EXPECT_LT(mean, expected * 1.2);
}

TEST(Degraded, TrueErrorEqualsDegradedMinusOracle) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = testutil::random_inward_view(13, 0, 48);
  DegradationSpec spec;
  spec.region = RegionWorldSphere{Vec3(0, 0.35, 0), 0.6};
  spec.depth_bias = 0.07;
  spec.depth_noise_sigma = 0.01;
  spec.seed = 7;
  DegradedRender d = degraded_render(scene, spec, v);
  RenderOutput o = oracle_render(scene, v);
  for (int y = 0; y < d.depth.height; ++y) {
    for (int x = 0; x < d.depth.width; ++x) {
      bool both = d.depth.is_valid(x, y) && o.depth.is_valid(x, y);
      EXPECT_EQ(d.true_error.is_valid(x, y), both);
      if (both) EXPECT_EQ(d.true_error.at(x, y), std::abs(d.depth.at(x, y) - o.depth.at(x, y)));
    }
  }
}

TEST(Degraded, AppliesOnlyToListedViews) {
  AnalyticScene scene = testutil::plane_scene(2.0);
  View affected = simple_view(32, 20.0, "target");
  View clean = simple_view(32, 20.0, "other");
  DegradationSpec spec;
  spec.depth_bias = 0.1;
  spec.apply_to_views = {"target"};
  DegradedRender da = degraded_render(scene, spec, affected);
  DegradedRender dc = degraded_render(scene, spec, clean);
  EXPECT_NEAR(da.depth.at(16, 16), 2.1, 1e-12);
  EXPECT_NEAR(dc.depth.at(16, 16), 2.0, 1e-12);
}

TEST(Degraded, DropPrimitiveCreatesMissingGeometry) {
  AnalyticScene scene = testutil::sphere_ground_scene();
  View v = simple_view(64, 70.0);
  v.pose = look_at(Vec3(0, 0.6, 2.6), Vec3(0, 0.35, 0));
  DegradationSpec spec;
  spec.drop_primitives = {1};  // the sphere
  DegradedRender d = degraded_render(scene, spec, v);
  RenderOutput o = oracle_render(scene, v);
  Projection center = project(Vec3(0, 0.35, 0), v);
  int cx = static_cast<int>(std::lround(center.pixel.x()));
  int cy = static_cast<int>(std::lround(center.pixel.y()));
  ASSERT_TRUE(o.depth.is_valid(cx, cy));
  // behind the sphere there is nothing: depth invalid or much farther
  if (d.depth.is_valid(cx, cy)) EXPECT_GT(d.depth.at(cx, cy), o.depth.at(cx, cy) + 0.3);
}

TEST(Degraded, WorldSectorSelectsAzimuthRange) {
  AnalyticScene scene;
  Primitive p;
  p.geom = SphereGeom{Vec3::Zero(), 1.0};
  scene.primitives.push_back(p);
  View v = simple_view(64, 40.0);
  v.pose = look_at(Vec3(3.0, 0.0, 0.0), Vec3::Zero());
  DegradationSpec spec;
  // sector around +x azimuth 0: hit points facing the camera are inside
  spec.region = RegionWorldSector{Vec3::Zero(), -0.5, 0.5};
  spec.depth_bias = 0.2;
  DegradedRender d = degraded_render(scene, spec, v);
  RenderOutput o = oracle_render(scene, v);
  // center pixel hits azimuth ~0 -> biased
  EXPECT_NEAR(d.depth.at(32, 32) - o.depth.at(32, 32), 0.2, 1e-9);
}
