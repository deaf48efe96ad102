#include "warprf/active.hpp"

#include "warprf/backend.hpp"
#include "warprf/results.hpp"
#include "warprf/viewgen.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace warprf;

namespace {

std::vector<View> hill_ring(int count, double radius, double height, const std::string& prefix) {
  return ring_views(count, radius, height, Vec3(0, -0.3, 0),
                    default_intrinsics(40, 40, 45.0), prefix);
}

}  // namespace

TEST(SelectNext, SingleCandidate) {
  std::vector<ViewScore> s{{"only", 0.5, 1.0}};
  EXPECT_EQ(select_next(s), "only");
}

TEST(SelectNext, TieBreaksByLowestId) {
  std::vector<ViewScore> s{{"a", 0.2, 0}, {"c", 0.9, 0}, {"b", 0.9, 0}};
  EXPECT_EQ(select_next(s), "b");
}

TEST(SelectNext, NanScoreIsAnError) {
  std::vector<ViewScore> s{{"a", 0.2, 0}, {"b", std::nan(""), 0}};
  EXPECT_THROW(select_next(s), std::invalid_argument);
  EXPECT_THROW(select_next({}), std::invalid_argument);
}

TEST(SelectNext, InvariantUnderMonotoneTransform) {
  std::vector<ViewScore> s;
  for (int i = 0; i < 20; ++i)
    s.push_back({"v" + std::to_string(i), rng::uniform(3, i) * 4.0, 0.0});
  std::string base = select_next(s);
  std::vector<ViewScore> cubed = s, exped = s;
  for (auto& v : cubed) v.score = v.score * v.score * v.score;
  for (auto& v : exped) v.score = std::exp(v.score);
  EXPECT_EQ(select_next(cubed), base);
  EXPECT_EQ(select_next(exped), base);
}

TEST(ScoreCandidates, FarthestPicksCollinearExtreme) {
  OracleBackend backend(testutil::hill_scene());
  auto make_view = [](double x, const std::string& id) {
    View v;
    v.intrinsics = default_intrinsics(16, 16, 20.0);
    v.pose.translation = Vec3(x, 0, 0);
    v.id = id;
    return v;
  };
  std::vector<View> train{make_view(0.0, "t0")};
  std::vector<View> cands{make_view(1.0, "c1"), make_view(10.0, "c10")};
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::farthest;
  std::vector<ViewScore> scores = score_candidates(backend, train, cands, policy);
  EXPECT_NEAR(scores[0].score, 1.0, 1e-12);
  EXPECT_NEAR(scores[1].score, 10.0, 1e-12);
  EXPECT_EQ(select_next(scores), "c10");
}

TEST(ScoreCandidates, FarthestMaximizesMinDistanceOverPool) {
  OracleBackend backend(testutil::hill_scene());
  std::vector<View> train = hill_ring(3, 2.2, 0.8, "t");
  std::vector<View> pool = hill_ring(11, 2.9, 1.4, "c");
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::farthest;
  std::vector<ViewScore> scores = score_candidates(backend, train, pool, policy);
  std::string picked = select_next(scores);
  // brute force: recompute min distances and take the max
  double best = -1.0;
  std::string expect;
  for (const auto& c : pool) {
    double dmin = 1e300;
    for (const auto& t : train) dmin = std::min(dmin, camera_center_distance(c.pose, t.pose));
    if (dmin > best) {
      best = dmin;
      expect = c.id;
    }
  }
  EXPECT_EQ(picked, expect);
}

TEST(ScoreCandidates, RandomIsDeterministicPerSeed) {
  OracleBackend backend(testutil::hill_scene());
  std::vector<View> pool = hill_ring(8, 2.9, 1.4, "c");
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::random;
  policy.seed = 77;
  std::vector<ViewScore> a = score_candidates(backend, {}, pool, policy);
  std::vector<ViewScore> b = score_candidates(backend, {}, pool, policy);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);
  policy.seed = 78;
  std::vector<ViewScore> c = score_candidates(backend, {}, pool, policy);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].score != c[i].score);
  EXPECT_TRUE(any_diff);
}

TEST(ScoreCandidates, TrainingViewScoresMinimalOnConsistentOracle) {
  // Wall scene covers every frustum fully, so coverage penalties do not vary
  // between candidates and the duplicated training view must score lowest.
  OracleBackend backend(testutil::wall_scene());
  Intrinsics intr = default_intrinsics(40, 40, 50.0);
  Vec3 lookat(0, 0, 2.2);
  std::vector<View> train = testutil::bundle_views(Vec3(0.1, 0.1, -0.4), lookat, 5, 0.2, intr, "t");
  std::vector<View> pool = testutil::bundle_views(Vec3(-0.2, 0.0, -0.6), lookat, 8, 0.35, intr, "c");
  pool.push_back(train[2]);  // candidate identical to a training view
  pool.back().id = "dup";
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::warprf_image;
  std::vector<ViewScore> scores = score_candidates(backend, train, pool, policy);
  const ViewScore* dup = nullptr;
  double min_score = 1e300;
  for (const auto& s : scores) {
    min_score = std::min(min_score, s.score);
    if (s.view_id == "dup") dup = &s;
  }
  ASSERT_NE(dup, nullptr);
  EXPECT_EQ(dup->score, min_score);
  // identical pose: every pixel is covered by the identity warp and
  // contributes ~0, so the whole score is ~ penalty * uncovered = 0
  EXPECT_EQ(dup->covered_fraction, 1.0);
  EXPECT_LT(dup->score, 1e-6);
}

TEST(ScoreCandidates, EmptyPoolThrows) {
  OracleBackend backend(testutil::hill_scene());
  SelectionPolicy policy;
  EXPECT_THROW(score_candidates(backend, hill_ring(2, 2.5, 1, "t"), {}, policy),
               std::invalid_argument);
}

// ---------------------------------------------------------------------------
// refine_pose
// ---------------------------------------------------------------------------

TEST(RefinePose, ZeroItersReturnsCandidateUnchanged) {
  OracleBackend backend(testutil::hill_scene());
  std::vector<View> train = hill_ring(3, 2.6, 1.2, "t");
  View cand = hill_ring(1, 3.0, 1.5, "c")[0];
  RefineResult r = refine_pose(backend, train, cand, 0.3, 0);
  EXPECT_EQ(r.view.pose.translation, cand.pose.translation);
  EXPECT_EQ(r.view.pose.rotation, cand.pose.rotation);
}

TEST(RefinePose, FlatLandscapeKeepsCandidate) {
  // Uniform scene with a zero uncovered-pixel penalty: the score is exactly 0
  // for every pose, so no stencil move ever improves and the candidate
  // survives shrink-out.
  AnalyticScene scene = testutil::plane_scene(2.0, /*checker=*/false);
  scene.light.ambient = 1.0;
  OracleBackend backend(scene);
  View cand = testutil::simple_view(32, 40.0, "c");
  std::vector<View> train{cand};
  RefineResult r = refine_pose(backend, train, cand, 0.05, 3, /*seed=*/0, /*penalty=*/0.0);
  EXPECT_EQ(r.view.pose.translation, cand.pose.translation);
  EXPECT_EQ(r.view.pose.rotation, cand.pose.rotation);
  EXPECT_EQ(r.score, r.input_score);
}

TEST(RefinePose, FirstMoveMatchesExhaustiveStencilOracle) {
  AnalyticScene scene = testutil::wall_scene();
  DegradationSpec spec;
  spec.region = RegionWorldSphere{Vec3(1.0, 0.0, 2.2), 0.5};
  spec.color_noise_sigma = 0.3;
  spec.seed = 5;
  DegradedOracleBackend backend(scene, spec);
  Vec3 eye(-0.8, 0.0, -0.5);
  View cand;
  cand.intrinsics = default_intrinsics(40, 40, 50.0);
  cand.pose = look_at(eye, eye + Vec3(0, 0, 1));
  cand.id = "c";
  std::vector<View> train = testutil::bundle_views(eye, Vec3(-0.8, 0, 2.2), 4, 0.15,
                                                   cand.intrinsics);
  const double radius = 1.0;
  RefineResult refined = refine_pose(backend, train, cand, radius, 1);

  // exhaustive stencil evaluation
  auto score_of = [&](const View& v) { return image_uncertainty(backend, train, v, 1.0).score; };
  double best = score_of(cand);
  View best_view = cand;
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {-1.0, 1.0}) {
      View v = cand;
      v.pose.translation[axis] += sign * radius;
      if (double s = score_of(v); s > best) {
        best = s;
        best_view = v;
      }
    }
  for (int axis = 0; axis < 2; ++axis)
    for (double sign : {-1.0, 1.0}) {
      View v = cand;
      Vec3 world_axis = v.pose.rotation.col(axis);
      v.pose.rotation =
          Eigen::AngleAxisd(sign * 0.5 * radius, world_axis).toRotationMatrix() * v.pose.rotation;
      if (double s = score_of(v); s > best) {
        best = s;
        best_view = v;
      }
    }
  EXPECT_GT(refined.score, refined.input_score);  // the lobe is one stencil step away
  EXPECT_EQ(refined.score, best);
  EXPECT_EQ(refined.view.pose.translation, best_view.pose.translation);
}

TEST(RefinePose, AscentGuaranteeOnRandomLandscapes) {
  for (int trial = 0; trial < 10; ++trial) {
    AnalyticScene scene = testutil::hill_scene();
    DegradationSpec spec;
    double az = 2 * M_PI * rng::uniform(400 + trial, 0);
    spec.region = RegionWorldSector{Vec3(0, -0.3, 0), az - 0.6, az + 0.6};
    spec.color_noise_sigma = 0.2;
    spec.seed = 100 + trial;
    DegradedOracleBackend backend(scene, spec);
    std::vector<View> train = hill_ring(4, 2.4, 1.0, "t");
    View cand = testutil::random_inward_view(500 + trial, trial, 40, 45.0);
    RefineResult r = refine_pose(backend, train, cand, 0.4, 3);
    EXPECT_GE(r.score, r.input_score);
  }
}

// ---------------------------------------------------------------------------
// run_active_loop
// ---------------------------------------------------------------------------

namespace {

LoopConfig tiny_loop_config(std::vector<View> pool, std::vector<std::string> init_ids,
                            int rounds) {
  LoopConfig lc;
  lc.candidate_pool = std::move(pool);
  lc.initial_view_ids = std::move(init_ids);
  lc.rounds = rounds;
  lc.fit_budget_per_round = 0;
  lc.eval_views = hill_ring(2, 3.1, 1.7, "e");
  lc.metric_names = {"psnr", "ssim", "depth_mae"};
  return lc;
}

}  // namespace

TEST(ActiveLoop, SingleRoundSinglePoolChoice) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  std::vector<View> pool = hill_ring(2, 2.7, 1.2, "p");
  LoopConfig lc = tiny_loop_config(pool, {"p0"}, 1);
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::warprf_image;
  LoopResult res = run_active_loop(factory, gt, lc, policy);
  EXPECT_TRUE(res.completed);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].selected_view, "p1");
  EXPECT_TRUE(res.records[0].metrics_after_fit.count("psnr"));
}

TEST(ActiveLoop, NeverReselectsAndExhaustsPool) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  std::vector<View> pool = hill_ring(5, 2.7, 1.2, "p");
  LoopConfig lc = tiny_loop_config(pool, {"p0"}, 10);  // more rounds than pool
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::random;
  policy.seed = 3;
  LoopResult res = run_active_loop(factory, gt, lc, policy);
  EXPECT_FALSE(res.completed);
  EXPECT_EQ(res.records.size(), 4u);  // 5 pool - 1 initial
  std::vector<std::string> seen;
  for (const auto& r : res.records) {
    EXPECT_EQ(std::count(seen.begin(), seen.end(), r.selected_view), 0);
    seen.push_back(r.selected_view);
  }
  EXPECT_FALSE(res.message.empty());
}

TEST(ActiveLoop, RandomPolicyTrajectoryIsBitwiseReproducible) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  std::vector<View> pool = hill_ring(6, 2.7, 1.2, "p");
  LoopConfig lc = tiny_loop_config(pool, {"p0", "p3"}, 3);
  lc.seed = 99;
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::random;
  policy.seed = 42;
  LoopResult a = run_active_loop(factory, gt, lc, policy);
  LoopResult b = run_active_loop(factory, gt, lc, policy);
  EXPECT_EQ(rounds_csv(a.records), rounds_csv(b.records));
  EXPECT_EQ(rounds_jsonl(a.records), rounds_jsonl(b.records));
}

TEST(ActiveLoop, MissingInitialViewIdThrows) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  LoopConfig lc = tiny_loop_config(hill_ring(3, 2.7, 1.2, "p"), {"nope"}, 1);
  SelectionPolicy policy;
  EXPECT_THROW(run_active_loop(factory, gt, lc, policy), std::invalid_argument);
}

TEST(ActiveLoop, SectorCorruptionDrivesSelectionTowardSector) {
  AnalyticScene scene = testutil::hill_scene();
  const double az = 0.9;
  DegradationSpec spec;
  spec.region = RegionWorldSector{Vec3(0, -0.3, 0), az - 0.55, az + 0.55};
  spec.color_noise_sigma = 0.25;
  spec.seed = 11;
  auto factory = [&] { return std::make_unique<DegradedOracleBackend>(scene, spec); };
  DegradedOracleBackend backend(scene, spec);
  OracleBackend gt(scene);

  std::vector<View> train = hill_ring(4, 2.4, 1.0, "t");
  // keep training views away from the corrupted sector
  std::vector<View> pool = hill_ring(12, 2.8, 1.3, "c");
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::warprf_image;
  std::vector<ViewScore> scores = score_candidates(backend, train, pool, policy);
  std::string picked = select_next(scores);

  // brute-force re-scoring must agree
  double best = -1.0;
  std::string expect;
  for (const auto& c : pool) {
    double s = image_uncertainty(backend, train, c, 1.0).score;
    if (s > best || (s == best && c.id < expect)) {
      best = s;
      expect = c.id;
    }
  }
  EXPECT_EQ(picked, expect);

  // the winner's frustum must cover the corrupted sector: a ground point in
  // the sector center projects in bounds with positive depth
  const View* winner = nullptr;
  for (const auto& c : pool)
    if (c.id == picked) winner = &c;
  ASSERT_NE(winner, nullptr);
  Vec3 sector_point(1.2 * std::cos(az), -0.6, 1.2 * std::sin(az));
  Projection proj = project(sector_point, *winner);
  EXPECT_GT(proj.depth, 0.0);
  EXPECT_TRUE(pixel_in_bounds(proj.pixel, winner->intrinsics));
}

TEST(ActiveLoop, EmptyInitialSetWithSingleViewPool) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  LoopConfig lc = tiny_loop_config(hill_ring(1, 2.7, 1.2, "p"), {}, 1);
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::random;
  policy.seed = 5;
  LoopResult res = run_active_loop(factory, gt, lc, policy);
  EXPECT_TRUE(res.completed);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].selected_view, "p0");
}

TEST(ActiveLoop, DisjointInitialViewsOutsidePool) {
  auto factory = [] { return std::make_unique<OracleBackend>(testutil::hill_scene()); };
  OracleBackend gt(testutil::hill_scene());
  LoopConfig lc = tiny_loop_config(hill_ring(3, 2.7, 1.2, "p"), {}, 2);
  lc.initial_views = hill_ring(2, 2.3, 0.9, "init");  // not pool members
  SelectionPolicy policy;
  policy.kind = SelectionPolicy::Kind::warprf_image;
  LoopResult res = run_active_loop(factory, gt, lc, policy);
  EXPECT_TRUE(res.completed);
  ASSERT_EQ(res.records.size(), 2u);
  for (const auto& r : res.records) EXPECT_EQ(r.selected_view.rfind("p", 0), 0u);
}
