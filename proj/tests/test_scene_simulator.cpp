#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "collision_plane/scene_simulator.hpp"
#include "support/oracles.hpp"

using namespace collision_plane;

namespace {

Scenario head_on(double lateral_dv = 0.0) {
  Scenario s;
  s.intrinsics = oracle::camera();
  s.frame_count = 40;
  SceneObject obj;
  obj.id = 7;
  obj.points = {Vec3(0, 0, 50)};
  obj.velocity = Vec3(0, 0, 0);
  s.objects = {obj};
  s.camera_velocity = Vec3(lateral_dv, 0, 2.0);
  return s;
}

}  // namespace

TEST(Scenario, Validation) {
  Scenario s = head_on();
  EXPECT_NO_THROW(s.validate());
  s.frame_count = 1;
  EXPECT_THROW(s.validate(), Error);
  s = head_on();
  s.objects[0].points.push_back(Vec3(0, 0, -1));
  EXPECT_THROW(s.validate(), Error);
  s = head_on();
  s.pixel_noise_sigma = -0.1;
  EXPECT_THROW(s.validate(), Error);
}

TEST(AnalyticTruth, MatchesIndependentFormulas) {
  const auto c = oracle::camera();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto m = oracle::random_motion(rng, 2);
    const auto t = analytic_truth(m.P0, m.v, c);
    ASSERT_TRUE(t.k);
    EXPECT_NEAR(*t.k, oracle::true_k(m.P0, m.v), 1e-9 * std::abs(*t.k));
    EXPECT_NEAR(t.H, oracle::true_H(m.P0, m.v), 1e-9 * std::max(1.0, t.H));
    EXPECT_NEAR(t.miss_distance, m.P0.cross(m.v).norm() / m.v.norm(), 1e-9);
    ASSERT_TRUE(t.epipole);
    EXPECT_LT(distance(*t.epipole, oracle::true_epipole(m.v, c)), 1e-9);
    EXPECT_EQ(t.label, MotionClass::Approaching);
  }
}

TEST(AnalyticTruth, NoMotionHasNoTtc) {
  const auto t = analytic_truth(Vec3(1, 2, 3), Vec3::Zero(), oracle::camera());
  EXPECT_FALSE(t.k);
  EXPECT_FALSE(t.epipole);
}

TEST(AnalyticTruth, LateralMotionHasNoEpipole) {
  const auto t = analytic_truth(Vec3(1, 2, 30), Vec3(1, 0, 0), oracle::camera());
  EXPECT_FALSE(t.epipole);
  ASSERT_TRUE(t.k);
  EXPECT_DOUBLE_EQ(*t.k, -1.0);
}

TEST(AnalyticTruth, KDecreasesByOnePerFrame) {
  const auto t = analytic_truth(Vec3(1, 2, 30), Vec3(0.1, 0, -1), oracle::camera());
  EXPECT_DOUBLE_EQ(*t.k_at(3), *t.k - 3.0);
}

TEST(Simulate, NoiseFreeTracksAreExactProjections) {
  const auto s = oracle::three_object_scene(3, 0.0);
  const auto sim = simulate(s);
  ASSERT_EQ(sim.tracks.size(), 24u);
  for (std::size_t i = 0; i < sim.tracks.size(); ++i) {
    const auto& t = sim.truth.points[i];
    EXPECT_EQ(sim.tracks[i].id(), static_cast<std::int64_t>(i));
    for (std::size_t f = 0; f < sim.tracks[i].size(); ++f) {
      const auto want = oracle::pinhole(t.initial_position + double(f) * t.relative_velocity, s.intrinsics);
      EXPECT_EQ(sim.tracks[i].position(f), want);
    }
  }
}

TEST(Simulate, SameSeedSameNoise) {
  const auto s = oracle::three_object_scene(3, 0.3);
  const auto a = simulate(s);
  const auto b = simulate(s);
  EXPECT_EQ(a.tracks, b.tracks);
  auto s2 = s;
  s2.rng_seed += 1;
  EXPECT_NE(simulate(s2).tracks, a.tracks);
}

TEST(Simulate, TruncatesWhenPointPassesCamera) {
  Scenario s = head_on();
  s.frame_count = 40;  // the point reaches Z = 0 at frame 25
  const auto sim = simulate(s);
  EXPECT_TRUE(sim.truth.points[0].truncated);
  EXPECT_EQ(sim.truth.points[0].valid_frames, 25);
  EXPECT_EQ(sim.tracks[0].size(), 25u);
}

TEST(VelocityGrid, CentreSampleIsExactlyZero) {
  const VelocityGrid g{1.0, 0.7, 5, 7};
  EXPECT_EQ(g.forward_at(2), 0.0);
  EXPECT_EQ(g.lateral_at(3), 0.0);
  EXPECT_DOUBLE_EQ(g.forward_at(0), -1.0);
  EXPECT_DOUBLE_EQ(g.lateral_at(6), 0.7);
}

TEST(CollisionMap, CentreCellMatchesBaseScenario) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = oracle::three_object_scene(seed, 0.3);
    s.frame_count = 60;
    const VelocityGrid g{0.5, 0.5, 5, 5};
    const auto map = collision_map(s, g, 2.0);
    auto base = s;
    base.pixel_noise_sigma = 0.0;
    const auto want = collision_state(simulate(base).truth, s.frame_count, 2.0);
    auto got = map.at(2, 2);
    got.dv_forward = got.dv_lateral = 0.0;
    EXPECT_EQ(got, want);
  }
}

TEST(CollisionMap, EmptySceneIsClear) {
  Scenario s = head_on();
  s.objects.clear();
  const auto map = collision_map(s, {1.0, 1.0, 3, 3}, 2.0);
  for (const auto& c : map.cells) {
    EXPECT_FALSE(c.collision);
    EXPECT_FALSE(c.min_ttc);
  }
}

TEST(CollisionMap, HeadOnClearingThreshold) {
  // Miss distance 50 |d| / sqrt(d^2 + 4) crosses 2 m at |d| = 4 / sqrt(2496).
  const double threshold = 4.0 / std::sqrt(2496.0);
  const VelocityGrid g{0.0, 0.2, 1, 41};
  const auto map = collision_map(head_on(), g, 2.0);
  for (int j = 0; j < g.lateral_cells; ++j) {
    const auto& c = map.at(0, j);
    const double d = c.dv_lateral;
    ASSERT_TRUE(c.miss_distance);
    EXPECT_NEAR(*c.miss_distance, 50.0 * std::abs(d) / std::sqrt(d * d + 4.0), 1e-9);
    if (std::abs(std::abs(d) - threshold) > 1e-6) EXPECT_EQ(c.collision, std::abs(d) < threshold) << d;
  }
}

TEST(CollisionMap, RejectsBadGrid) {
  EXPECT_THROW(collision_map(head_on(), {1.0, 1.0, 0, 3}, 2.0), Error);
  EXPECT_THROW(collision_map(head_on(), {1.0, 1.0, 3, 3}, 0.0), Error);
}
