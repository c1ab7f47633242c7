#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "collision_plane/epipole_estimation.hpp"
#include "support/oracles.hpp"

using namespace collision_plane;

namespace {

// Signed angle from the true epipole to the provisional one, positive along
// the canonical (u > 0) direction of the line joining them.
double offset_oracle(const PixelPoint& provisional, const PixelPoint& truth,
                     const CameraIntrinsics& c) {
  const double mag = oracle::ray_angle(provisional, truth, c);
  Vec2 d = provisional.vec() - truth.vec();
  const Vec2 dir = d;
  if (d.x() < 0.0 || (d.x() == 0.0 && d.y() < 0.0)) d = -d;
  return dir.dot(d) >= 0.0 ? mag : -mag;
}

std::vector<FlowVector> rigid_flows(std::mt19937_64& rng, const Vec3& v, int n,
                                    const CameraIntrinsics& c) {
  std::uniform_real_distribution<double> xy(-5.0, 5.0);
  std::uniform_real_distribution<double> z(15.0, 50.0);
  std::vector<FlowVector> flows;
  while (static_cast<int>(flows.size()) < n) {
    const Vec3 P(xy(rng), xy(rng), z(rng));
    const FlowVector f(oracle::pinhole(P, c), oracle::pinhole(P + v, c));
    if (f.length() > 0.5) flows.push_back(f);
  }
  return flows;
}

}  // namespace

TEST(PlanarEpipole, HorizontalFlowIsParallel) {
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  try {
    planar_epipole(FlowVector({100, 400}, {200, 400}), h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParallelToHorizon);
  }
}

TEST(PlanarEpipole, ZeroFlowIsDegenerate) {
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  try {
    planar_epipole(FlowVector({100, 400}, {100, 400}), h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateFlow);
  }
}

TEST(PlanarEpipole, RecoversGroundPlaneMotion) {
  const auto c = oracle::camera();
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 1000; ++i) {
    const auto m = oracle::random_motion(rng, 2, true);
    const auto track = oracle::track_of(m, 2, c);
    const auto e = planar_epipole(FlowVector::from_track(track), h);
    const auto truth = oracle::true_epipole(m.v, c);
    EXPECT_LT(distance(e.position, truth), 1e-6);
    EXPECT_EQ(e.method, EpipoleMethod::HorizonIntersection);
  }
}

TEST(PlanarEpipole, SlopedHorizon) {
  const auto h = HorizonLine::from_slope_intercept(0.5, 10.0);
  const auto e = planar_epipole(FlowVector({100, 300}, {100, 200}), h);
  EXPECT_NEAR(e.position.u, 100.0, 1e-12);
  EXPECT_NEAR(e.position.v, 60.0, 1e-12);
}

TEST(LeastSquares, TooFewFlows) {
  const std::vector<FlowVector> one{FlowVector({0, 0}, {1, 1})};
  try {
    epipole_least_squares(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(LeastSquares, ParallelFlowsAreSingular) {
  const std::vector<FlowVector> flows{FlowVector({0, 0}, {1, 1}), FlowVector({5, 0}, {6, 1}),
                                      FlowVector({0, 9}, {2, 11})};
  try {
    epipole_least_squares(flows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGeometry);
  }
}

TEST(LeastSquares, DuplicatesDoNotChangeTheAnswer) {
  const auto c = oracle::camera();
  std::mt19937_64 rng(4);
  auto flows = rigid_flows(rng, Vec3(0.2, -0.1, -0.8), 6, c);
  const auto e1 = epipole_least_squares(flows);
  flows.push_back(flows[0]);
  flows.push_back(flows[3]);
  const auto e2 = epipole_least_squares(flows);
  EXPECT_EQ(e1.position, e2.position);
}

TEST(LeastSquares, RecoversRigidMotionEpipole) {
  const auto c = oracle::camera();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> vxy(-0.5, 0.5);
  std::uniform_real_distribution<double> vz(-1.2, -0.3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v(vxy(rng), vxy(rng), vz(rng));
    const auto flows = rigid_flows(rng, v, 8, c);
    const auto e = epipole_least_squares(flows);
    EXPECT_LT(distance(e.position, oracle::true_epipole(v, c)), 1e-6);
    EXPECT_LT(e.residual, 1e-6);
  }
}

TEST(LeastSquares, PermutationInvariant) {
  const auto c = oracle::camera();
  std::mt19937_64 rng(12);
  auto flows = rigid_flows(rng, Vec3(0.3, 0.1, -0.7), 10, c);
  for (auto& f : flows) f.p_prime.u += 0.3;  // perturb so the answer is a genuine fit
  const auto e1 = epipole_least_squares(flows);
  std::shuffle(flows.begin(), flows.end(), rng);
  const auto e2 = epipole_least_squares(flows);
  EXPECT_NEAR(e1.position.u, e2.position.u, 1e-8);
  EXPECT_NEAR(e1.position.v, e2.position.v, 1e-8);
}

TEST(ThreeFrameOffset, PlanarMotionHasZeroOffset) {
  const auto c = oracle::camera();
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    const auto m = oracle::random_motion(rng, 3, true);
    const auto off = epipole_offset_three_frames(oracle::track_of(m, 3, c), h, c);
    EXPECT_NEAR(off.x.radians, 0.0, 1e-9);
    EXPECT_LT(distance(off.epipole.position, oracle::true_epipole(m.v, c)), 1e-6);
  }
}

TEST(ThreeFrameOffset, OffHorizonMotionMatchesTruth) {
  const auto c = oracle::camera();
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  std::mt19937_64 rng(33);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = oracle::random_motion(rng, 3, false);
    const auto track = oracle::track_of(m, 3, c);
    EpipoleOffset off;
    try {
      off = epipole_offset_three_frames(track, h, c);
    } catch (const Error& e) {
      // Flow nearly parallel to the horizon has no provisional epipole.
      EXPECT_EQ(e.code(), ErrorCode::ParallelToHorizon);
      continue;
    }
    ++checked;
    const auto truth = oracle::true_epipole(m.v, c);
    const double want = offset_oracle(off.horizon_intersection, truth, c);
    EXPECT_NEAR(off.x.radians, want, 1e-6);
    EXPECT_LT(distance(off.epipole.position, truth), 1e-6 * std::max(1.0, distance(truth, c.principal_point)));
    EXPECT_LT(off.epipole.residual, 1e-6);
  }
  EXPECT_GT(checked, 900);
}

TEST(ThreeFrameOffset, NeedsThreeFrames) {
  const auto c = oracle::camera();
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  TrackObservation two({{0, {100, 500}}, {1, {90, 520}}});
  try {
    epipole_offset_three_frames(two, h, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(ThreeFrameOffset, StaticPointIsDegenerate) {
  const auto c = oracle::camera();
  const auto h = HorizonLine::from_slope_intercept(0.0, 360.0);
  TrackObservation still({{0, {700, 500}}, {1, {700, 500}}, {2, {700, 500}}});
  try {
    epipole_offset_three_frames(still, h, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}

TEST(CalibrateHorizon, RecoversLineThroughEpipoles) {
  std::vector<Epipole> es{Epipole::at({100, 50}), Epipole::at({500, 250}), Epipole::at({900, 450})};
  const auto h = calibrate_horizon(es);
  EXPECT_NEAR(h.slope(), 0.5, 1e-12);
  EXPECT_NEAR(h.intercept(), 0.0, 1e-9);
  EXPECT_NEAR(h.residual, 0.0, 1e-9);
}

TEST(CalibrateHorizon, RejectsDegenerateInput) {
  std::vector<Epipole> one{Epipole::at({1, 2})};
  EXPECT_THROW(calibrate_horizon(one), Error);
  std::vector<Epipole> same{Epipole::at({1, 2}), Epipole::at({1, 2})};
  try {
    calibrate_horizon(same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGeometry);
  }
}
