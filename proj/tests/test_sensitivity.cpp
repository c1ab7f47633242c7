#include <gtest/gtest.h>

#include <cmath>

#include "collision_plane/sensitivity.hpp"
#include "support/oracles.hpp"

using namespace collision_plane;

TEST(FocalConversion, PitchIsInMicrometres) {
  EXPECT_DOUBLE_EQ(focal_px_from_metric(8.0, 5.0), 1600.0);
  EXPECT_THROW(focal_px_from_metric(8.0, 0.0), Error);
}

TEST(StereoDepthError, MatchesFiniteDifference) {
  StereoErrorModel m;
  m.focal_px = 1600.0;
  for (double z = 5.0; z <= 200.0; z += 5.0) {
    const double want = oracle::depth_error_fd(m.baseline_m, m.focal_px, z, m.detection_error_px);
    EXPECT_NEAR(stereo_depth_error(m, z), want, 1e-3 * want);
  }
}

TEST(StereoDepthError, QuadraticInDepthAndInverseInBaseline) {
  StereoErrorModel m;
  m.focal_px = 1600.0;
  EXPECT_NEAR(stereo_depth_error(m, 40.0) / stereo_depth_error(m, 20.0), 4.0, 1e-12);
  StereoErrorModel wide = m;
  wide.baseline_m *= 2.0;
  EXPECT_NEAR(stereo_depth_error(wide, 30.0), 0.5 * stereo_depth_error(m, 30.0), 1e-12);
}

TEST(Sweep, ZeroPixelErrorGivesZeroErrors) {
  auto s = SensitivitySweep::paper_preset(5.0);
  s.model.detection_error_px = 0.0;
  s.trials = 5;
  for (const auto& r : orientation_error_sweep(s)) {
    EXPECT_EQ(r.depth_error_m, 0.0);
    EXPECT_NEAR(r.stereo_heading_error_deg, 0.0, 1e-9);
    EXPECT_NEAR(r.plane_heading_error_deg, 0.0, 1e-9);
    EXPECT_NEAR(r.ttc_relative_error, 0.0, 1e-9);
    EXPECT_EQ(r.degenerate_trials, 0);
  }
}

TEST(Sweep, DeterministicForSeed) {
  auto s = SensitivitySweep::paper_preset(5.0);
  s.trials = 50;
  s.seed = 3;
  const auto a = orientation_error_sweep(s);
  const auto b = orientation_error_sweep(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].stereo_heading_error_deg, b[i].stereo_heading_error_deg);
    EXPECT_EQ(a[i].plane_heading_error_deg, b[i].plane_heading_error_deg);
  }
}

TEST(Sweep, StereoHeadingDivergesFasterThanPlaneHeading) {
  auto s = SensitivitySweep::paper_preset(5.0);
  s.trials = 400;
  const auto rows = orientation_error_sweep(s);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_GT(rows.back().stereo_heading_error_deg, 10.0 * rows.front().stereo_heading_error_deg);
  for (const auto& r : rows) EXPECT_GT(r.stereo_heading_error_deg, 5.0 * r.plane_heading_error_deg);
}

TEST(Sweep, Validation) {
  auto s = SensitivitySweep::paper_preset(5.0);
  s.z_max_m = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = SensitivitySweep::paper_preset(5.0);
  s.model.heading_deg = 95.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Sweep, DepthGridIsInclusive) {
  const auto s = SensitivitySweep::paper_preset(5.0);
  const auto zs = s.depths();
  ASSERT_EQ(zs.size(), 9u);
  EXPECT_DOUBLE_EQ(zs.front(), 20.0);
  EXPECT_DOUBLE_EQ(zs.back(), 100.0);
}
