#pragma once

// Error comparison between binocular stereo and the collision-plane
// formulation for a single point approaching at a fixed heading.
//
// Stereo: depth from disparity d = B f / Z, heading from two triangulated
// positions. Collision plane: heading from the flow-line / horizon
// intersection in one camera, TTC from the same two observations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole_estimation.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane {

struct StereoErrorModel {
  double baseline_m = 0.15;
  double focal_px = 0.0;
  double detection_error_px = 0.2;
  double speed_mps = 50.0 / 3.6;
  double heading_deg = 45.0;

  void validate() const {
    if (!(baseline_m > 0.0)) throw Error(ErrorCode::InvalidInput, "baseline must be positive");
    if (!(focal_px > 0.0)) throw Error(ErrorCode::InvalidInput, "focal length must be positive");
    if (!(detection_error_px >= 0.0)) {
      throw Error(ErrorCode::InvalidInput, "detection error must be nonnegative");
    }
    if (!(speed_mps > 0.0)) throw Error(ErrorCode::InvalidInput, "speed must be positive");
    if (!(std::abs(heading_deg) < 90.0)) {
      throw Error(ErrorCode::InvalidInput, "heading must describe an approaching object (|h| < 90 deg)");
    }
  }
};

inline double focal_px_from_metric(double focal_mm, double pixel_pitch_um) {
  if (!(focal_mm > 0.0)) throw Error(ErrorCode::InvalidInput, "metric focal length must be positive");
  if (!(pixel_pitch_um > 0.0)) throw Error(ErrorCode::InvalidInput, "pixel pitch must be positive");
  return focal_mm * 1000.0 / pixel_pitch_um;
}

/// First-order depth error of binocular stereo: Z^2 * dp / (B * f).
inline double stereo_depth_error(const StereoErrorModel& model, double z_m) {
  if (!(z_m > 0.0)) throw Error(ErrorCode::InvalidInput, "depth must be positive");
  return z_m * z_m * model.detection_error_px / (model.baseline_m * model.focal_px);
}

struct SensitivitySweep {
  StereoErrorModel model;
  PixelPoint principal_point{640.0, 360.0};
  double frame_rate_hz = 12.0;
  // Tracked point below the camera (+Y down) so its flow crosses the horizon.
  double point_height_m = 1.0;
  double lateral_offset_m = 0.0;
  // Frames between the two observations; both methods use the same pair.
  int frame_gap = 12;
  double z_min_m = 20.0;
  double z_max_m = 100.0;
  double z_step_m = 10.0;
  int trials = 2000;
  std::uint64_t seed = 0;

  /// 15 cm baseline, 8 mm lens, 0.2 px detection error, 50 km/h at 45 deg,
  /// 12 Hz frame rate. Observations one second apart, Z from 20 to 100 m.
  static SensitivitySweep paper_preset(double pixel_pitch_um) {
    SensitivitySweep s;
    s.model.baseline_m = 0.15;
    s.model.focal_px = focal_px_from_metric(8.0, pixel_pitch_um);
    s.model.detection_error_px = 0.2;
    s.model.speed_mps = 50.0 / 3.6;
    s.model.heading_deg = 45.0;
    s.frame_rate_hz = 12.0;
    return s;
  }

  void validate() const {
    model.validate();
    if (!(frame_rate_hz > 0.0)) throw Error(ErrorCode::InvalidInput, "frame rate must be positive");
    if (frame_gap < 1) throw Error(ErrorCode::InvalidInput, "frame gap must be >= 1");
    if (!(z_min_m > 0.0) || !(z_max_m >= z_min_m) || !(z_step_m > 0.0)) {
      throw Error(ErrorCode::InvalidInput, "depth range must satisfy 0 < z_min <= z_max, step > 0");
    }
    if (trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be >= 1");
  }

  std::vector<double> depths() const {
    std::vector<double> zs;
    const auto n = static_cast<int>(std::floor((z_max_m - z_min_m) / z_step_m + 1e-9));
    for (int i = 0; i <= n; ++i) zs.push_back(z_min_m + i * z_step_m);
    return zs;
  }

  Vec3 velocity_per_frame() const {
    const double h = model.heading_deg * std::numbers::pi / 180.0;
    return (model.speed_mps / frame_rate_hz) * Vec3(std::sin(h), 0.0, -std::cos(h));
  }

  CameraIntrinsics intrinsics() const {
    return {model.focal_px, principal_point, static_cast<int>(2 * principal_point.u),
            static_cast<int>(2 * principal_point.v), true};
  }
};

struct SensitivityRow {
  double z_m = 0.0;
  double depth_error_m = 0.0;
  double stereo_heading_error_deg = 0.0;  // RMS over trials
  double plane_heading_error_deg = 0.0;   // RMS over trials
  // First-order heading uncertainty of the flow-line / horizon intersection
  // caused by the angular uncertainty of the flow segment.
  double plane_heading_sigma_deg = 0.0;
  double ttc_relative_error = 0.0;        // RMS of |k_est - k| / |k|
  double flow_length_px = 0.0;
  int degenerate_trials = 0;
  int trials = 0;
};

namespace detail {

inline double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

struct PlaneEstimate {
  double heading_rad;
  double k;
};

// Heading and TTC from two left-image observations `gap` frames apart.
inline PlaneEstimate plane_estimate(const PixelPoint& p0, const PixelPoint& p1,
                                    const HorizonLine& horizon, const CameraIntrinsics& intr,
                                    int gap) {
  const Epipole e = planar_epipole(FlowVector(p0, p1), horizon);
  const TrackObservation pair({{0, p0}, {1, p1}});
  const CollisionEstimate est = collision_estimate(pair, e, intr);
  const Vec3 motion = -est.v_g_dir;
  return {std::atan2(motion.x(), -motion.z()), est.k * gap};
}

}  // namespace detail

/// Seeded Monte-Carlo comparison table, one row per depth. Rows keep every
/// depth; trials with degenerate geometry are counted, not averaged.
inline std::vector<SensitivityRow> orientation_error_sweep(const SensitivitySweep& sweep) {
  sweep.validate();
  const CameraIntrinsics intr = sweep.intrinsics();
  const double f = sweep.model.focal_px;
  const double B = sweep.model.baseline_m;
  const double u0 = sweep.principal_point.u;
  const double v0 = sweep.principal_point.v;
  const double sigma = sweep.model.detection_error_px;
  const double true_heading = sweep.model.heading_deg * std::numbers::pi / 180.0;
  const Vec3 step = sweep.frame_gap * sweep.velocity_per_frame();
  const HorizonLine horizon = HorizonLine::from_slope_intercept(0.0, v0);

  std::mt19937_64 rng(sweep.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise = [&]() { return sigma > 0.0 ? sigma * normal(rng) : 0.0; };

  std::vector<SensitivityRow> rows;
  for (const double z : sweep.depths()) {
    SensitivityRow row;
    row.z_m = z;
    row.trials = sweep.trials;
    row.depth_error_m = stereo_depth_error(sweep.model, z);

    const Vec3 P0(sweep.lateral_offset_m, sweep.point_height_m, z);
    const Vec3 P1 = P0 + step;
    const double true_k = -P0.dot(step) / step.squaredNorm() * sweep.frame_gap;
    if (!(P1.z() > 0.0)) {
      row.degenerate_trials = sweep.trials;
      rows.push_back(row);
      continue;
    }
    const PixelPoint l0 = project(P0, intr);
    const PixelPoint l1 = project(P1, intr);
    const double r0 = u0 + f * (P0.x() - B) / P0.z();
    const double r1 = u0 + f * (P1.x() - B) / P1.z();
    row.flow_length_px = distance(l0, l1);

    // First-order spread: the segment direction is uncertain by
    // sqrt(2) * sigma / length, rotating the line about its midpoint.
    try {
      const PixelPoint e = planar_epipole(FlowVector(l0, l1), horizon).position;
      const Vec2 mid = 0.5 * (l0.vec() + l1.vec());
      const Vec2 dir = (l1.vec() - l0.vec()).normalized();
      const double lever = (e.vec() - mid).norm();
      const double sin_phi = std::abs(dir.y());
      const double dtheta = std::sqrt(2.0) * sigma / row.flow_length_px;
      const double du = lever * dtheta / sin_phi;
      const double dheading = f / (f * f + (e.u - u0) * (e.u - u0)) * du;
      row.plane_heading_sigma_deg = dheading * 180.0 / std::numbers::pi;
    } catch (const Error&) {
      row.plane_heading_sigma_deg = std::numeric_limits<double>::infinity();
    }

    double stereo_sq = 0.0;
    double plane_sq = 0.0;
    double ttc_sq = 0.0;
    int used = 0;
    for (int t = 0; t < sweep.trials; ++t) {
      const PixelPoint n0{l0.u + noise(), l0.v + noise()};
      const PixelPoint n1{l1.u + noise(), l1.v + noise()};
      const double nr0 = r0 + noise();
      const double nr1 = r1 + noise();

      const double d0 = n0.u - nr0;
      const double d1 = n1.u - nr1;
      if (!(d0 > 0.0) || !(d1 > 0.0)) {
        ++row.degenerate_trials;
        continue;
      }
      const double z0 = B * f / d0;
      const double z1 = B * f / d1;
      const double x0 = (n0.u - u0) * z0 / f;
      const double x1 = (n1.u - u0) * z1 / f;
      const double stereo_heading = std::atan2(x1 - x0, -(z1 - z0));

      detail::PlaneEstimate plane{};
      try {
        plane = detail::plane_estimate(n0, n1, horizon, intr, sweep.frame_gap);
      } catch (const Error&) {
        ++row.degenerate_trials;
        continue;
      }
      const double es = detail::wrap_angle(stereo_heading - true_heading);
      const double ep = detail::wrap_angle(plane.heading_rad - true_heading);
      const double ek = (plane.k - true_k) / true_k;
      stereo_sq += es * es;
      plane_sq += ep * ep;
      ttc_sq += ek * ek;
      ++used;
    }
    if (used > 0) {
      const double to_deg = 180.0 / std::numbers::pi;
      row.stereo_heading_error_deg = std::sqrt(stereo_sq / used) * to_deg;
      row.plane_heading_error_deg = std::sqrt(plane_sq / used) * to_deg;
      row.ttc_relative_error = std::sqrt(ttc_sq / used);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace collision_plane
