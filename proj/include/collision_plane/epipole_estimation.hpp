#pragma once

// Epipole localization:
//  - planar motion: intersection of a single flow line with the horizon,
//  - rigid translating object: least-squares intersection of many flow lines,
//  - arbitrary translation: angular offset along the flow line from three
//    frames,
//  - horizon calibration from epipoles of several planar motions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane {

inline constexpr double kDefaultParallelTolerance = 0.5 * std::numbers::pi / 180.0;

namespace detail {
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
}  // namespace detail

/// Image line in point-direction form.
struct HorizonLine {
  PixelPoint reference;
  Vec2 direction{1.0, 0.0};
  // RMS perpendicular distance of the points the line was fitted to.
  double residual = 0.0;

  /// The line v = slope * u + intercept.
  static HorizonLine from_slope_intercept(double slope, double intercept) {
    if (!std::isfinite(slope) || !std::isfinite(intercept)) {
      throw Error(ErrorCode::InvalidInput, "horizon slope/intercept must be finite");
    }
    return {{0.0, intercept}, Vec2(1.0, slope).normalized(), 0.0};
  }

  bool is_vertical() const { return std::abs(direction.x()) < 1e-12; }

  double slope() const {
    if (is_vertical()) throw Error(ErrorCode::InvalidInput, "vertical line has no slope");
    return direction.y() / direction.x();
  }
  double intercept() const { return reference.v - slope() * reference.u; }

  double distance_to(const PixelPoint& p) const {
    return std::abs(detail::cross2(direction, p.vec() - reference.vec()));
  }
};

/// Image displacement of one tracked point between two observations.
struct FlowVector {
  PixelPoint p;
  PixelPoint p_prime;

  FlowVector() = default;
  FlowVector(PixelPoint first, PixelPoint second) : p(first), p_prime(second) {}

  static FlowVector from_track(const TrackObservation& track) {
    track.require_frames(2);
    return {track.front().position, track.back().position};
  }

  /// Flow along the total-least-squares line through every observation,
  /// from the projection of the first observation to that of the last.
  /// Equals from_track for two observations and for collinear tracks.
  static FlowVector fit_track(const TrackObservation& track) {
    track.require_frames(2);
    if (track.size() == 2) return from_track(track);
    Vec2 centroid = Vec2::Zero();
    for (const auto& o : track.frames()) centroid += o.position.vec();
    centroid /= static_cast<double>(track.size());
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const auto& o : track.frames()) {
      const Vec2 d = o.position.vec() - centroid;
      scatter += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(scatter);
    const Vec2 dir = solver.eigenvectors().col(1);
    auto onto = [&](const PixelPoint& q) {
      return PixelPoint::from(centroid + (q.vec() - centroid).dot(dir) * dir);
    };
    return {onto(track.front().position), onto(track.back().position)};
  }

  Vec2 t() const { return p_prime.vec() - p.vec(); }
  double length() const { return t().norm(); }
  bool valid() const { return length() > 0.0; }

  /// Unit normal (-t_y, t_x) / |t|.
  Vec2 n() const {
    const Vec2 d = t();
    const double len = d.norm();
    if (!(len > 0.0)) throw Error(ErrorCode::DegenerateFlow, "zero-length flow vector");
    return Vec2(-d.y(), d.x()) / len;
  }

  bool operator==(const FlowVector&) const = default;
};

/// Flow-line / horizon intersection for motion confined to the ground plane.
inline Epipole planar_epipole(const FlowVector& flow, const HorizonLine& horizon,
                              double eps_parallel = kDefaultParallelTolerance) {
  const Vec2 t = flow.t();
  const double len = t.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::DegenerateFlow, "zero-length flow vector");
  const Vec2 h = horizon.direction.normalized();
  const double sin_angle = detail::cross2(t / len, h);
  if (std::abs(sin_angle) < std::sin(eps_parallel)) {
    throw Error(ErrorCode::ParallelToHorizon, "flow line is parallel to the horizon");
  }
  const double s = detail::cross2(horizon.reference.vec() - flow.p.vec(), h) / detail::cross2(t, h);
  return {PixelPoint::from(flow.p.vec() + s * t), EpipoleMethod::HorizonIntersection, 0.0};
}

/// Least-squares intersection of flow lines: stacks n_i^T e = p_i^T n_i and
/// solves with a column-pivoted Householder QR.
inline Epipole epipole_least_squares(std::span<const FlowVector> flows,
                                     double eps_parallel = kDefaultParallelTolerance) {
  if (flows.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "need at least two flow vectors");
  }
  std::vector<FlowVector> unique;
  unique.reserve(flows.size());
  for (const auto& f : flows) {
    if (!f.valid()) throw Error(ErrorCode::DegenerateFlow, "zero-length flow vector");
    if (std::find(unique.begin(), unique.end(), f) == unique.end()) unique.push_back(f);
  }

  const Vec2 first_dir = unique.front().t().normalized();
  const double sin_tol = std::sin(eps_parallel);
  const bool any_crossing = std::any_of(unique.begin() + 1, unique.end(), [&](const FlowVector& f) {
    return std::abs(detail::cross2(first_dir, f.t().normalized())) > sin_tol;
  });
  if (!any_crossing) {
    throw Error(ErrorCode::SingularGeometry, "all flow lines are parallel");
  }

  const auto rows = static_cast<Eigen::Index>(unique.size());
  Eigen::MatrixX2d A(rows, 2);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vec2 n = unique[static_cast<std::size_t>(i)].n();
    A.row(i) = n.transpose();
    b(i) = unique[static_cast<std::size_t>(i)].p.vec().dot(n);
  }
  const Vec2 e = A.colPivHouseholderQr().solve(b);
  const double rms = std::sqrt((A * e - b).squaredNorm() / static_cast<double>(rows));
  return {PixelPoint::from(e), EpipoleMethod::LeastSquares, rms};
}

struct EpipoleOffset {
  Angle x;
  Epipole epipole;
  // Horizon intersection before the correction.
  PixelPoint horizon_intersection;
};

/// Epipole of an arbitrary translation from three consecutive frames.
///
/// The horizon intersection of the flow line plays the role of a provisional
/// epipole; the true epipole sits on the same line at a constant angular
/// offset x, fixed by requiring k(0,1) - k(1,2) = 1.
inline EpipoleOffset epipole_offset_three_frames(const TrackObservation& track,
                                                 const HorizonLine& horizon,
                                                 const CameraIntrinsics& intrinsics,
                                                 const TtcConfig& config = {},
                                                 double eps_parallel = kDefaultParallelTolerance) {
  track.require_frames(3);
  const PixelPoint& p0 = track.position(0);
  const PixelPoint& p1 = track.position(1);
  const PixelPoint& p2 = track.position(2);
  const FlowVector span_flow(p0, p2);
  if (!span_flow.valid()) {
    throw Error(ErrorCode::DegenerateConfiguration, "point does not move over three frames");
  }
  const PixelPoint provisional = planar_epipole(span_flow, horizon, eps_parallel).position;

  const LineParameterization line(p0, span_flow.t(), intrinsics);
  const Angle base = line.angle(provisional);
  const double ta = (line.angle(p0) - base).tan();
  const double tb = (line.angle(p1) - base).tan();
  const double tc = (line.angle(p2) - base).tan();

  const double denom = ta - 2.0 * tb + tc;
  if (!(std::abs(denom) > config.eps_tan)) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "angular progression gives no constraint on the offset");
  }
  const Angle x{std::atan((ta * tb - 2.0 * ta * tc + tb * tc) / denom)};

  // x is defined modulo pi; pick the branch that keeps the epipole in front.
  double corrected = base.radians - x.radians;
  while (corrected >= std::numbers::pi / 2) corrected -= std::numbers::pi;
  while (corrected <= -std::numbers::pi / 2) corrected += std::numbers::pi;
  if (std::abs(corrected) >= std::numbers::pi / 2 - 1e-12) {
    throw Error(ErrorCode::DegenerateConfiguration, "corrected epipole is at infinity");
  }
  const Angle x_branch{base.radians - corrected};
  const PixelPoint epipole = line.point_at({corrected});

  double residual = 0.0;
  {
    const Angle a = line.angle(p0) - base + x_branch;
    const Angle b = line.angle(p1) - base + x_branch;
    const Angle c = line.angle(p2) - base + x_branch;
    residual = std::abs(ttc_from_angles(a, b, config.eps_tan) -
                        ttc_from_angles(b, c, config.eps_tan) - 1.0);
  }
  return {x_branch, {epipole, EpipoleMethod::ThreeFrameOffset, residual}, provisional};
}

/// Total-least-squares line through epipoles of different planar motions.
inline HorizonLine calibrate_horizon(std::span<const Epipole> epipoles) {
  if (epipoles.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "need at least two epipoles");
  }
  Vec2 centroid = Vec2::Zero();
  for (const auto& e : epipoles) centroid += e.position.vec();
  centroid /= static_cast<double>(epipoles.size());

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  double spread = 0.0;
  for (const auto& e : epipoles) {
    const Vec2 d = e.position.vec() - centroid;
    scatter += d * d.transpose();
    spread = std::max(spread, d.norm());
  }
  if (!(spread > 1e-9)) {
    throw Error(ErrorCode::SingularGeometry, "all epipoles coincide");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(scatter);
  Vec2 direction = solver.eigenvectors().col(1).normalized();
  if (direction.x() < 0.0 || (direction.x() == 0.0 && direction.y() < 0.0)) direction = -direction;

  HorizonLine line{PixelPoint::from(centroid), direction, 0.0};
  double sq = 0.0;
  for (const auto& e : epipoles) {
    const double d = line.distance_to(e.position);
    sq += d * d;
  }
  line.residual = std::sqrt(sq / static_cast<double>(epipoles.size()));
  return line;
}

}  // namespace collision_plane
