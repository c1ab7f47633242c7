#pragma once

// Time-to-collision of a single tracked point relative to its epipole, and
// the collision-plane decomposition P' = k * v_g + H * v_H.
//
// Conventions:
//  - k counts frames from the FIRST observation of the pair until the
//    collision plane sweeps through the focal point. Negative k means the
//    plane passed |k| frames before the first observation (receding point).
//  - H is the distance between the focal point and the point's motion line,
//    in units of the per-frame relative displacement. Always >= 0.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole.hpp"
#include "collision_plane/error.hpp"

namespace collision_plane {

struct TtcConfig {
  double eps_tan = 1e-12;
  double eps_px = 0.05;
};

struct Observation {
  std::int64_t frame = 0;
  PixelPoint position;

  bool operator==(const Observation&) const = default;
};

/// Per-frame pixel observations of one tracked point. Frame indices are
/// strictly increasing with unit step.
class TrackObservation {
 public:
  TrackObservation() = default;

  explicit TrackObservation(std::vector<Observation> frames, std::int64_t id = 0)
      : id_(id), frames_(std::move(frames)) {
    for (std::size_t i = 1; i < frames_.size(); ++i) {
      if (frames_[i].frame != frames_[i - 1].frame + 1) {
        throw Error(ErrorCode::InvalidInput,
                    "track " + std::to_string(id_) +
                        ": frame indices must increase by exactly 1 between observations");
      }
    }
    for (const auto& o : frames_) {
      if (!std::isfinite(o.position.u) || !std::isfinite(o.position.v)) {
        throw Error(ErrorCode::InvalidInput,
                    "track " + std::to_string(id_) + ": non-finite pixel position");
      }
    }
  }

  std::int64_t id() const { return id_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Observation& operator[](std::size_t i) const { return frames_[i]; }
  const PixelPoint& position(std::size_t i) const { return frames_[i].position; }
  std::span<const Observation> frames() const { return frames_; }

  const Observation& front() const { return frames_.front(); }
  const Observation& back() const { return frames_.back(); }

  void require_frames(std::size_t n) const {
    if (frames_.size() < n) {
      throw Error(ErrorCode::InsufficientData, "track " + std::to_string(id_) + " has " +
                                                   std::to_string(frames_.size()) +
                                                   " frames, need " + std::to_string(n));
    }
  }

  /// Same observations in reverse temporal order, renumbered from the
  /// original first frame index.
  TrackObservation reversed() const {
    std::vector<Observation> out;
    out.reserve(frames_.size());
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      out.push_back({frames_.empty() ? 0 : frames_.front().frame + static_cast<std::int64_t>(i),
                     frames_[frames_.size() - 1 - i].position});
    }
    return TrackObservation(std::move(out), id_);
  }

  bool operator==(const TrackObservation&) const = default;

 private:
  std::int64_t id_ = 0;
  std::vector<Observation> frames_;
};

enum class MotionClass { Approaching, Receding, ConstantBearing };

inline std::string_view to_string(MotionClass c) {
  switch (c) {
    case MotionClass::Approaching: return "Approaching";
    case MotionClass::Receding: return "Receding";
    case MotionClass::ConstantBearing: return "ConstantBearing";
  }
  return "Unknown";
}

struct CollisionEstimate {
  double k = 0.0;
  double H = 0.0;
  // Unit vector with P' = k * v_g_dir + H * v_H_dir. Points toward the
  // epipole for approaching points and away from it for receding ones, so it
  // is always opposite to the relative motion.
  Vec3 v_g_dir = Vec3::Zero();
  Vec3 v_H_dir = Vec3::Zero();
  // First-frame position in collision-time units (scaled by 1 / |v_g|).
  Vec3 position = Vec3::Zero();
};

/// k = tan(beta) / (tan(beta) - tan(alpha)), alpha observed one frame before
/// beta. Throws StationaryPoint when the two tangents coincide.
inline double ttc_from_angles(Angle alpha, Angle beta, double eps_tan = 1e-12) {
  const double ta = alpha.tan();
  const double tb = beta.tan();
  const double denom = tb - ta;
  if (!(std::abs(denom) >= eps_tan)) {
    throw Error(ErrorCode::StationaryPoint, "no angular motion relative to the epipole");
  }
  return tb / denom;
}

namespace detail {

// Unsigned angle between the rays of p and the epipole, measured along the
// line through both.
inline Angle angle_from_epipole(const PixelPoint& p, const PixelPoint& epipole,
                                const CameraIntrinsics& intrinsics) {
  return {std::abs(angular_separation(p, epipole, intrinsics).radians)};
}

inline void check_not_on_epipole(const PixelPoint& a, const PixelPoint& b,
                                 const PixelPoint& epipole) {
  const bool a_on = distance(a, epipole) <= kCoincidentPx;
  const bool b_on = distance(b, epipole) <= kCoincidentPx;
  if (a_on && b_on) {
    throw Error(ErrorCode::StationaryPoint, "point stays on the epipole (constant bearing)");
  }
  if (a_on || b_on) {
    throw Error(ErrorCode::DegenerateGeometry, "epipole coincides with a track point");
  }
}

}  // namespace detail

/// k between two observations that are `frame_gap` frames apart, expressed
/// in single frames.
inline double ttc_between(const PixelPoint& first, const PixelPoint& second,
                          const PixelPoint& epipole, const CameraIntrinsics& intrinsics,
                          double frame_gap = 1.0, double eps_tan = 1e-12) {
  detail::check_not_on_epipole(first, second, epipole);
  const Angle alpha = detail::angle_from_epipole(first, epipole, intrinsics);
  const Angle beta = detail::angle_from_epipole(second, epipole, intrinsics);
  return frame_gap * ttc_from_angles(alpha, beta, eps_tan);
}

/// Collision-plane decomposition from the first two frames of a track.
inline CollisionEstimate collision_estimate(const TrackObservation& track, const Epipole& epipole,
                                            const CameraIntrinsics& intrinsics,
                                            const TtcConfig& config = {}) {
  track.require_frames(2);
  const PixelPoint& p0 = track.position(0);
  const PixelPoint& p1 = track.position(1);
  const PixelPoint& e = epipole.position;
  detail::check_not_on_epipole(p0, p1, e);

  const Angle alpha = detail::angle_from_epipole(p0, e, intrinsics);
  const Angle beta = detail::angle_from_epipole(p1, e, intrinsics);

  CollisionEstimate out;
  out.k = ttc_from_angles(alpha, beta, config.eps_tan);
  out.H = std::abs(out.k * alpha.tan());

  const Vec3 toward_epipole = bearing(e, intrinsics).normalized();
  out.v_g_dir = out.k >= 0.0 ? toward_epipole : Vec3(-toward_epipole);

  const Vec3 lateral = toward_epipole.cross(bearing(p0, intrinsics)).cross(toward_epipole);
  out.v_H_dir = lateral.normalized();
  out.position = out.k * out.v_g_dir + out.H * out.v_H_dir;
  return out;
}

/// Approaching when the pixel distance to the epipole grows by more than
/// eps_px between the first and last observation.
inline MotionClass classify_motion(const TrackObservation& track, const Epipole& epipole,
                                   double eps_px = 0.05) {
  track.require_frames(2);
  const double first = distance(track.front().position, epipole.position);
  const double last = distance(track.back().position, epipole.position);
  if (last - first > eps_px) return MotionClass::Approaching;
  if (first - last > eps_px) return MotionClass::Receding;
  return MotionClass::ConstantBearing;
}

/// k(frames 0,1) - k(frames 1,2). Equals 1 for constant-velocity motion seen
/// against the correct epipole.
inline double ttc_three_frame_consistency(const TrackObservation& track, const Epipole& epipole,
                                          const CameraIntrinsics& intrinsics,
                                          const TtcConfig& config = {}) {
  track.require_frames(3);
  const double k01 = ttc_between(track.position(0), track.position(1), epipole.position,
                                 intrinsics, 1.0, config.eps_tan);
  const double k12 = ttc_between(track.position(1), track.position(2), epipole.position,
                                 intrinsics, 1.0, config.eps_tan);
  return k01 - k12;
}

}  // namespace collision_plane
