#pragma once

// Pinhole camera conventions shared by every estimator.
//
// Camera frame: +X right, +Y down, +Z forward along the optical axis.
// Image frame: u right, v down, origin at the top-left pixel corner.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <string>

#include "collision_plane/error.hpp"

namespace collision_plane {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using ScenePoint = Eigen::Vector3d;

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {u, v}; }
  static PixelPoint from(const Vec2& p) { return {p.x(), p.y()}; }

  bool operator==(const PixelPoint&) const = default;
};

inline double distance(const PixelPoint& a, const PixelPoint& b) {
  return std::hypot(a.u - b.u, a.v - b.v);
}

/// Signed angle in radians. Kept distinct from plain doubles so that pixel
/// quantities and angles cannot be swapped silently.
struct Angle {
  double radians = 0.0;

  double tan() const { return std::tan(radians); }
  double degrees() const { return radians * 180.0 / std::numbers::pi; }

  friend Angle operator+(Angle a, Angle b) { return {a.radians + b.radians}; }
  friend Angle operator-(Angle a, Angle b) { return {a.radians - b.radians}; }
  friend Angle operator-(Angle a) { return {-a.radians}; }
  auto operator<=>(const Angle&) const = default;
};

struct CameraIntrinsics {
  double focal_px = 0.0;
  PixelPoint principal_point;
  int width = 0;
  int height = 0;
  // Permits a principal point outside the image rectangle.
  bool allow_off_center = false;

  void validate() const {
    if (!std::isfinite(focal_px) || focal_px <= 0.0) {
      throw Error(ErrorCode::InvalidInput, "focal_px must be a positive finite number");
    }
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidInput, "image size must be positive");
    }
    if (!std::isfinite(principal_point.u) || !std::isfinite(principal_point.v)) {
      throw Error(ErrorCode::InvalidInput, "principal point must be finite");
    }
    if (!allow_off_center &&
        (principal_point.u < 0.0 || principal_point.u > width || principal_point.v < 0.0 ||
         principal_point.v > height)) {
      throw Error(ErrorCode::InvalidInput,
                  "principal point lies outside the image; set allow_off_center to permit it");
    }
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

enum class Axis { Horizontal, Vertical };

/// Angle of a single image coordinate relative to the optical axis:
/// arctan((coord - principal component) / focal_px).
inline Angle angle_from_pixel(double coord, const CameraIntrinsics& intrinsics, Axis axis) {
  if (!std::isfinite(coord)) {
    throw Error(ErrorCode::InvalidInput, "pixel coordinate is not finite");
  }
  const double center =
      axis == Axis::Horizontal ? intrinsics.principal_point.u : intrinsics.principal_point.v;
  return {std::atan((coord - center) / intrinsics.focal_px)};
}

inline PixelPoint project(const ScenePoint& point, const CameraIntrinsics& intrinsics) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "cannot project a point with Z <= 0");
  }
  return {intrinsics.principal_point.u + intrinsics.focal_px * point.x() / point.z(),
          intrinsics.principal_point.v + intrinsics.focal_px * point.y() / point.z()};
}

/// Viewing ray (u - u0, v - v0, f) of an image point; not normalized.
inline Vec3 bearing(const PixelPoint& p, const CameraIntrinsics& intrinsics) {
  return {p.u - intrinsics.principal_point.u, p.v - intrinsics.principal_point.v,
          intrinsics.focal_px};
}

/// One-dimensional angular parameterization of an image line.
///
/// The focal point and the image line span a plane. Inside that plane the
/// line is at distance f_eff = sqrt(f^2 + d^2) from the focal point, where d
/// is the pixel distance from the principal point to the line, and the
/// closest point ("foot") is the projection of the principal point onto the
/// line. A point at signed offset s from the foot is seen at angle
/// arctan(s / f_eff). Differences of these angles are the true angles
/// between viewing rays. For a line through the principal point this is the
/// familiar arctan(u / f).
class LineParameterization {
 public:
  /// Line through two distinct points. Direction is canonical: positive u
  /// component, or positive v for a vertical line.
  LineParameterization(const PixelPoint& a, const PixelPoint& b, const CameraIntrinsics& intrinsics)
      : LineParameterization(a, b.vec() - a.vec(), intrinsics) {}

  LineParameterization(const PixelPoint& through, const Vec2& direction,
                       const CameraIntrinsics& intrinsics) {
    const double len = direction.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw Error(ErrorCode::DegenerateGeometry, "line direction is undefined");
    }
    direction_ = direction / len;
    if (direction_.x() < 0.0 || (direction_.x() == 0.0 && direction_.y() < 0.0)) {
      direction_ = -direction_;
    }
    const Vec2 pp = intrinsics.principal_point.vec();
    const Vec2 origin = through.vec();
    foot_ = origin + (pp - origin).dot(direction_) * direction_;
    const double offset = (pp - foot_).norm();
    effective_focal_ = std::hypot(intrinsics.focal_px, offset);
  }

  const Vec2& direction() const { return direction_; }
  PixelPoint foot() const { return PixelPoint::from(foot_); }
  double effective_focal() const { return effective_focal_; }

  /// Signed pixel offset of the orthogonal projection of p onto the line.
  double offset(const PixelPoint& p) const { return (p.vec() - foot_).dot(direction_); }

  Angle angle(const PixelPoint& p) const { return {std::atan(offset(p) / effective_focal_)}; }

  /// Inverse of angle(); |a| must be below pi/2.
  PixelPoint point_at(Angle a) const {
    return PixelPoint::from(foot_ + effective_focal_ * std::tan(a.radians) * direction_);
  }

 private:
  Vec2 direction_;
  Vec2 foot_;
  double effective_focal_ = 0.0;
};

inline constexpr double kCoincidentPx = 1e-9;

/// Signed angle between the viewing rays of a and b, measured along the line
/// joining them: angle(a) - angle(b) in that line's canonical orientation.
inline Angle angular_separation(const PixelPoint& a, const PixelPoint& b,
                                const CameraIntrinsics& intrinsics) {
  if (distance(a, b) <= kCoincidentPx) {
    throw Error(ErrorCode::DegenerateGeometry, "angular separation of coincident points");
  }
  const LineParameterization line(a, b, intrinsics);
  return line.angle(a) - line.angle(b);
}

}  // namespace collision_plane
