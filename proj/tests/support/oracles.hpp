#pragma once

// Test-side reference computations. These work directly from 3D geometry
// (ray angles, dot products, brute-force enumeration) and do not call the
// library routines they are used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "collision_plane/collision_plane.hpp"

namespace oracle {

using collision_plane::CameraIntrinsics;
using collision_plane::PixelPoint;
using collision_plane::Vec3;

inline CameraIntrinsics camera(double f = 800.0, double u0 = 640.0, double v0 = 360.0) {
  CameraIntrinsics c;
  c.focal_px = f;
  c.principal_point = {u0, v0};
  c.width = static_cast<int>(2 * u0);
  c.height = static_cast<int>(2 * v0);
  c.allow_off_center = true;
  return c;
}

inline Vec3 ray(const PixelPoint& p, const CameraIntrinsics& c) {
  return Vec3(p.u - c.principal_point.u, p.v - c.principal_point.v, c.focal_px).normalized();
}

inline PixelPoint pinhole(const Vec3& P, const CameraIntrinsics& c) {
  return {c.principal_point.u + c.focal_px * P.x() / P.z(),
          c.principal_point.v + c.focal_px * P.y() / P.z()};
}

/// Unsigned angle between the viewing rays of two pixels.
inline double ray_angle(const PixelPoint& a, const PixelPoint& b, const CameraIntrinsics& c) {
  const Vec3 ra = ray(a, c);
  const Vec3 rb = ray(b, c);
  return std::atan2(ra.cross(rb).norm(), ra.dot(rb));
}

/// Frames until the plane through P with normal v reaches the focal point.
inline double true_k(const Vec3& P, const Vec3& v) { return -P.dot(v) / v.squaredNorm(); }

/// Perpendicular distance of the motion line from the focal point, in units
/// of |v|.
inline double true_H(const Vec3& P, const Vec3& v) { return P.cross(v).norm() / v.squaredNorm(); }

inline PixelPoint true_epipole(const Vec3& v, const CameraIntrinsics& c) {
  return pinhole(v, c);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// ---------------------------------------------------------------------------
// Random constant-velocity motions.

struct Motion {
  Vec3 P0;
  Vec3 v;
};

/// A point ahead of the camera that stays in front for `frames` frames and
/// is approaching (v_z < 0). Epipole and track stay within a few image widths
/// so angles are well conditioned.
inline Motion random_motion(std::mt19937_64& rng, int frames, bool planar = false) {
  std::uniform_real_distribution<double> xy(-6.0, 6.0);
  std::uniform_real_distribution<double> depth(15.0, 60.0);
  std::uniform_real_distribution<double> vz(-1.2, -0.3);
  std::uniform_real_distribution<double> vxy(-0.5, 0.5);
  for (;;) {
    Motion m;
    m.P0 = Vec3(xy(rng), planar ? std::abs(xy(rng)) * 0.3 + 0.5 : xy(rng), depth(rng));
    m.v = Vec3(vxy(rng), planar ? 0.0 : vxy(rng), vz(rng));
    const Vec3 last = m.P0 + (frames - 1) * m.v;
    if (last.z() < 3.0) continue;
    // Keep the flow visibly non-zero and away from the epipole.
    const auto c = camera();
    const PixelPoint a = pinhole(m.P0, c);
    const PixelPoint b = pinhole(m.P0 + m.v, c);
    if (std::hypot(a.u - b.u, a.v - b.v) < 0.5) continue;
    const PixelPoint e = true_epipole(m.v, c);
    if (std::hypot(a.u - e.u, a.v - e.v) < 5.0) continue;
    return m;
  }
}

inline collision_plane::TrackObservation track_of(const Motion& m, int frames,
                                                  const CameraIntrinsics& c, std::int64_t id = 0) {
  std::vector<collision_plane::Observation> obs;
  for (int f = 0; f < frames; ++f) obs.push_back({f, pinhole(m.P0 + f * m.v, c)});
  return collision_plane::TrackObservation(std::move(obs), id);
}

// ---------------------------------------------------------------------------
// Clustering scenes.

/// Three rigid objects with 8 points each, relative motions chosen so their
/// epipoles are at least 100 px apart, tracked over `frames` frames.
inline collision_plane::Scenario three_object_scene(std::uint64_t seed, double sigma, int frames = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const CameraIntrinsics c = camera();
  collision_plane::Scenario s;
  s.intrinsics = c;
  s.frame_count = frames;
  s.pixel_noise_sigma = sigma;
  s.rng_seed = seed;

  const double centres_x[3] = {-5.0, 0.0, 5.0};
  std::vector<PixelPoint> placed;
  for (int o = 0; o < 3; ++o) {
    collision_plane::SceneObject obj;
    obj.id = o;
    const Vec3 centre(centres_x[o] + unit(rng), 0.5 * unit(rng), 25.0 + 5.0 * o + 3.0 * unit(rng));
    // Closing speed capped so every point stays at least 3 m ahead.
    const double vz_cap = (centre.z() - 1.0 - 3.0) / std::max(1, frames - 1);
    for (;;) {
      const double vz = -std::min(0.6 + 0.3 * (unit(rng) + 1.0), vz_cap);
      obj.velocity = Vec3(0.35 * unit(rng), 0.15 * unit(rng), vz);
      const PixelPoint e = true_epipole(obj.velocity, c);
      const bool apart = std::all_of(placed.begin(), placed.end(), [&](const PixelPoint& q) {
        return std::hypot(e.u - q.u, e.v - q.v) >= 100.0;
      });
      if (apart) {
        placed.push_back(e);
        break;
      }
    }
    for (int i = 0; i < 8; ++i) {
      obj.points.push_back(centre + Vec3(1.5 * unit(rng), 1.2 * unit(rng), 1.0 * unit(rng)));
    }
    s.objects.push_back(obj);
  }
  return s;
}

/// Track line as centroid + direction, from the closed-form principal-axis
/// orientation 0.5 * atan2(2 Sxy, Sxx - Syy).
struct FittedLine {
  Eigen::Vector2d centroid;
  Eigen::Vector2d direction;
};

inline FittedLine fit_line(const collision_plane::TrackObservation& t) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& o : t.frames()) c += Eigen::Vector2d(o.position.u, o.position.v);
  c /= static_cast<double>(t.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& o : t.frames()) {
    const double dx = o.position.u - c.x(), dy = o.position.v - c.y();
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return {c, Eigen::Vector2d(std::cos(theta), std::sin(theta))};
}

/// Largest consensus over every pair-intersection hypothesis, recomputed
/// from scratch: line distances from 2D cross products, TTC from ray angles.
inline std::size_t brute_force_consensus(const std::vector<collision_plane::TrackObservation>& tracks,
                                         const CameraIntrinsics& c, double eps_dist,
                                         std::optional<double> eps_ttc) {
  using V2 = Eigen::Vector2d;
  std::vector<FittedLine> lines;
  for (const auto& t : tracks) lines.push_back(fit_line(t));
  auto cross = [](const V2& a, const V2& b) { return a.x() * b.y() - a.y() * b.x(); };
  auto line_dist = [&](std::size_t i, const V2& e) {
    return std::abs(cross(lines[i].direction, e - lines[i].centroid));
  };
  auto ttc = [&](std::size_t i, const V2& e) -> std::optional<double> {
    const PixelPoint ep{e.x(), e.y()};
    const PixelPoint a = tracks[i].front().position;
    const PixelPoint b = tracks[i].back().position;
    if (std::hypot(a.u - ep.u, a.v - ep.v) <= 1e-9 || std::hypot(b.u - ep.u, b.v - ep.v) <= 1e-9) {
      return std::nullopt;
    }
    const double ta = std::tan(ray_angle(a, ep, c));
    const double tb = std::tan(ray_angle(b, ep, c));
    if (std::abs(tb - ta) < 1e-12) return std::nullopt;
    return static_cast<double>(tracks[i].back().frame - tracks[i].front().frame) * tb / (tb - ta);
  };

  std::size_t best = 0;
  const std::size_t n = tracks.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const V2 d1 = lines[i].direction, d2 = lines[j].direction;
      const double den = cross(d1, d2);
      if (std::abs(den) <= std::sin(0.5 * std::numbers::pi / 180.0)) continue;
      const V2 e = lines[i].centroid + d1 * (cross(lines[j].centroid - lines[i].centroid, d2) / den);

      std::vector<double> ks;
      for (std::size_t m = 0; m < n; ++m) {
        if (line_dist(m, e) > eps_dist) continue;
        if (const auto k = ttc(m, e)) ks.push_back(*k);
      }
      if (ks.empty()) continue;
      std::vector<double> sorted = ks;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t mid = sorted.size() / 2;
      const double median =
          sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
      const double tol = eps_ttc ? *eps_ttc : std::max(1.0, 0.1 * std::abs(median));
      const auto count = static_cast<std::size_t>(std::count_if(
          ks.begin(), ks.end(), [&](double k) { return std::abs(k - median) <= tol; }));
      best = std::max(best, count);
    }
  }
  return best;
}

/// Central difference of Z(d) = B f / d at the true disparity, times dp.
inline double depth_error_fd(double B, double f, double z, double dp) {
  const double d = B * f / z;
  const double h = 1e-4 * d;
  const double dz_dd = (B * f / (d + h) - B * f / (d - h)) / (2.0 * h);
  return std::abs(dz_dd) * dp;
}

}  // namespace oracle
