#pragma once

// Synthetic constant-velocity scenes observed by a pinhole camera, with the
// analytic collision-plane ground truth for every point.
//
// The camera is held at the origin and every point moves with the relative
// velocity v_g = v_object - v_camera.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane {

struct SceneObject {
  int id = 0;
  std::vector<ScenePoint> points;
  Vec3 velocity = Vec3::Zero();  // per frame
};

struct Scenario {
  CameraIntrinsics intrinsics;
  std::vector<SceneObject> objects;
  Vec3 camera_velocity = Vec3::Zero();  // per frame
  int frame_count = 2;
  double pixel_noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    intrinsics.validate();
    if (frame_count < 2) throw Error(ErrorCode::InvalidInput, "frame_count must be >= 2");
    if (!(pixel_noise_sigma >= 0.0) || !std::isfinite(pixel_noise_sigma)) {
      throw Error(ErrorCode::InvalidInput, "pixel_noise_sigma must be a nonnegative number");
    }
    if (!camera_velocity.allFinite()) throw Error(ErrorCode::InvalidInput, "camera velocity must be finite");
    for (const auto& obj : objects) {
      if (!obj.velocity.allFinite()) {
        throw Error(ErrorCode::InvalidInput, "object " + std::to_string(obj.id) + ": velocity must be finite");
      }
      for (const auto& p : obj.points) {
        if (!p.allFinite() || !(p.z() > 0.0)) {
          throw Error(ErrorCode::InvalidInput,
                      "object " + std::to_string(obj.id) + ": initial points need finite coordinates and Z > 0");
        }
      }
    }
  }

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& o : objects) n += o.points.size();
    return n;
  }
};

/// Analytic collision-plane state of one point.
struct PointTruth {
  std::int64_t track_id = 0;
  int object_id = 0;
  std::size_t point_index = 0;
  ScenePoint initial_position = Vec3::Zero();
  Vec3 relative_velocity = Vec3::Zero();
  // Empty when the relative motion has no component along the optical axis.
  std::optional<PixelPoint> epipole;
  // Frames from frame 0 until the collision plane reaches the focal point.
  // Empty when there is no relative motion.
  std::optional<double> k;
  double H = 0.0;              // in units of |v_g|
  double miss_distance = 0.0;  // metric, H * |v_g|
  MotionClass label = MotionClass::ConstantBearing;
  bool truncated = false;
  int valid_frames = 0;

  std::optional<double> k_at(int frame) const {
    if (!k) return std::nullopt;
    return *k - frame;
  }
};

struct GroundTruth {
  std::vector<PointTruth> points;
};

struct Simulation {
  std::vector<TrackObservation> tracks;
  GroundTruth truth;
};

/// Collision-plane truth for a point at `position` moving by `relative_velocity`
/// per frame.
inline PointTruth analytic_truth(const ScenePoint& position, const Vec3& relative_velocity,
                                 const CameraIntrinsics& intrinsics) {
  PointTruth t;
  t.initial_position = position;
  t.relative_velocity = relative_velocity;
  const double speed = relative_velocity.norm();
  if (!(speed > 0.0)) {
    t.label = MotionClass::ConstantBearing;
    return t;
  }
  const Vec3 dir = relative_velocity / speed;
  const double along = position.dot(dir);
  t.k = -along / speed;
  t.miss_distance = (position - along * dir).norm();
  t.H = t.miss_distance / speed;
  if (std::abs(relative_velocity.z()) > 1e-12 * speed) {
    t.epipole = PixelPoint{
        intrinsics.principal_point.u + intrinsics.focal_px * relative_velocity.x() / relative_velocity.z(),
        intrinsics.principal_point.v + intrinsics.focal_px * relative_velocity.y() / relative_velocity.z()};
  }
  if (t.miss_distance <= 1e-12 * std::max(1.0, position.norm())) {
    t.label = MotionClass::ConstantBearing;
  } else {
    t.label = *t.k > 0.0 ? MotionClass::Approaching : MotionClass::Receding;
  }
  return t;
}

/// Projects every point over frame_count frames. Tracks whose point leaves
/// the Z > 0 half-space are cut at the last valid frame and flagged.
/// Track ids are assigned sequentially in object/point order.
inline Simulation simulate(const Scenario& scenario) {
  scenario.validate();
  std::mt19937_64 rng(scenario.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = scenario.pixel_noise_sigma;

  Simulation sim;
  std::int64_t next_id = 0;
  for (const auto& obj : scenario.objects) {
    const Vec3 v_g = obj.velocity - scenario.camera_velocity;
    for (std::size_t pi = 0; pi < obj.points.size(); ++pi) {
      const std::int64_t id = next_id++;
      PointTruth truth = analytic_truth(obj.points[pi], v_g, scenario.intrinsics);
      truth.track_id = id;
      truth.object_id = obj.id;
      truth.point_index = pi;

      std::vector<Observation> obs;
      for (int f = 0; f < scenario.frame_count; ++f) {
        const ScenePoint p = obj.points[pi] + static_cast<double>(f) * v_g;
        if (!(p.z() > 0.0)) {
          truth.truncated = true;
          break;
        }
        PixelPoint px = project(p, scenario.intrinsics);
        if (sigma > 0.0) {
          px.u += sigma * noise(rng);
          px.v += sigma * noise(rng);
        }
        obs.push_back({f, px});
      }
      truth.valid_frames = static_cast<int>(obs.size());
      sim.tracks.emplace_back(std::move(obs), id);
      sim.truth.points.push_back(truth);
    }
  }
  return sim;
}

// ---------------------------------------------------------------------------
// Collision maps over camera velocity changes.

/// Candidate velocity changes: forward in [-forward_extent, forward_extent]
/// with forward_cells samples, lateral likewise. With an odd count the
/// middle sample is exactly 0.
struct VelocityGrid {
  double forward_extent = 0.0;
  double lateral_extent = 0.0;
  int forward_cells = 1;
  int lateral_cells = 1;

  void validate() const {
    if (forward_cells < 1 || lateral_cells < 1) {
      throw Error(ErrorCode::InvalidInput, "grid resolution must be at least 1x1");
    }
    if (!(forward_extent >= 0.0) || !(lateral_extent >= 0.0) || !std::isfinite(forward_extent) ||
        !std::isfinite(lateral_extent)) {
      throw Error(ErrorCode::InvalidInput, "grid extents must be finite and nonnegative");
    }
  }

  static double sample(double extent, int cells, int i) {
    if (cells == 1) return 0.0;
    return extent * static_cast<double>(2 * i - (cells - 1)) / static_cast<double>(cells - 1);
  }
  double forward_at(int i) const { return sample(forward_extent, forward_cells, i); }
  double lateral_at(int j) const { return sample(lateral_extent, lateral_cells, j); }
};

struct CollisionCell {
  double dv_forward = 0.0;
  double dv_lateral = 0.0;
  // Smallest positive TTC over all points, and that point's metric miss
  // distance. Empty when nothing approaches.
  std::optional<double> min_ttc;
  std::optional<double> miss_distance;
  bool collision = false;
  // First object (scenario order) flagged as colliding.
  std::optional<int> object_id;

  bool operator==(const CollisionCell&) const = default;
};

struct CollisionMap {
  VelocityGrid grid;
  std::vector<CollisionCell> cells;  // row-major: forward index, then lateral

  const CollisionCell& at(int forward_index, int lateral_index) const {
    return cells[static_cast<std::size_t>(forward_index * grid.lateral_cells + lateral_index)];
  }
};

/// Collision relation of a scene: a point collides when its plane reaches the
/// focal point within frame_count frames and its motion line passes closer
/// than `collision_radius`.
inline CollisionCell collision_state(const GroundTruth& truth, int frame_count,
                                     double collision_radius) {
  CollisionCell cell;
  for (const auto& p : truth.points) {
    if (!p.k || !(*p.k > 0.0)) continue;
    if (!cell.min_ttc || *p.k < *cell.min_ttc) {
      cell.min_ttc = p.k;
      cell.miss_distance = p.miss_distance;
    }
    if (!cell.collision && *p.k <= frame_count && p.miss_distance < collision_radius) {
      cell.collision = true;
      cell.object_id = p.object_id;
    }
  }
  return cell;
}

/// Re-simulates the scenario for every camera velocity change
/// (dv_lateral, 0, dv_forward) and records the resulting collision state.
inline CollisionMap collision_map(const Scenario& scenario, const VelocityGrid& grid,
                                  double collision_radius) {
  grid.validate();
  if (!(collision_radius > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "collision radius must be positive");
  }
  scenario.validate();
  CollisionMap map;
  map.grid = grid;
  map.cells.reserve(static_cast<std::size_t>(grid.forward_cells * grid.lateral_cells));
  Scenario cell_scenario = scenario;
  cell_scenario.pixel_noise_sigma = 0.0;
  for (int i = 0; i < grid.forward_cells; ++i) {
    for (int j = 0; j < grid.lateral_cells; ++j) {
      const double df = grid.forward_at(i);
      const double dl = grid.lateral_at(j);
      cell_scenario.camera_velocity = scenario.camera_velocity + Vec3(dl, 0.0, df);
      const Simulation sim = simulate(cell_scenario);
      CollisionCell cell = collision_state(sim.truth, scenario.frame_count, collision_radius);
      cell.dv_forward = df;
      cell.dv_lateral = dl;
      map.cells.push_back(cell);
    }
  }
  return map;
}

}  // namespace collision_plane
