#pragma once

// RANSAC segmentation of flow vectors into independently translating groups.
// A group shares one epipole (every flow line passes within eps_dist of it)
// and has similar time-to-collision across its members.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole.hpp"
#include "collision_plane/epipole_estimation.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane {

struct ClusteringConfig {
  double eps_dist = 2.0;
  // Absolute TTC tolerance in frames. Unset: max(1 frame, 10% of |median k|).
  std::optional<double> eps_ttc;
  int max_iterations = 500;
  int sample_size = 2;
  int min_cluster_size = 3;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(eps_dist > 0.0)) throw Error(ErrorCode::InvalidInput, "eps_dist must be positive");
    if (eps_ttc && !(*eps_ttc > 0.0)) throw Error(ErrorCode::InvalidInput, "eps_ttc must be positive");
    if (max_iterations <= 0) throw Error(ErrorCode::InvalidInput, "max_iterations must be positive");
    if (sample_size < 2) throw Error(ErrorCode::InvalidInput, "sample_size must be >= 2");
    if (min_cluster_size < 3) throw Error(ErrorCode::InvalidInput, "min_cluster_size must be >= 3");
  }

  double ttc_tolerance(double median_k) const {
    return eps_ttc ? *eps_ttc : std::max(1.0, 0.1 * std::abs(median_k));
  }
};

struct MotionCluster {
  std::vector<std::size_t> member_indices;  // ascending
  Epipole epipole;
  std::vector<double> ttc_values;  // parallel to member_indices
  double mean_ttc = 0.0;
  // Inlier count of the winning hypothesis before refitting.
  std::size_t consensus_size = 0;
};

struct ClusteringResult {
  std::vector<MotionCluster> clusters;
  std::vector<std::size_t> outliers;  // ascending
};

/// Perpendicular distance from the epipole to the flow line, |n . (e - p)|.
inline double line_epipole_distance(const FlowVector& flow, const PixelPoint& epipole) {
  return std::abs(flow.n().dot(epipole.vec() - flow.p.vec()));
}

inline double line_epipole_distance(const FlowVector& flow, const Epipole& epipole) {
  return line_epipole_distance(flow, epipole.position);
}

/// TTC of a track against a candidate epipole, from its first and last
/// observations. Empty when the geometry gives no finite value.
inline std::optional<double> track_ttc(const TrackObservation& track, const PixelPoint& epipole,
                                       const CameraIntrinsics& intrinsics) {
  if (track.size() < 2) return std::nullopt;
  try {
    return ttc_between(track.front().position, track.back().position, epipole, intrinsics,
                       static_cast<double>(track.back().frame - track.front().frame));
  } catch (const Error&) {
    return std::nullopt;
  }
}

namespace detail {

inline double median_of(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

struct Consensus {
  std::vector<std::size_t> members;
  std::vector<double> ttc;
  double rms_distance = std::numeric_limits<double>::infinity();

  bool better_than(const Consensus& other) const {
    if (members.size() != other.members.size()) return members.size() > other.members.size();
    return rms_distance < other.rms_distance;
  }
};

}  // namespace detail

/// Inliers of an epipole hypothesis among `candidates`: flow lines within
/// eps_dist of the epipole whose TTC lies within the tolerance of the median
/// TTC of those lines.
inline detail::Consensus score_hypothesis(const PixelPoint& epipole,
                                          std::span<const std::size_t> candidates,
                                          std::span<const FlowVector> flows,
                                          std::span<const TrackObservation> tracks,
                                          const CameraIntrinsics& intrinsics,
                                          const ClusteringConfig& config) {
  std::vector<std::size_t> near;
  std::vector<double> near_ttc;
  for (const std::size_t i : candidates) {
    if (!flows[i].valid()) continue;
    if (line_epipole_distance(flows[i], epipole) > config.eps_dist) continue;
    const auto k = track_ttc(tracks[i], epipole, intrinsics);
    if (!k) continue;
    near.push_back(i);
    near_ttc.push_back(*k);
  }
  detail::Consensus out;
  if (near.empty()) return out;

  const double median = detail::median_of(near_ttc);
  const double tol = config.ttc_tolerance(median);
  double sq = 0.0;
  for (std::size_t j = 0; j < near.size(); ++j) {
    if (std::abs(near_ttc[j] - median) <= tol) {
      out.members.push_back(near[j]);
      out.ttc.push_back(near_ttc[j]);
      const double d = line_epipole_distance(flows[near[j]], epipole);
      sq += d * d;
    }
  }
  if (!out.members.empty()) out.rms_distance = std::sqrt(sq / static_cast<double>(out.members.size()));
  return out;
}

namespace detail {

inline std::optional<PixelPoint> pair_intersection(const FlowVector& a, const FlowVector& b) {
  try {
    const FlowVector pair[] = {a, b};
    return epipole_least_squares(pair).position;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Drops members until every one satisfies the distance bound and
// |k - mean k| <= tolerance against the final member set.
inline void enforce_cluster_invariants(MotionCluster& c, std::span<const FlowVector> flows,
                                       const ClusteringConfig& config) {
  bool changed = true;
  while (changed && !c.member_indices.empty()) {
    changed = false;
    const double mean =
        std::accumulate(c.ttc_values.begin(), c.ttc_values.end(), 0.0) / c.ttc_values.size();
    const double tol = config.ttc_tolerance(median_of(c.ttc_values));
    // Remove the single worst violator per pass so the mean settles.
    std::optional<std::size_t> worst;
    double worst_excess = 0.0;
    for (std::size_t j = 0; j < c.member_indices.size(); ++j) {
      const double dist_excess =
          line_epipole_distance(flows[c.member_indices[j]], c.epipole) - config.eps_dist;
      const double ttc_excess = std::abs(c.ttc_values[j] - mean) - tol;
      const double excess = std::max(dist_excess / config.eps_dist, ttc_excess / tol);
      if (excess > 0.0 && excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (worst) {
      c.member_indices.erase(c.member_indices.begin() + static_cast<std::ptrdiff_t>(*worst));
      c.ttc_values.erase(c.ttc_values.begin() + static_cast<std::ptrdiff_t>(*worst));
      changed = true;
    }
    if (!c.ttc_values.empty()) {
      c.mean_ttc = std::accumulate(c.ttc_values.begin(), c.ttc_values.end(), 0.0) /
                   static_cast<double>(c.ttc_values.size());
    }
  }
}

// Greedy extraction lets an early cluster absorb a flow whose line passes
// near its epipole by accident. Afterwards every flow goes to the accepting
// cluster it fits best, measuring both the line distance and the TTC
// deviation against their tolerances; epipoles are refit until nothing moves.
inline void reassign_members(ClusteringResult& result, std::span<const FlowVector> flows,
                             std::span<const TrackObservation> tracks,
                             const CameraIntrinsics& intrinsics, const ClusteringConfig& config) {
  if (result.clusters.size() < 2 && result.outliers.empty()) return;
  for (int round = 0; round < 5; ++round) {
    std::vector<std::vector<std::size_t>> members(result.clusters.size());
    std::vector<std::vector<double>> ttcs(result.clusters.size());
    std::vector<std::size_t> outliers;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (!flows[i].valid()) {
        outliers.push_back(i);
        continue;
      }
      std::optional<std::size_t> best;
      double best_score = std::numeric_limits<double>::infinity();
      double best_k = 0.0;
      for (std::size_t c = 0; c < result.clusters.size(); ++c) {
        const MotionCluster& cl = result.clusters[c];
        const double d = line_epipole_distance(flows[i], cl.epipole);
        if (d > config.eps_dist) continue;
        const auto k = track_ttc(tracks[i], cl.epipole.position, intrinsics);
        const double tol = config.ttc_tolerance(cl.mean_ttc);
        if (!k || std::abs(*k - cl.mean_ttc) > tol) continue;
        const double rd = d / config.eps_dist;
        const double rk = (*k - cl.mean_ttc) / tol;
        if (rd * rd + rk * rk < best_score) {
          best = c;
          best_score = rd * rd + rk * rk;
          best_k = *k;
        }
      }
      if (best) {
        members[*best].push_back(i);
        ttcs[*best].push_back(best_k);
      } else {
        outliers.push_back(i);
      }
    }

    bool changed = outliers != result.outliers;
    for (std::size_t c = 0; c < result.clusters.size(); ++c) {
      changed = changed || members[c] != result.clusters[c].member_indices;
    }
    if (!changed) return;

    ClusteringResult next;
    for (std::size_t c = 0; c < result.clusters.size(); ++c) {
      MotionCluster cl = result.clusters[c];
      cl.member_indices = members[c];
      cl.ttc_values = ttcs[c];
      if (cl.member_indices.size() >= 2) {
        std::vector<FlowVector> member_flows;
        for (const std::size_t i : cl.member_indices) member_flows.push_back(flows[i]);
        try {
          const Epipole refit = epipole_least_squares(member_flows);
          std::vector<std::size_t> kept;
          std::vector<double> kept_ttc;
          for (const std::size_t i : cl.member_indices) {
            if (const auto k = track_ttc(tracks[i], refit.position, intrinsics)) {
              kept.push_back(i);
              kept_ttc.push_back(*k);
            }
          }
          cl.epipole = refit;
          cl.member_indices = std::move(kept);
          cl.ttc_values = std::move(kept_ttc);
        } catch (const Error&) {
        }
      }
      enforce_cluster_invariants(cl, flows, config);
      if (cl.member_indices.size() < static_cast<std::size_t>(config.min_cluster_size)) {
        outliers.insert(outliers.end(), cl.member_indices.begin(), cl.member_indices.end());
        continue;
      }
      next.clusters.push_back(std::move(cl));
    }
    std::vector<std::size_t> placed;
    for (const auto& cl : next.clusters) placed.insert(placed.end(), cl.member_indices.begin(), cl.member_indices.end());
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (std::find(placed.begin(), placed.end(), i) == placed.end()) next.outliers.push_back(i);
    }
    result = std::move(next);
  }
}

}  // namespace detail

/// Greedy sequential RANSAC: find the largest consensus set among the
/// remaining flows, refit its epipole on all inliers, remove it, repeat.
/// Deterministic for a given config.rng_seed. When all 2-subsets of the
/// remaining flows fit in max_iterations they are enumerated exhaustively.
inline ClusteringResult cluster_flows(std::span<const FlowVector> flows,
                                      std::span<const TrackObservation> tracks,
                                      const CameraIntrinsics& intrinsics,
                                      const ClusteringConfig& config = {}) {
  config.validate();
  if (flows.size() != tracks.size()) {
    throw Error(ErrorCode::InvalidInput, "flows and tracks must be parallel lists");
  }
  if (flows.size() < static_cast<std::size_t>(config.min_cluster_size)) {
    throw Error(ErrorCode::InsufficientData, "fewer flows than min_cluster_size");
  }

  std::mt19937_64 rng(config.rng_seed);
  ClusteringResult result;
  std::vector<std::size_t> remaining(flows.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  while (remaining.size() >= static_cast<std::size_t>(config.min_cluster_size)) {
    detail::Consensus best;
    std::optional<PixelPoint> best_epipole;

    auto try_pair = [&](std::size_t a, std::size_t b) {
      const auto e = detail::pair_intersection(flows[a], flows[b]);
      if (!e) return;
      auto c = score_hypothesis(*e, remaining, flows, tracks, intrinsics, config);
      if (c.better_than(best)) {
        best = std::move(c);
        best_epipole = e;
      }
    };

    const std::size_t n = remaining.size();
    const std::size_t pairs = n * (n - 1) / 2;
    if (pairs <= static_cast<std::size_t>(config.max_iterations)) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) try_pair(remaining[i], remaining[j]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (int it = 0; it < config.max_iterations; ++it) {
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        while (j == i) j = pick(rng);
        try_pair(remaining[i], remaining[j]);
      }
    }

    if (!best_epipole || best.members.size() < static_cast<std::size_t>(config.min_cluster_size)) {
      break;
    }

    MotionCluster cluster;
    cluster.consensus_size = best.members.size();
    cluster.epipole = {*best_epipole, EpipoleMethod::LeastSquares, best.rms_distance};
    detail::Consensus current = best;
    for (int refit = 0; refit < 5; ++refit) {
      std::vector<FlowVector> member_flows;
      for (const std::size_t i : current.members) member_flows.push_back(flows[i]);
      Epipole refined;
      try {
        refined = epipole_least_squares(member_flows);
      } catch (const Error&) {
        break;
      }
      auto next = score_hypothesis(refined.position, remaining, flows, tracks, intrinsics, config);
      if (next.members.size() < current.members.size()) break;
      cluster.epipole = refined;
      const bool stable = next.members == current.members;
      current = std::move(next);
      if (stable) break;
    }
    cluster.member_indices = current.members;
    cluster.ttc_values = current.ttc;
    detail::enforce_cluster_invariants(cluster, flows, config);
    if (cluster.member_indices.size() < static_cast<std::size_t>(config.min_cluster_size)) break;

    std::vector<std::size_t> rest;
    std::set_difference(remaining.begin(), remaining.end(), cluster.member_indices.begin(),
                        cluster.member_indices.end(), std::back_inserter(rest));
    remaining = std::move(rest);
    result.clusters.push_back(std::move(cluster));
  }

  result.outliers = remaining;
  detail::reassign_members(result, flows, tracks, intrinsics, config);
  return result;
}

/// Convenience overload deriving one flow per track from a line fit over all
/// of its observations.
inline ClusteringResult cluster_tracks(std::span<const TrackObservation> tracks,
                                       const CameraIntrinsics& intrinsics,
                                       const ClusteringConfig& config = {}) {
  std::vector<FlowVector> flows;
  flows.reserve(tracks.size());
  for (const auto& t : tracks) {
    flows.push_back(t.size() >= 2 ? FlowVector::fit_track(t) : FlowVector{});
  }
  return cluster_flows(flows, tracks, intrinsics, config);
}

}  // namespace collision_plane
