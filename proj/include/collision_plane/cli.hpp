#pragma once

// Command-line front end. Exit codes: 0 success, 2 usage or validation
// error, 1 internal error.

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/epipole_estimation.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/io.hpp"
#include "collision_plane/motion_clustering.hpp"
#include "collision_plane/scene_simulator.hpp"
#include "collision_plane/sensitivity.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kSeedEnv = "COLLISION_PLANE_SEED";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file(path, content);
  }
}

inline std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv(kSeedEnv);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t v = 0;
  if (!io::detail::parse_value(std::string_view(raw), v)) {
    throw UsageError(std::string(kSeedEnv) + " must be a nonnegative integer");
  }
  return v;
}

/// "f,u0,v0" or "f,u0,v0,width,height". Without an image size the principal
/// point is taken as the image center.
inline CameraIntrinsics parse_intrinsics(const std::string& text) {
  const auto values = io::parse_number_list(text, 0, "--intrinsics");
  if (values.size() != 3 && values.size() != 5) {
    throw UsageError("--intrinsics expects f,u0,v0 or f,u0,v0,width,height");
  }
  CameraIntrinsics c;
  c.focal_px = values[0];
  c.principal_point = {values[1], values[2]};
  if (values.size() == 5) {
    c.width = static_cast<int>(values[3]);
    c.height = static_cast<int>(values[4]);
  } else {
    c.width = std::max(1, static_cast<int>(std::ceil(2.0 * values[1])));
    c.height = std::max(1, static_cast<int>(std::ceil(2.0 * values[2])));
    c.allow_off_center = true;
  }
  c.validate();
  return c;
}

inline io::json intrinsics_echo(const CameraIntrinsics& c) { return io::intrinsics_to_json(c); }

inline std::vector<TrackObservation> load_tracks(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return io::read_tracks_csv(in);
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

inline io::EpipoleRecord epipole_record(const std::string& label, const Epipole& e) {
  return {label, e.position, std::string(to_string(e.method)), e.residual};
}

// Fills k, H, classification for one track against an epipole. Degenerate
// outcomes are recorded in `status` instead of aborting the batch.
inline void fill_estimate(io::EstimateRecord& rec, const TrackObservation& track,
                          const Epipole& epipole, const CameraIntrinsics& intrinsics,
                          const TtcConfig& ttc) {
  rec.epipole = epipole.position;
  try {
    track.require_frames(2);
    rec.classification = std::string(to_string(classify_motion(track, epipole, ttc.eps_px)));
    const CollisionEstimate est = collision_estimate(track, epipole, intrinsics, ttc);
    rec.k = est.k;
    rec.H = est.H;
    rec.status = "Ok";
  } catch (const Error& e) {
    rec.status = std::string(to_string(e.code()));
    if (e.code() == ErrorCode::StationaryPoint && track.size() >= 1 &&
        distance(track.front().position, epipole.position) <= ttc.eps_px) {
      rec.H = 0.0;
    }
  }
}

inline ClusteringResult run_clustering(const std::vector<TrackObservation>& tracks,
                                       const CameraIntrinsics& intrinsics,
                                       const ClusteringConfig& config) {
  return cluster_tracks(tracks, intrinsics, config);
}

inline std::vector<io::ClusterRecord> cluster_records(const ClusteringResult& result,
                                                      const std::vector<TrackObservation>& tracks) {
  std::vector<io::ClusterRecord> out;
  for (std::size_t c = 0; c < result.clusters.size(); ++c) {
    const MotionCluster& mc = result.clusters[c];
    io::ClusterRecord r;
    r.id = static_cast<int>(c);
    for (const auto i : mc.member_indices) r.members.push_back(tracks[i].id());
    r.epipole = epipole_record("cluster:" + std::to_string(c), mc.epipole);
    r.ttc_values = mc.ttc_values;
    r.mean_ttc = mc.mean_ttc;
    r.consensus_size = mc.consensus_size;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string scenario_file;
  std::string out_tracks;
  std::string out_truth;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_sigma;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& /*out*/) {
  const std::string text = detail::read_file(opt.scenario_file);
  Scenario scenario;
  try {
    scenario = io::parse_scenario(text);
  } catch (const Error& e) {
    throw UsageError(opt.scenario_file + ": " + e.what());
  }
  const bool seed_in_file = text.find("\"seed\"") != std::string::npos;
  if (opt.seed) {
    scenario.rng_seed = *opt.seed;
  } else if (!seed_in_file) {
    if (const auto s = detail::env_seed()) scenario.rng_seed = *s;
  }
  if (opt.noise_sigma) {
    if (!(*opt.noise_sigma >= 0.0)) throw UsageError("--noise-sigma must be >= 0");
    scenario.pixel_noise_sigma = *opt.noise_sigma;
  }
  const Simulation sim = simulate(scenario);
  std::ostringstream tracks;
  io::write_tracks_csv(tracks, sim.tracks);
  detail::write_file(opt.out_tracks, tracks.str());
  detail::write_file(opt.out_truth, io::emit_ground_truth(sim.truth, scenario));
  return kExitOk;
}

struct EstimateOptions {
  std::string tracks_file;
  std::string horizon;  // "a,b" for v = a*u + b
  bool calibrate = false;
  std::string mode = "planar";
  std::string intrinsics;
  std::optional<std::uint64_t> seed;
  double eps_px = 0.05;
  std::string out;
};

inline io::ResultDocument estimate_document(const EstimateOptions& opt,
                                            const std::vector<TrackObservation>& tracks) {
  if (opt.intrinsics.empty()) throw UsageError("--intrinsics f,u0,v0 is required");
  if (opt.mode != "planar" && opt.mode != "three-frame" && opt.mode != "least-squares") {
    throw UsageError("unknown --mode '" + opt.mode + "' (planar, three-frame, least-squares)");
  }
  if (!opt.horizon.empty() && opt.calibrate) {
    throw UsageError("--horizon and --calibrate are mutually exclusive");
  }
  const bool needs_horizon = opt.mode != "least-squares";
  if (needs_horizon && opt.horizon.empty() && !opt.calibrate) {
    throw UsageError("--mode " + opt.mode + " needs --horizon a,b or --calibrate");
  }
  CameraIntrinsics intr;
  try {
    intr = detail::parse_intrinsics(opt.intrinsics);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::uint64_t seed = opt.seed ? *opt.seed : detail::env_seed().value_or(0);
  TtcConfig ttc;
  ttc.eps_px = opt.eps_px;

  io::ResultDocument doc;
  doc.command = "estimate";
  doc.seed = seed;
  doc.config["mode"] = opt.mode;
  doc.config["intrinsics"] = detail::intrinsics_echo(intr);
  doc.config["eps_px"] = ttc.eps_px;
  doc.config["eps_tan"] = ttc.eps_tan;
  doc.config["calibrate"] = opt.calibrate;

  std::optional<HorizonLine> horizon;
  if (!opt.horizon.empty()) {
    std::vector<double> ab;
    try {
      ab = io::parse_number_list(opt.horizon, 2, "--horizon");
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    horizon = HorizonLine::from_slope_intercept(ab[0], ab[1]);
    doc.config["horizon"] = io::json::array({ab[0], ab[1]});
  }
  if (opt.calibrate) {
    ClusteringConfig cc;
    cc.rng_seed = seed;
    ClusteringResult clusters;
    try {
      clusters = detail::run_clustering(tracks, intr, cc);
    } catch (const Error& e) {
      throw UsageError(std::string("calibration: ") + e.what());
    }
    if (clusters.clusters.size() < 2) {
      throw UsageError("calibration needs at least two independently moving groups, found " +
                       std::to_string(clusters.clusters.size()));
    }
    std::vector<Epipole> epipoles;
    for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
      epipoles.push_back(clusters.clusters[c].epipole);
      doc.epipoles.push_back(
          detail::epipole_record("calibration:" + std::to_string(c), clusters.clusters[c].epipole));
    }
    doc.clusters = detail::cluster_records(clusters, tracks);
    for (const auto i : clusters.outliers) doc.outliers.push_back(tracks[i].id());
    horizon = calibrate_horizon(epipoles);
    doc.residuals["horizon_rms"] = horizon->residual;
  }
  if (horizon) {
    doc.horizon = io::HorizonRecord{horizon->reference, PixelPoint::from(horizon->direction),
                                    horizon->residual};
  }

  if (opt.mode == "least-squares") {
    std::vector<FlowVector> flows;
    for (const auto& t : tracks) {
      if (t.size() >= 2) {
        const FlowVector f = FlowVector::fit_track(t);
        if (f.valid()) flows.push_back(f);
      }
    }
    std::optional<Epipole> shared;
    std::string failure;
    try {
      shared = epipole_least_squares(flows);
      doc.epipoles.push_back(detail::epipole_record("shared", *shared));
      doc.residuals["least_squares_rms"] = shared->residual;
    } catch (const Error& e) {
      failure = std::string(to_string(e.code()));
    }
    for (const auto& t : tracks) {
      io::EstimateRecord rec;
      rec.track_id = t.id();
      if (shared) {
        detail::fill_estimate(rec, t, *shared, intr, ttc);
      } else {
        rec.status = failure;
      }
      doc.estimates.push_back(std::move(rec));
    }
    return doc;
  }

  for (const auto& t : tracks) {
    io::EstimateRecord rec;
    rec.track_id = t.id();
    try {
      if (opt.mode == "planar") {
        t.require_frames(2);
        const Epipole e = planar_epipole(FlowVector::from_track(t), *horizon);
        detail::fill_estimate(rec, t, e, intr, ttc);
      } else {
        t.require_frames(3);
        const EpipoleOffset off = epipole_offset_three_frames(t, *horizon, intr, ttc);
        rec.offset_x_rad = off.x.radians;
        rec.consistency_residual = off.epipole.residual;
        detail::fill_estimate(rec, t, off.epipole, intr, ttc);
      }
    } catch (const Error& e) {
      rec.status = std::string(to_string(e.code()));
    }
    doc.estimates.push_back(std::move(rec));
  }
  return doc;
}

inline int cmd_estimate(const EstimateOptions& opt, std::ostream& out) {
  if (opt.intrinsics.empty()) throw UsageError("--intrinsics f,u0,v0 is required");
  const auto tracks = detail::load_tracks(opt.tracks_file);
  detail::emit(opt.out, io::emit_result(estimate_document(opt, tracks)), out);
  return kExitOk;
}

struct ClusterOptions {
  std::string tracks_file;
  std::string intrinsics;
  double eps_dist = 2.0;
  std::optional<double> eps_ttc;
  std::optional<std::uint64_t> seed;
  int min_size = 3;
  int max_iterations = 500;
  std::string out;
};

inline int cmd_cluster(const ClusterOptions& opt, std::ostream& out) {
  if (opt.intrinsics.empty()) throw UsageError("--intrinsics f,u0,v0 is required");
  CameraIntrinsics intr;
  try {
    intr = detail::parse_intrinsics(opt.intrinsics);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto tracks = detail::load_tracks(opt.tracks_file);

  ClusteringConfig cc;
  cc.eps_dist = opt.eps_dist;
  cc.eps_ttc = opt.eps_ttc;
  cc.min_cluster_size = opt.min_size;
  cc.max_iterations = opt.max_iterations;
  cc.rng_seed = opt.seed ? *opt.seed : detail::env_seed().value_or(0);
  try {
    cc.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (tracks.size() < static_cast<std::size_t>(cc.min_cluster_size)) {
    throw UsageError("need at least " + std::to_string(cc.min_cluster_size) + " tracks, got " +
                     std::to_string(tracks.size()));
  }
  const ClusteringResult result = detail::run_clustering(tracks, intr, cc);

  io::ResultDocument doc;
  doc.command = "cluster";
  doc.seed = cc.rng_seed;
  doc.config["intrinsics"] = detail::intrinsics_echo(intr);
  doc.config["eps_dist"] = cc.eps_dist;
  doc.config["eps_ttc"] = cc.eps_ttc ? io::json(*cc.eps_ttc) : io::json("max(1, 0.1*|median k|)");
  doc.config["min_size"] = cc.min_cluster_size;
  doc.config["max_iterations"] = cc.max_iterations;
  doc.clusters = detail::cluster_records(result, tracks);
  for (const auto& c : doc.clusters) doc.epipoles.push_back(c.epipole);
  for (const auto i : result.outliers) doc.outliers.push_back(tracks[i].id());
  detail::emit(opt.out, io::emit_result(doc), out);
  return kExitOk;
}

struct CollisionMapOptions {
  std::string scenario_file;
  std::string grid;  // F,L,NF,NL
  double radius = 2.0;
  std::string out;
};

inline VelocityGrid parse_grid(const std::string& text) {
  std::vector<double> v;
  try {
    v = io::parse_number_list(text, 4, "--grid");
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (v[2] != std::floor(v[2]) || v[3] != std::floor(v[3])) {
    throw UsageError("--grid cell counts must be integers");
  }
  VelocityGrid g{v[0], v[1], static_cast<int>(v[2]), static_cast<int>(v[3])};
  try {
    g.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return g;
}

inline int cmd_collision_map(const CollisionMapOptions& opt, std::ostream& out) {
  const VelocityGrid grid = parse_grid(opt.grid);
  if (!(opt.radius > 0.0)) throw UsageError("--radius must be positive");
  Scenario scenario;
  try {
    scenario = io::parse_scenario(detail::read_file(opt.scenario_file));
  } catch (const Error& e) {
    throw UsageError(opt.scenario_file + ": " + e.what());
  }
  const CollisionMap map = collision_map(scenario, grid, opt.radius);
  std::ostringstream csv;
  io::write_collision_map_csv(csv, map);
  detail::emit(opt.out, csv.str(), out);
  return kExitOk;
}

struct SensitivityOptions {
  std::string preset;
  std::optional<double> pixel_pitch_um;
  std::optional<double> focal_mm;
  std::optional<double> focal_px;
  std::optional<double> baseline_m;
  std::optional<double> pixel_error;
  std::optional<double> speed_kmh;
  std::optional<double> heading_deg;
  std::optional<double> frame_rate;
  std::optional<int> frame_gap;
  std::optional<double> point_height;
  std::optional<double> z_min;
  std::optional<double> z_max;
  std::optional<double> z_step;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline SensitivitySweep sweep_from(const SensitivityOptions& opt) {
  if (!opt.preset.empty() && opt.preset != "paper-3.1") {
    throw UsageError("unknown --preset '" + opt.preset + "' (available: paper-3.1)");
  }
  if (opt.focal_mm && opt.focal_px) throw UsageError("--focal-mm and --focal-px are mutually exclusive");
  const bool metric_focal = !opt.preset.empty() ? !opt.focal_px : opt.focal_mm.has_value();
  if (metric_focal && !opt.pixel_pitch_um) {
    throw UsageError("a metric focal length needs --pixel-pitch (micrometres)");
  }
  if (opt.preset.empty() && !opt.focal_mm && !opt.focal_px) {
    throw UsageError("give --preset paper-3.1 or a focal length (--focal-px, or --focal-mm with --pixel-pitch)");
  }
  try {
    SensitivitySweep s;
    if (!opt.preset.empty()) {
      // With --focal-px the pitch only feeds the overwritten default focal.
      s = SensitivitySweep::paper_preset(opt.pixel_pitch_um.value_or(1.0));
    }
    if (opt.focal_mm) s.model.focal_px = focal_px_from_metric(*opt.focal_mm, *opt.pixel_pitch_um);
    if (opt.focal_px) s.model.focal_px = *opt.focal_px;
    if (opt.baseline_m) s.model.baseline_m = *opt.baseline_m;
    if (opt.pixel_error) s.model.detection_error_px = *opt.pixel_error;
    if (opt.speed_kmh) s.model.speed_mps = *opt.speed_kmh / 3.6;
    if (opt.heading_deg) s.model.heading_deg = *opt.heading_deg;
    if (opt.frame_rate) s.frame_rate_hz = *opt.frame_rate;
    if (opt.frame_gap) s.frame_gap = *opt.frame_gap;
    if (opt.point_height) s.point_height_m = *opt.point_height;
    if (opt.z_min) s.z_min_m = *opt.z_min;
    if (opt.z_max) s.z_max_m = *opt.z_max;
    if (opt.z_step) s.z_step_m = *opt.z_step;
    if (opt.trials) s.trials = *opt.trials;
    s.seed = opt.seed ? *opt.seed : detail::env_seed().value_or(0);
    s.validate();
    return s;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

inline int cmd_sensitivity(const SensitivityOptions& opt, std::ostream& out) {
  const SensitivitySweep sweep = sweep_from(opt);
  std::ostringstream csv;
  io::write_sensitivity_csv(csv, orientation_error_sweep(sweep));
  detail::emit(opt.out, csv.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and dispatches to a subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collision-plane motion estimation toolkit", "cplane"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Simulate a scenario into tracks and ground truth");
  s->add_option("scenario", sim.scenario_file, "Scenario JSON")->required();
  s->add_option("tracks", sim.out_tracks, "Output track CSV")->required();
  s->add_option("truth", sim.out_truth, "Output ground-truth JSON")->required();
  s->add_option("--seed", sim.seed, "Noise seed (default: scenario seed, then $" + std::string(kSeedEnv) + ")");
  s->add_option("--noise-sigma", sim.noise_sigma, "Pixel noise standard deviation");

  EstimateOptions est;
  auto* e = app.add_subcommand("estimate", "Per-track time-to-collision and miss distance");
  e->add_option("tracks", est.tracks_file, "Track CSV")->required();
  e->add_option("--horizon", est.horizon, "Horizon line v = a*u + b as a,b");
  e->add_flag("--calibrate", est.calibrate, "Calibrate the horizon from independently moving groups");
  e->add_option("--mode", est.mode, "planar | three-frame | least-squares")->capture_default_str();
  e->add_option("--intrinsics", est.intrinsics, "f,u0,v0[,width,height] in pixels");
  e->add_option("--seed", est.seed, "Seed for calibration clustering");
  e->add_option("--eps-px", est.eps_px, "Classification threshold in pixels")->capture_default_str();
  e->add_option("--out", est.out, "Output JSON (default stdout)");

  ClusterOptions cl;
  auto* c = app.add_subcommand("cluster", "Group tracks into independently moving clusters");
  c->add_option("tracks", cl.tracks_file, "Track CSV")->required();
  c->add_option("--intrinsics", cl.intrinsics, "f,u0,v0[,width,height] in pixels");
  c->add_option("--eps-dist", cl.eps_dist, "Flow line to epipole distance bound (px)")->capture_default_str();
  c->add_option("--eps-ttc", cl.eps_ttc, "TTC tolerance in frames (default max(1, 10% of median))");
  c->add_option("--seed", cl.seed, "RANSAC seed");
  c->add_option("--min-size", cl.min_size, "Minimum cluster size")->capture_default_str();
  c->add_option("--max-iterations", cl.max_iterations, "RANSAC iterations")->capture_default_str();
  c->add_option("--out", cl.out, "Output JSON (default stdout)");

  CollisionMapOptions cm;
  auto* m = app.add_subcommand("collision-map", "Collision relations over camera velocity changes");
  m->add_option("scenario", cm.scenario_file, "Scenario JSON")->required();
  m->add_option("--grid", cm.grid, "F,L,NF,NL: forward/lateral extents and cell counts")->required();
  m->add_option("--radius", cm.radius, "Collision radius")->capture_default_str();
  m->add_option("--out", cm.out, "Output CSV (default stdout)");

  SensitivityOptions so;
  auto* t = app.add_subcommand("sensitivity", "Stereo vs collision-plane error table");
  t->add_option("--preset", so.preset, "paper-3.1");
  t->add_option("--pixel-pitch", so.pixel_pitch_um, "Pixel pitch in micrometres");
  t->add_option("--focal-mm", so.focal_mm, "Focal length in millimetres");
  t->add_option("--focal-px", so.focal_px, "Focal length in pixels");
  t->add_option("--baseline", so.baseline_m, "Stereo baseline in metres");
  t->add_option("--pixel-error", so.pixel_error, "Detection error in pixels");
  t->add_option("--speed-kmh", so.speed_kmh, "Object speed in km/h");
  t->add_option("--heading-deg", so.heading_deg, "Motion heading relative to the optical axis");
  t->add_option("--frame-rate", so.frame_rate, "Frame rate in Hz");
  t->add_option("--frame-gap", so.frame_gap, "Frames between the two observations");
  t->add_option("--point-height", so.point_height, "Point height below the camera in metres");
  t->add_option("--z-min", so.z_min, "First depth in metres");
  t->add_option("--z-max", so.z_max, "Last depth in metres");
  t->add_option("--z-step", so.z_step, "Depth step in metres");
  t->add_option("--trials", so.trials, "Monte-Carlo trials per depth");
  t->add_option("--seed", so.seed, "Monte-Carlo seed");
  t->add_option("--out", so.out, "Output CSV (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim, out);
    if (e->parsed()) return cmd_estimate(est, out);
    if (c->parsed()) return cmd_cluster(cl, out);
    if (m->parsed()) return cmd_collision_map(cm, out);
    if (t->parsed()) return cmd_sensitivity(so, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace collision_plane::cli
