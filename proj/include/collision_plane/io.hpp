#pragma once

// File formats:
//  - track CSV:   header `track_id,frame,u,v`, one row per observation
//  - scenario:    JSON (intrinsics, objects, camera velocity, frames, noise)
//  - truth:       JSON, one record per simulated point
//  - result:      JSON, schema-versioned estimation/clustering output
//  - grids/tables: CSV
//
// Floating point values are written in shortest round-trip form, so every
// file re-parses to identical values and re-runs are byte-identical.

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "collision_plane/camera_geometry.hpp"
#include "collision_plane/error.hpp"
#include "collision_plane/scene_simulator.hpp"
#include "collision_plane/sensitivity.hpp"
#include "collision_plane/ttc_core.hpp"

namespace collision_plane::io {

using json = nlohmann::ordered_json;

inline std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string format_integer(T value) {
  return std::to_string(value);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_value(std::string_view text, T& out) {
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && !text.empty();
}

inline Error line_error(std::size_t line, const std::string& message) {
  return Error(ErrorCode::InvalidInput, "line " + std::to_string(line) + ": " + message);
}

}  // namespace detail

/// Parses "a,b,c" into exactly `count` numbers (count 0 accepts any length).
inline std::vector<double> parse_number_list(std::string_view text, std::size_t count,
                                             std::string_view what) {
  std::vector<double> out;
  for (const auto field : detail::split(text, ',')) {
    double v = 0.0;
    if (!detail::parse_value(field, v) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidInput, std::string(what) + ": '" + std::string(field) +
                                               "' is not a number");
    }
    out.push_back(v);
  }
  if (count != 0 && out.size() != count) {
    throw Error(ErrorCode::InvalidInput, std::string(what) + ": expected " + std::to_string(count) +
                                             " comma-separated values");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Track CSV

inline constexpr std::string_view kTrackHeader = "track_id,frame,u,v";

/// Tracks in order of first appearance. Rows of one track must have
/// consecutive frame indices.
inline std::vector<TrackObservation> read_tracks_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::int64_t> order;
  std::map<std::int64_t, std::vector<Observation>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != kTrackHeader) {
        throw detail::line_error(line_no, "expected header '" + std::string(kTrackHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = detail::split(text, ',');
    if (fields.size() != 4) throw detail::line_error(line_no, "expected 4 fields");
    std::int64_t id = 0;
    std::int64_t frame = 0;
    double u = 0.0;
    double v = 0.0;
    if (!detail::parse_value(fields[0], id)) throw detail::line_error(line_no, "bad track_id");
    if (!detail::parse_value(fields[1], frame)) throw detail::line_error(line_no, "bad frame");
    if (!detail::parse_value(fields[2], u) || !std::isfinite(u)) throw detail::line_error(line_no, "bad u");
    if (!detail::parse_value(fields[3], v) || !std::isfinite(v)) throw detail::line_error(line_no, "bad v");

    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    if (!it->second.empty() && frame != it->second.back().frame + 1) {
      throw detail::line_error(line_no, "track " + std::to_string(id) +
                                            ": frame must follow the previous frame of the track by 1");
    }
    it->second.push_back({frame, {u, v}});
  }
  if (!header_seen) throw detail::line_error(line_no + 1, "missing header");

  std::vector<TrackObservation> tracks;
  tracks.reserve(order.size());
  for (const auto id : order) tracks.emplace_back(std::move(rows[id]), id);
  return tracks;
}

inline void write_tracks_csv(std::ostream& out, const std::vector<TrackObservation>& tracks) {
  out << kTrackHeader << '\n';
  for (const auto& t : tracks) {
    for (const auto& o : t.frames()) {
      out << t.id() << ',' << o.frame << ',' << format_number(o.position.u) << ','
          << format_number(o.position.v) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario JSON

/// 1-based line of the n-th occurrence of `"key"` in a JSON text, or 1.
inline std::size_t line_of_key(std::string_view text, std::string_view key, std::size_t occurrence = 0) {
  const std::string needle = "\"" + std::string(key) + "\"";
  std::size_t pos = 0;
  for (std::size_t n = 0;; ++n) {
    pos = text.find(needle, pos);
    if (pos == std::string_view::npos) return 1;
    if (n == occurrence) break;
    pos += needle.size();
  }
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

namespace detail {

inline Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json to_json(const PixelPoint& p) { return json::array({p.u, p.v}); }

inline PixelPoint pixel_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline json intrinsics_to_json(const CameraIntrinsics& c) {
  json j;
  j["focal_px"] = c.focal_px;
  j["principal_point"] = detail::to_json(c.principal_point);
  j["image_size"] = json::array({c.width, c.height});
  j["allow_off_center"] = c.allow_off_center;
  return j;
}

/// Parses and validates a scenario. Errors name the offending line.
inline Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed JSON: ") + e.what());
  }
  auto fail = [&](std::string_view key, std::size_t occurrence, const std::string& msg) -> Error {
    return detail::line_error(line_of_key(text, key, occurrence), msg);
  };

  Scenario s;
  try {
    if (!root.is_object()) throw detail::line_error(1, "scenario must be a JSON object");
    if (!root.contains("intrinsics")) throw detail::line_error(1, "missing 'intrinsics'");
    const json& in = root.at("intrinsics");
    try {
      s.intrinsics.focal_px = in.at("focal_px").get<double>();
      s.intrinsics.principal_point = detail::pixel_from(in.at("principal_point"));
      const json& size = in.at("image_size");
      if (!size.is_array() || size.size() != 2) throw std::invalid_argument("image_size needs 2 values");
      s.intrinsics.width = size[0].get<int>();
      s.intrinsics.height = size[1].get<int>();
      s.intrinsics.allow_off_center = in.value("allow_off_center", false);
    } catch (const std::exception& e) {
      throw fail("intrinsics", 0, std::string("invalid intrinsics: ") + e.what());
    }
    try {
      s.intrinsics.validate();
    } catch (const Error& e) {
      throw fail("intrinsics", 0, e.what());
    }

    if (!root.contains("frame_count")) throw detail::line_error(1, "missing 'frame_count'");
    try {
      s.frame_count = root.at("frame_count").get<int>();
    } catch (const std::exception&) {
      throw fail("frame_count", 0, "frame_count must be an integer");
    }
    if (s.frame_count < 2) throw fail("frame_count", 0, "frame_count must be >= 2");

    try {
      if (root.contains("camera_velocity")) s.camera_velocity = detail::vec3_from(root.at("camera_velocity"));
    } catch (const std::exception& e) {
      throw fail("camera_velocity", 0, std::string("camera_velocity: ") + e.what());
    }
    try {
      s.pixel_noise_sigma = root.value("pixel_noise_sigma", 0.0);
    } catch (const std::exception&) {
      throw fail("pixel_noise_sigma", 0, "pixel_noise_sigma must be a number");
    }
    if (!(s.pixel_noise_sigma >= 0.0)) throw fail("pixel_noise_sigma", 0, "pixel_noise_sigma must be >= 0");
    try {
      s.rng_seed = root.value("seed", std::uint64_t{0});
    } catch (const std::exception&) {
      throw fail("seed", 0, "seed must be a nonnegative integer");
    }

    const json objects = root.value("objects", json::array());
    if (!objects.is_array()) throw fail("objects", 0, "objects must be an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const json& o = objects[i];
      SceneObject obj;
      try {
        obj.id = o.value("id", static_cast<int>(i));
        obj.velocity = detail::vec3_from(o.at("velocity"));
      } catch (const std::exception& e) {
        throw fail("velocity", i, "object " + std::to_string(i) + ": " + e.what());
      }
      try {
        for (const auto& p : o.at("points")) obj.points.push_back(detail::vec3_from(p));
      } catch (const std::exception& e) {
        throw fail("points", i, "object " + std::to_string(i) + " points: " + e.what());
      }
      for (std::size_t k = 0; k < obj.points.size(); ++k) {
        if (!(obj.points[k].z() > 0.0)) {
          throw fail("points", i, "object " + std::to_string(i) + " point " + std::to_string(k) +
                                      ": initial Z must be > 0");
        }
      }
      s.objects.push_back(std::move(obj));
    }
    s.validate();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw detail::line_error(1, e.what());
  }
  return s;
}

inline std::string emit_scenario(const Scenario& s) {
  json j;
  j["intrinsics"] = intrinsics_to_json(s.intrinsics);
  j["camera_velocity"] = detail::to_json(s.camera_velocity);
  j["frame_count"] = s.frame_count;
  j["pixel_noise_sigma"] = s.pixel_noise_sigma;
  j["seed"] = s.rng_seed;
  json objects = json::array();
  for (const auto& o : s.objects) {
    json jo;
    jo["id"] = o.id;
    jo["velocity"] = detail::to_json(o.velocity);
    json pts = json::array();
    for (const auto& p : o.points) pts.push_back(detail::to_json(p));
    jo["points"] = pts;
    objects.push_back(jo);
  }
  j["objects"] = objects;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Ground truth JSON

inline std::string emit_ground_truth(const GroundTruth& truth, const Scenario& scenario) {
  json j;
  j["schema"] = 1;
  j["seed"] = scenario.rng_seed;
  j["frame_count"] = scenario.frame_count;
  j["pixel_noise_sigma"] = scenario.pixel_noise_sigma;
  j["intrinsics"] = intrinsics_to_json(scenario.intrinsics);
  json points = json::array();
  for (const auto& p : truth.points) {
    json jp;
    jp["track_id"] = p.track_id;
    jp["object_id"] = p.object_id;
    jp["point_index"] = p.point_index;
    jp["initial_position"] = detail::to_json(p.initial_position);
    jp["relative_velocity"] = detail::to_json(p.relative_velocity);
    jp["epipole"] = p.epipole ? detail::to_json(*p.epipole) : json(nullptr);
    jp["k"] = p.k ? json(*p.k) : json(nullptr);
    jp["H"] = p.H;
    jp["miss_distance"] = p.miss_distance;
    jp["label"] = std::string(to_string(p.label));
    jp["truncated"] = p.truncated;
    jp["valid_frames"] = p.valid_frames;
    points.push_back(jp);
  }
  j["points"] = points;
  return j.dump(2) + "\n";
}

inline MotionClass motion_class_from(std::string_view s) {
  if (s == "Approaching") return MotionClass::Approaching;
  if (s == "Receding") return MotionClass::Receding;
  if (s == "ConstantBearing") return MotionClass::ConstantBearing;
  throw Error(ErrorCode::InvalidInput, "unknown motion class '" + std::string(s) + "'");
}

inline GroundTruth parse_ground_truth(const std::string& text) {
  GroundTruth truth;
  try {
    const json j = json::parse(text);
    for (const auto& jp : j.at("points")) {
      PointTruth p;
      p.track_id = jp.at("track_id").get<std::int64_t>();
      p.object_id = jp.at("object_id").get<int>();
      p.point_index = jp.at("point_index").get<std::size_t>();
      p.initial_position = detail::vec3_from(jp.at("initial_position"));
      p.relative_velocity = detail::vec3_from(jp.at("relative_velocity"));
      if (!jp.at("epipole").is_null()) p.epipole = detail::pixel_from(jp.at("epipole"));
      if (!jp.at("k").is_null()) p.k = jp.at("k").get<double>();
      p.H = jp.at("H").get<double>();
      p.miss_distance = jp.at("miss_distance").get<double>();
      p.label = motion_class_from(jp.at("label").get<std::string>());
      p.truncated = jp.at("truncated").get<bool>();
      p.valid_frames = jp.at("valid_frames").get<int>();
      truth.points.push_back(p);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("ground truth: ") + e.what());
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Result document

struct EpipoleRecord {
  std::string label;
  PixelPoint position;
  std::string method;
  double residual = 0.0;

  bool operator==(const EpipoleRecord&) const = default;
};

struct HorizonRecord {
  PixelPoint reference;
  PixelPoint direction;
  double residual = 0.0;

  bool operator==(const HorizonRecord&) const = default;
};

struct ClusterRecord {
  int id = 0;
  std::vector<std::int64_t> members;  // track ids
  EpipoleRecord epipole;
  std::vector<double> ttc_values;
  double mean_ttc = 0.0;
  std::size_t consensus_size = 0;

  bool operator==(const ClusterRecord&) const = default;
};

struct EstimateRecord {
  std::int64_t track_id = 0;
  std::string status = "Ok";
  std::optional<std::string> classification;
  std::optional<double> k;
  std::optional<double> H;
  std::optional<PixelPoint> epipole;
  std::optional<double> offset_x_rad;
  std::optional<double> consistency_residual;

  bool operator==(const EstimateRecord&) const = default;
};

struct ResultDocument {
  int schema = 1;
  std::string command;
  std::uint64_t seed = 0;
  json config = json::object();
  std::optional<HorizonRecord> horizon;
  std::vector<EpipoleRecord> epipoles;
  std::vector<ClusterRecord> clusters;
  std::vector<std::int64_t> outliers;
  std::vector<EstimateRecord> estimates;
  std::map<std::string, double> residuals;

  bool operator==(const ResultDocument&) const = default;
};

namespace detail {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline json epipole_json(const EpipoleRecord& e) {
  return json{{"label", e.label}, {"u", e.position.u}, {"v", e.position.v},
              {"method", e.method}, {"residual", e.residual}};
}

inline EpipoleRecord epipole_record(const json& j) {
  return {j.at("label").get<std::string>(),
          {j.at("u").get<double>(), j.at("v").get<double>()},
          j.at("method").get<std::string>(),
          j.at("residual").get<double>()};
}

}  // namespace detail

inline std::string emit_result(const ResultDocument& doc) {
  json j;
  j["schema"] = doc.schema;
  j["command"] = doc.command;
  j["seed"] = doc.seed;
  j["config"] = doc.config;
  if (doc.horizon) {
    j["horizon"] = json{{"reference", detail::to_json(doc.horizon->reference)},
                        {"direction", detail::to_json(doc.horizon->direction)},
                        {"residual", doc.horizon->residual}};
  } else {
    j["horizon"] = nullptr;
  }
  json epipoles = json::array();
  for (const auto& e : doc.epipoles) epipoles.push_back(detail::epipole_json(e));
  j["epipoles"] = epipoles;

  json clusters = json::array();
  for (const auto& c : doc.clusters) {
    clusters.push_back(json{{"id", c.id},
                            {"members", c.members},
                            {"epipole", detail::epipole_json(c.epipole)},
                            {"ttc_values", c.ttc_values},
                            {"mean_ttc", c.mean_ttc},
                            {"consensus_size", c.consensus_size}});
  }
  j["clusters"] = clusters;
  j["outliers"] = doc.outliers;

  json estimates = json::array();
  for (const auto& e : doc.estimates) {
    json je;
    je["track_id"] = e.track_id;
    je["status"] = e.status;
    je["classification"] = detail::opt(e.classification);
    je["k"] = detail::opt(e.k);
    je["H"] = detail::opt(e.H);
    je["epipole"] = e.epipole ? detail::to_json(*e.epipole) : json(nullptr);
    je["offset_x_rad"] = detail::opt(e.offset_x_rad);
    je["consistency_residual"] = detail::opt(e.consistency_residual);
    estimates.push_back(je);
  }
  j["estimates"] = estimates;
  json residuals = json::object();
  for (const auto& [name, value] : doc.residuals) residuals[name] = value;
  j["residuals"] = residuals;
  return j.dump(2) + "\n";
}

inline ResultDocument parse_result(const std::string& text) {
  ResultDocument doc;
  try {
    const json j = json::parse(text);
    doc.schema = j.at("schema").get<int>();
    if (doc.schema != 1) throw Error(ErrorCode::InvalidInput, "unsupported result schema");
    doc.command = j.at("command").get<std::string>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.config = j.at("config");
    if (!j.at("horizon").is_null()) {
      const json& h = j.at("horizon");
      doc.horizon = HorizonRecord{detail::pixel_from(h.at("reference")),
                                  detail::pixel_from(h.at("direction")),
                                  h.at("residual").get<double>()};
    }
    for (const auto& e : j.at("epipoles")) doc.epipoles.push_back(detail::epipole_record(e));
    for (const auto& c : j.at("clusters")) {
      ClusterRecord r;
      r.id = c.at("id").get<int>();
      r.members = c.at("members").get<std::vector<std::int64_t>>();
      r.epipole = detail::epipole_record(c.at("epipole"));
      r.ttc_values = c.at("ttc_values").get<std::vector<double>>();
      r.mean_ttc = c.at("mean_ttc").get<double>();
      r.consensus_size = c.at("consensus_size").get<std::size_t>();
      doc.clusters.push_back(std::move(r));
    }
    doc.outliers = j.at("outliers").get<std::vector<std::int64_t>>();
    for (const auto& e : j.at("estimates")) {
      EstimateRecord r;
      r.track_id = e.at("track_id").get<std::int64_t>();
      r.status = e.at("status").get<std::string>();
      r.classification = detail::opt_from<std::string>(e, "classification");
      r.k = detail::opt_from<double>(e, "k");
      r.H = detail::opt_from<double>(e, "H");
      if (e.contains("epipole") && !e.at("epipole").is_null()) r.epipole = detail::pixel_from(e.at("epipole"));
      r.offset_x_rad = detail::opt_from<double>(e, "offset_x_rad");
      r.consistency_residual = detail::opt_from<double>(e, "consistency_residual");
      doc.estimates.push_back(std::move(r));
    }
    for (const auto& [name, value] : j.at("residuals").items()) doc.residuals[name] = value.get<double>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("result document: ") + e.what());
  }
  return doc;
}

// ---------------------------------------------------------------------------
// CSV tables

inline void write_collision_map_csv(std::ostream& out, const CollisionMap& map) {
  out << "dv_forward,dv_lateral,min_ttc,miss_distance,collision,object_id\n";
  for (const auto& c : map.cells) {
    out << format_number(c.dv_forward) << ',' << format_number(c.dv_lateral) << ','
        << (c.min_ttc ? format_number(*c.min_ttc) : "") << ','
        << (c.miss_distance ? format_number(*c.miss_distance) : "") << ',' << (c.collision ? 1 : 0)
        << ',' << (c.object_id ? std::to_string(*c.object_id) : "") << '\n';
  }
}

inline void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
  out << "z_m,depth_error_m,stereo_heading_error_deg,plane_heading_error_deg,"
         "plane_heading_sigma_deg,ttc_relative_error,flow_length_px,degenerate_trials,trials\n";
  for (const auto& r : rows) {
    out << format_number(r.z_m) << ',' << format_number(r.depth_error_m) << ','
        << format_number(r.stereo_heading_error_deg) << ',' << format_number(r.plane_heading_error_deg)
        << ',' << format_number(r.plane_heading_sigma_deg) << ',' << format_number(r.ttc_relative_error)
        << ',' << format_number(r.flow_length_px) << ',' << r.degenerate_trials << ',' << r.trials
        << '\n';
  }
}

}  // namespace collision_plane::io
