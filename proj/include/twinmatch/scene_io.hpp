#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "twinmatch/json_io.hpp"
#include "twinmatch/trajectory.hpp"

namespace twinmatch {

namespace detail {

inline const json& require_field(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, std::string("missing field '") + key + "'");
  return *it;
}

inline double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "expected a finite number");
  return d;
}

inline std::size_t require_count(const json& v, const std::string& path, bool positive) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(path, "expected a non-negative integer");
  }
  const auto n = v.get<std::size_t>();
  if (positive && n == 0) throw SchemaError(path, "expected a positive integer");
  return n;
}

inline const json& require_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  return v;
}

inline std::vector<double> require_tuple(const json& v, const std::string& path, std::size_t n) {
  require_array(v, path);
  if (v.size() != n) {
    throw SchemaError(path, "expected " + std::to_string(n) + " components, got " +
                                std::to_string(v.size()));
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = require_number(v[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

}  // namespace detail

// Parses and validates a scene document. Each trajectory carries either
// `points` ([[x,y,z],...]) or `points2d` ([[x,y],...]) plus `depth` ([z,...]).
inline SceneTrack load_scene(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  if (!doc.is_object()) throw SchemaError("$", "expected an object");

  const json& vid = require_field(doc, "$", "video_id");
  if (!vid.is_string()) throw SchemaError("$.video_id", "expected a string");

  const json& grid_j = require_field(doc, "$", "grid");
  if (!grid_j.is_object()) throw SchemaError("$.grid", "expected an object");
  GridLayout grid{require_count(require_field(grid_j, "$.grid", "rows"), "$.grid.rows", true),
                  require_count(require_field(grid_j, "$.grid", "cols"), "$.grid.cols", true)};

  const std::size_t frame_count =
      require_count(require_field(doc, "$", "frame_count"), "$.frame_count", false);

  const json& trajs = require_array(require_field(doc, "$", "trajectories"), "$.trajectories");
  std::vector<Trajectory> out;
  out.reserve(trajs.size());
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const std::string tp = "$.trajectories[" + std::to_string(t) + "]";
    const json& tj = trajs[t];
    if (!tj.is_object()) throw SchemaError(tp, "expected an object");
    Trajectory traj;
    traj.patch_index = require_count(require_field(tj, tp, "patch_index"), tp + ".patch_index", false);

    if (tj.contains("points")) {
      const json& pts = require_array(tj["points"], tp + ".points");
      traj.points.reserve(pts.size());
      for (std::size_t f = 0; f < pts.size(); ++f) {
        auto v = require_tuple(pts[f], tp + ".points[" + std::to_string(f) + "]", 3);
        traj.points.push_back({v[0], v[1], v[2]});
      }
    } else if (tj.contains("points2d")) {
      const json& pts = require_array(tj["points2d"], tp + ".points2d");
      const json& dep = require_array(require_field(tj, tp, "depth"), tp + ".depth");
      std::vector<Point2> track;
      std::vector<double> depth;
      for (std::size_t f = 0; f < pts.size(); ++f) {
        auto v = require_tuple(pts[f], tp + ".points2d[" + std::to_string(f) + "]", 2);
        track.push_back({v[0], v[1]});
      }
      for (std::size_t f = 0; f < dep.size(); ++f) {
        depth.push_back(require_number(dep[f], tp + ".depth[" + std::to_string(f) + "]"));
      }
      if (track.size() != depth.size()) {
        throw LengthMismatchError(tp + ": points2d has " + std::to_string(track.size()) +
                                  " frames but depth has " + std::to_string(depth.size()));
      }
      if (!track.empty()) traj.points = fuse_depth(track, depth);
    } else {
      throw SchemaError(tp, "missing field 'points' (or 'points2d' with 'depth')");
    }
    out.push_back(std::move(traj));
  }

  // Report ragged lengths before the grid check so the message names the real problem.
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (out[t].frames() != frame_count) {
      throw RaggedLengthError("$.trajectories[" + std::to_string(t) + "]: ragged lengths: " +
                              std::to_string(out[t].frames()) + " points, frame_count is " +
                              std::to_string(frame_count));
    }
  }
  return SceneTrack(vid.get<std::string>(), grid, frame_count, std::move(out));
}

inline SceneTrack load_scene_file(const std::string& path) { return load_scene(read_file(path)); }

inline json scene_to_json(const SceneTrack& scene) {
  json trajs = json::array();
  for (const auto& t : scene.trajectories()) {
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back(json::array({p.x, p.y, p.z}));
    trajs.push_back({{"patch_index", t.patch_index}, {"points", std::move(pts)}});
  }
  return {{"video_id", scene.video_id()},
          {"grid", {{"rows", scene.grid().rows}, {"cols", scene.grid().cols}}},
          {"frame_count", scene.frame_count()},
          {"trajectories", std::move(trajs)}};
}

inline std::string dump_scene(const SceneTrack& scene) {
  // Compact: scene files are large and only machine-read.
  return dump_canonical(scene_to_json(scene), -1);
}

}  // namespace twinmatch
