#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinmatch/errors.hpp"
#include "twinmatch/matrix.hpp"

namespace twinmatch {

// One tracked observation: pixel position in the camera frame plus relative depth.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  bool operator==(const Point3&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Pairs a 2-D track with per-frame depth, component-wise and in order.
inline std::vector<Point3> fuse_depth(std::span<const Point2> track2d, std::span<const double> depth) {
  if (track2d.size() != depth.size()) {
    throw LengthMismatchError("track has " + std::to_string(track2d.size()) +
                              " frames but depth has " + std::to_string(depth.size()));
  }
  if (track2d.empty()) throw InvalidArgument("fuse_depth: at least one frame required");
  std::vector<Point3> out;
  out.reserve(track2d.size());
  for (std::size_t f = 0; f < track2d.size(); ++f) {
    Point3 p{track2d[f].x, track2d[f].y, depth[f]};
    if (!p.finite()) throw NonFiniteError("fuse_depth: non-finite value", f);
    out.push_back(p);
  }
  return out;
}

// The observation sequence of one patch's representative point.
struct Trajectory {
  std::size_t patch_index = 0;
  std::vector<Point3> points;

  std::size_t frames() const noexcept { return points.size(); }

  // F x 3 sample matrix, one row per frame.
  SampleMatrix samples() const {
    SampleMatrix m(points.size(), 3);
    for (std::size_t f = 0; f < points.size(); ++f) {
      m(f, 0) = points[f].x;
      m(f, 1) = points[f].y;
      m(f, 2) = points[f].z;
    }
    return m;
  }
};

// Patch grid over the first frame; patches are numbered row-major from the top-left.
struct GridLayout {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const GridLayout&) const = default;
};

// True iff the patch touches the image border.
inline bool ring_membership(const GridLayout& grid, std::size_t patch_index) {
  if (grid.rows == 0 || grid.cols == 0) throw InvalidArgument("grid dimensions must be positive");
  if (patch_index >= grid.size()) {
    throw InvalidArgument("patch index " + std::to_string(patch_index) + " out of range for " +
                          std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
  }
  const std::size_t r = patch_index / grid.cols;
  const std::size_t c = patch_index % grid.cols;
  return r == 0 || r + 1 == grid.rows || c == 0 || c + 1 == grid.cols;
}

// All trajectories of one video's first-frame patch grid. Immutable once built;
// the constructor enforces the grid/count and equal-length invariants.
class SceneTrack {
 public:
  SceneTrack(std::string video_id, GridLayout grid, std::size_t frame_count,
             std::vector<Trajectory> trajectories)
      : video_id_(std::move(video_id)),
        grid_(grid),
        frame_count_(frame_count),
        trajectories_(std::move(trajectories)) {
    if (grid_.rows == 0 || grid_.cols == 0) {
      throw GridMismatchError("grid dimensions must be positive");
    }
    if (trajectories_.size() != grid_.size()) {
      throw GridMismatchError("grid/N mismatch: grid " + std::to_string(grid_.rows) + "x" +
                              std::to_string(grid_.cols) + " but " +
                              std::to_string(trajectories_.size()) + " trajectories");
    }
    for (std::size_t i = 0; i < trajectories_.size(); ++i) {
      const auto& t = trajectories_[i];
      if (t.patch_index != i) {
        throw GridMismatchError("trajectories must be sorted by patch_index without gaps; position " +
                                std::to_string(i) + " holds patch " + std::to_string(t.patch_index));
      }
      if (t.frames() != frame_count_) {
        throw RaggedLengthError("ragged lengths: trajectory " + std::to_string(i) + " has " +
                                std::to_string(t.frames()) + " points, frame_count is " +
                                std::to_string(frame_count_));
      }
      for (std::size_t f = 0; f < t.points.size(); ++f) {
        if (!t.points[f].finite()) {
          throw NonFiniteError("trajectory " + std::to_string(i) + ": non-finite point", f);
        }
      }
    }
  }

  const std::string& video_id() const noexcept { return video_id_; }
  const GridLayout& grid() const noexcept { return grid_; }
  std::size_t frame_count() const noexcept { return frame_count_; }
  std::size_t patch_count() const noexcept { return trajectories_.size(); }
  const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_.at(i); }

 private:
  std::string video_id_;
  GridLayout grid_;
  std::size_t frame_count_;
  std::vector<Trajectory> trajectories_;
};

// Applies f to every point of every trajectory, returning a new scene.
template <class F>
SceneTrack transform_points(const SceneTrack& scene, F&& f) {
  std::vector<Trajectory> out = scene.trajectories();
  for (auto& t : out) {
    for (std::size_t frame = 0; frame < t.points.size(); ++frame) {
      t.points[frame] = f(t.patch_index, frame, t.points[frame]);
    }
  }
  return SceneTrack(scene.video_id(), scene.grid(), scene.frame_count(), std::move(out));
}

// Scene-wide per-axis z-scoring (pooled over all patches and frames). Axes with
// zero spread are only centred. Changes estimator output, so it is opt-in.
inline SceneTrack standardize_axes(const SceneTrack& scene) {
  double sum[3] = {0, 0, 0};
  double sq[3] = {0, 0, 0};
  std::size_t n = 0;
  for (const auto& t : scene.trajectories()) {
    for (const auto& p : t.points) {
      const double v[3] = {p.x, p.y, p.z};
      for (int a = 0; a < 3; ++a) sum[a] += v[a];
      ++n;
    }
  }
  if (n == 0) return scene;
  double mean[3], sd[3];
  for (int a = 0; a < 3; ++a) mean[a] = sum[a] / static_cast<double>(n);
  for (const auto& t : scene.trajectories()) {
    for (const auto& p : t.points) {
      const double v[3] = {p.x, p.y, p.z};
      for (int a = 0; a < 3; ++a) sq[a] += (v[a] - mean[a]) * (v[a] - mean[a]);
    }
  }
  for (int a = 0; a < 3; ++a) {
    sd[a] = std::sqrt(sq[a] / static_cast<double>(n));
    if (sd[a] == 0.0) sd[a] = 1.0;
  }
  return transform_points(scene, [&](std::size_t, std::size_t, Point3 p) {
    return Point3{(p.x - mean[0]) / sd[0], (p.y - mean[1]) / sd[1], (p.z - mean[2]) / sd[2]};
  });
}

}  // namespace twinmatch
