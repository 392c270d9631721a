#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinmatch/errors.hpp"
#include "twinmatch/estimator.hpp"
#include "twinmatch/trajectory.hpp"

namespace twinmatch {

using IndexSet = std::vector<std::size_t>;  // kept sorted ascending

inline double patch_entropy(const Trajectory& traj, const EstimatorConfig& cfg) {
  return kl_entropy(traj.samples(), cfg);
}

struct GapSplit {
  IndexSet high;
  IndexSet low;
  // Midpoint of the largest gap; empty when there is no positive gap.
  std::optional<double> threshold;
};

// Gaps at or below this many nats count as no gap, so entropies that differ
// only by floating-point rounding are treated as equal.
inline constexpr double kGapTolerance = 1e-9;

// Splits values at the largest gap between consecutive sorted values. Ties
// between equal gaps go to the lowest one. Without a positive gap every index
// is "high".
inline GapSplit max_gap_split(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("max_gap_split: no values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw NonFiniteError("max_gap_split: non-finite entropy", i);
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  double best_gap = kGapTolerance;
  std::size_t cut = 0;  // low = order[0..cut)
  for (std::size_t p = 1; p < order.size(); ++p) {
    const double gap = values[order[p]] - values[order[p - 1]];
    if (gap > best_gap) best_gap = gap, cut = p;
  }

  GapSplit out;
  if (cut == 0) {
    out.high = order;
  } else {
    out.low.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    out.high.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
    out.threshold = 0.5 * (values[order[cut - 1]] + values[order[cut]]);
  }
  std::sort(out.high.begin(), out.high.end());
  std::sort(out.low.begin(), out.low.end());
  return out;
}

// Camera is judged moving when border patches are more entropic on average
// than interior ones. Non-finite entropies (failed patches) are left out of
// both means; a group with no finite entropy has mean -inf. Always false when
// the grid has no interior.
inline bool detect_camera_motion(const GridLayout& grid, std::span<const double> entropies) {
  if (entropies.size() != grid.size()) {
    throw LengthMismatchError("detect_camera_motion: " + std::to_string(entropies.size()) +
                              " entropies for " + std::to_string(grid.size()) + " patches");
  }
  if (grid.rows <= 2 || grid.cols <= 2) return false;
  double ring_sum = 0.0, inner_sum = 0.0;
  std::size_t ring_n = 0, inner_n = 0;
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    if (!std::isfinite(entropies[i])) continue;
    if (ring_membership(grid, i)) {
      ring_sum += entropies[i];
      ++ring_n;
    } else {
      inner_sum += entropies[i];
      ++inner_n;
    }
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const double ring_mean = ring_n ? ring_sum / static_cast<double>(ring_n) : neg_inf;
  const double inner_mean = inner_n ? inner_sum / static_cast<double>(inner_n) : neg_inf;
  return ring_mean > inner_mean;
}

inline bool detect_camera_motion(const SceneTrack& scene, std::span<const double> entropies) {
  return detect_camera_motion(scene.grid(), entropies);
}

struct EligibilityReport {
  std::vector<double> entropies;  // -inf for patches whose entropy failed
  std::optional<double> threshold;
  IndexSet high_set;
  IndexSet low_set;
  IndexSet failed;  // zero k-NN distance; always in low_set, never eligible
  bool camera_moving = false;
  IndexSet eligible;
};

// Entropy filter: score every patch, split at the largest entropy gap, decide
// whether the camera moves, and keep the high group (static camera) or the
// low group (moving camera).
inline EligibilityReport eligible_patches(const SceneTrack& scene, const EstimatorConfig& cfg) {
  cfg.validate();
  if (scene.frame_count() < cfg.min_samples) {
    throw InvalidArgument("scene '" + scene.video_id() + "' has " +
                          std::to_string(scene.frame_count()) + " frames, fewer than min_samples " +
                          std::to_string(cfg.min_samples));
  }
  EligibilityReport r;
  const std::size_t n = scene.patch_count();
  r.entropies.resize(n);
  std::vector<double> finite_values;
  std::vector<std::size_t> finite_index;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      r.entropies[i] = patch_entropy(scene.trajectory(i), cfg);
      finite_values.push_back(r.entropies[i]);
      finite_index.push_back(i);
    } catch (const ZeroDistanceError&) {
      r.entropies[i] = -std::numeric_limits<double>::infinity();
      r.failed.push_back(i);
    }
  }

  r.low_set = r.failed;
  if (!finite_values.empty()) {
    const GapSplit split = max_gap_split(finite_values);
    for (std::size_t p : split.high) r.high_set.push_back(finite_index[p]);
    for (std::size_t p : split.low) r.low_set.push_back(finite_index[p]);
    r.threshold = split.threshold;
  }
  std::sort(r.low_set.begin(), r.low_set.end());

  r.camera_moving = detect_camera_motion(scene, r.entropies);
  if (r.camera_moving) {
    std::set_difference(r.low_set.begin(), r.low_set.end(), r.failed.begin(), r.failed.end(),
                        std::back_inserter(r.eligible));
  } else {
    r.eligible = r.high_set;
  }
  return r;
}

}  // namespace twinmatch
