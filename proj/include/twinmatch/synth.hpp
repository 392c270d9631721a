#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "twinmatch/alignment.hpp"
#include "twinmatch/errors.hpp"
#include "twinmatch/json_io.hpp"
#include "twinmatch/matrix.hpp"
#include "twinmatch/trajectory.hpp"
#include "twinmatch/twins.hpp"

namespace twinmatch {

// n paired standard-normal draws with correlation rho. MI is -0.5 ln(1 - rho^2).
inline std::pair<SampleMatrix, SampleMatrix> gen_correlated_gaussian(std::size_t n, double rho,
                                                                     std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("|rho| must be below 1");
  if (n < 2) throw InvalidArgument("need at least 2 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double c = std::sqrt(1.0 - rho * rho);
  SampleMatrix x(n, 1), y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    x(i, 0) = a;
    y(i, 0) = rho * a + c * b;
  }
  return {std::move(x), std::move(y)};
}

inline double gaussian_mi(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

struct CoupledPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double rho = 1.0;
};

// Recipe for one synthetic scene. Movers follow 3-D Gaussian random walks;
// the two members of a coupled pair share one latent walk and add independent
// per-frame noise scaled by (1 - rho). Static patches only jitter.
struct SceneSpec {
  std::string video_id = "synth";
  GridLayout grid{5, 8};
  std::size_t n_frames = 50;
  std::vector<CoupledPair> coupled_pairs;
  double noise_sigma = 1.0;     // per-axis pixel noise before the (1 - rho) factor
  double static_fraction = 0.0; // share of all patches that stay put (non-paired first)
  double motion_step = 2.0;     // random-walk step deviation, pixels per frame
  double static_sigma = 0.01;   // jitter of static patches, pixels
  double depth_scale = 0.1;     // z-axis motion relative to x/y
  double cell_size = 32.0;      // patch size in pixels
  // Common per-frame offset added to every point (a moving camera). Empty for none.
  std::vector<Point3> camera_drift;
  // Movers travel with the camera: the drift is removed from them and only
  // `compensated_residual` of their own motion remains visible.
  bool compensated = false;
  double compensated_residual = 0.05;
  // Unpaired border patches are made static before unpaired interior ones,
  // keeping independent movers off the outermost ring where possible.
  bool interior_movers = true;
  std::uint64_t seed = 0;

  std::size_t n_patches() const noexcept { return grid.size(); }

  void validate() const {
    const std::size_t n = n_patches();
    if (grid.rows == 0 || grid.cols == 0) throw InvalidArgument("grid dimensions must be positive");
    if (n_frames == 0) throw InvalidArgument("n_frames must be positive");
    std::set<std::size_t> used;
    for (const auto& p : coupled_pairs) {
      if (p.a >= n || p.b >= n) throw InvalidArgument("coupled pair index out of range");
      if (p.a == p.b) throw InvalidArgument("coupled pair must join two distinct patches");
      if (!used.insert(p.a).second || !used.insert(p.b).second) {
        throw InvalidArgument("coupled pairs must be disjoint");
      }
      if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw InvalidArgument("coupling rho must lie in [0,1]");
    }
    if (!(noise_sigma > 0.0)) throw InvalidArgument("noise_sigma must be positive");
    if (!(static_fraction >= 0.0 && static_fraction <= 1.0)) {
      throw InvalidArgument("static_fraction must lie in [0,1]");
    }
    if (!(motion_step > 0.0) || !(static_sigma > 0.0) || !(depth_scale > 0.0) || !(cell_size > 0.0)) {
      throw InvalidArgument("motion scales must be positive");
    }
    if (!camera_drift.empty() && camera_drift.size() != n_frames) {
      throw InvalidArgument("camera_drift must have one offset per frame");
    }
    if (compensated && camera_drift.empty()) throw InvalidArgument("compensated mode needs camera drift");
    if (!(compensated_residual >= 0.0 && compensated_residual <= 1.0)) {
      throw InvalidArgument("compensated_residual must lie in [0,1]");
    }
  }
};

// Drift moving `velocity` per frame, starting at zero.
inline std::vector<Point3> linear_drift(std::size_t frames, Point3 velocity) {
  std::vector<Point3> d(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f);
    d[f] = {velocity.x * t, velocity.y * t, velocity.z * t};
  }
  return d;
}

// `count` disjoint pairs on randomly chosen cells, interior cells first.
inline std::vector<CoupledPair> plant_pairs(const GridLayout& grid, std::size_t count, double rho,
                                            std::uint64_t seed) {
  if (2 * count > grid.size()) throw InvalidArgument("too many coupled pairs for the grid");
  std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
  std::vector<std::size_t> inner, ring;
  for (std::size_t i = 0; i < grid.size(); ++i) (ring_membership(grid, i) ? ring : inner).push_back(i);
  std::shuffle(inner.begin(), inner.end(), rng);
  std::shuffle(ring.begin(), ring.end(), rng);
  inner.insert(inner.end(), ring.begin(), ring.end());
  std::vector<CoupledPair> pairs;
  for (std::size_t p = 0; p < count; ++p) pairs.push_back({inner[2 * p], inner[2 * p + 1], rho});
  return pairs;
}

struct GroundTruth {
  std::map<std::size_t, std::size_t> twin_map;  // both directions of every moving pair
  bool camera_moving = false;
  IndexSet mover_set;
};

inline std::pair<SceneTrack, GroundTruth> gen_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_patches();
  const std::size_t frames = spec.n_frames;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<int> pair_of(n, -1);
  for (std::size_t p = 0; p < spec.coupled_pairs.size(); ++p) {
    pair_of[spec.coupled_pairs[p].a] = static_cast<int>(p);
    pair_of[spec.coupled_pairs[p].b] = static_cast<int>(p);
  }

  // Static patches come from the unpaired ones first, then from pair members.
  std::vector<std::size_t> unpaired, paired;
  for (std::size_t i = 0; i < n; ++i) (pair_of[i] < 0 ? unpaired : paired).push_back(i);
  std::shuffle(unpaired.begin(), unpaired.end(), rng);
  std::shuffle(paired.begin(), paired.end(), rng);
  if (spec.interior_movers) {
    std::stable_partition(unpaired.begin(), unpaired.end(),
                          [&](std::size_t i) { return ring_membership(spec.grid, i); });
  }
  const auto n_static = static_cast<std::size_t>(std::llround(spec.static_fraction * static_cast<double>(n)));
  std::vector<bool> is_static(n, false);
  {
    std::vector<std::size_t> order = unpaired;
    order.insert(order.end(), paired.begin(), paired.end());
    for (std::size_t s = 0; s < n_static; ++s) is_static[order[s]] = true;
  }

  auto walk = [&](double step) {
    std::vector<Point3> w(frames);
    for (std::size_t f = 1; f < frames; ++f) {
      w[f] = {w[f - 1].x + step * normal(rng), w[f - 1].y + step * normal(rng),
              w[f - 1].z + step * spec.depth_scale * normal(rng)};
    }
    return w;
  };
  std::vector<std::vector<Point3>> latent;
  for (std::size_t p = 0; p < spec.coupled_pairs.size(); ++p) latent.push_back(walk(spec.motion_step));

  const bool moving_camera = !spec.camera_drift.empty();
  std::vector<Trajectory> trajs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double bx = (static_cast<double>(i % spec.grid.cols) + 0.5) * spec.cell_size;
    const double by = (static_cast<double>(i / spec.grid.cols) + 0.5) * spec.cell_size;
    const double bz = 1.0;
    auto& t = trajs[i];
    t.patch_index = i;
    t.points.resize(frames);

    if (is_static[i]) {
      for (auto& p : t.points) {
        p = {bx + spec.static_sigma * normal(rng), by + spec.static_sigma * normal(rng),
             bz + spec.static_sigma * spec.depth_scale * normal(rng)};
      }
    } else {
      double noise = spec.noise_sigma;
      std::vector<Point3> own;
      if (pair_of[i] >= 0) {
        own = latent[static_cast<std::size_t>(pair_of[i])];
        noise *= 1.0 - spec.coupled_pairs[static_cast<std::size_t>(pair_of[i])].rho;
      } else {
        own = walk(spec.motion_step);
      }
      const double visible = spec.compensated ? spec.compensated_residual : 1.0;
      for (std::size_t f = 0; f < frames; ++f) {
        t.points[f] = {bx + visible * (own[f].x + noise * normal(rng)),
                       by + visible * (own[f].y + noise * normal(rng)),
                       bz + visible * (own[f].z + noise * spec.depth_scale * normal(rng))};
      }
    }
    if (moving_camera && !(spec.compensated && !is_static[i])) {
      for (std::size_t f = 0; f < frames; ++f) {
        t.points[f].x += spec.camera_drift[f].x;
        t.points[f].y += spec.camera_drift[f].y;
        t.points[f].z += spec.camera_drift[f].z;
      }
    }
  }

  GroundTruth truth;
  truth.camera_moving = moving_camera;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_static[i]) truth.mover_set.push_back(i);
  }
  for (const auto& p : spec.coupled_pairs) {
    if (!is_static[p.a] && !is_static[p.b]) {
      truth.twin_map[p.a] = p.b;
      truth.twin_map[p.b] = p.a;
    }
  }
  return {SceneTrack(spec.video_id, spec.grid, frames, std::move(trajs)), std::move(truth)};
}

// Fraction of eligible planted-pair members whose selected twin is their
// planted partner. Empty when no planted member received a twin.
inline std::optional<double> twin_precision(const SceneTwins& scene, const GroundTruth& truth) {
  std::size_t hits = 0, total = 0;
  for (const auto& [i, partner] : truth.twin_map) {
    auto it = scene.twins.find(i);
    if (it == scene.twins.end()) continue;
    ++total;
    if (it->second.twin == partner) ++hits;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline json truth_to_json(const GroundTruth& t) {
  json pairs = json::object();
  for (const auto& [a, b] : t.twin_map) pairs[std::to_string(a)] = b;
  return {{"twin_map", std::move(pairs)}, {"camera_moving", t.camera_moving}, {"mover_set", t.mover_set}};
}

inline GroundTruth truth_from_json(const json& j) {
  GroundTruth t;
  try {
    for (const auto& [k, v] : j.at("twin_map").items()) t.twin_map[std::stoul(k)] = v.get<std::size_t>();
    t.camera_moving = j.at("camera_moving").get<bool>();
    t.mover_set = j.at("mover_set").get<IndexSet>();
  } catch (const json::exception& e) {
    throw SchemaError("$", std::string("malformed ground truth: ") + e.what());
  }
  return t;
}

}  // namespace twinmatch
