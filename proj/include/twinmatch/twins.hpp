#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "twinmatch/alignment.hpp"
#include "twinmatch/errors.hpp"
#include "twinmatch/estimator.hpp"
#include "twinmatch/json_io.hpp"
#include "twinmatch/trajectory.hpp"

namespace twinmatch {

// Symmetric pairwise MI over a scene's patches. Entries never computed (the
// diagonal, rows of ineligible patches) hold -inf.
class MIMatrix {
 public:
  static constexpr double kUnset = -std::numeric_limits<double>::infinity();

  explicit MIMatrix(std::size_t n = 0) : n_(n), values_(n * n, kUnset) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  void set_pair(std::size_t i, std::size_t j, double v) {
    values_[i * n_ + j] = v;
    values_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

// MI for every unordered pair of `patches`, each computed once and mirrored.
// Pairs whose estimate fails numerically are left at -inf when
// `tolerate_failures` is set, otherwise the error propagates.
inline MIMatrix mi_matrix(const SceneTrack& scene, const IndexSet& patches, const EstimatorConfig& cfg,
                          bool tolerate_failures = false) {
  cfg.validate();
  if (patches.size() < 2) throw InvalidArgument("scene has no twin candidates");
  for (std::size_t p : patches) {
    if (p >= scene.patch_count()) throw InvalidArgument("patch index out of range");
  }
  if (scene.frame_count() < cfg.min_samples) {
    throw InvalidArgument("scene '" + scene.video_id() + "' has too few frames for estimation");
  }
  const std::size_t n = scene.frame_count();
  std::vector<SampleMatrix> samples;
  std::vector<std::optional<std::vector<double>>> marginal;
  samples.reserve(patches.size());
  for (std::size_t p : patches) {
    samples.push_back(scene.trajectory(p).samples());
    auto eps = kth_distances(samples.back(), cfg.k);
    if (detail::has_zero(eps)) marginal.emplace_back();
    else marginal.emplace_back(std::move(eps));
  }

  MIMatrix m(scene.patch_count());
  for (std::size_t a = 0; a < patches.size(); ++a) {
    for (std::size_t b = a + 1; b < patches.size(); ++b) {
      double v = MIMatrix::kUnset;
      try {
        std::optional<std::vector<double>> joint;
        if (marginal[a] && marginal[b]) {
          joint = kth_distances(hstack(samples[a], samples[b]), cfg.k);
          if (detail::has_zero(*joint)) joint.reset();
        }
        // Fast path shares the marginal distances; anything degenerate goes
        // through ksg_mi for jitter handling and error reporting.
        v = joint ? mi_from_distances(n, 3, 3, cfg, *marginal[a], *marginal[b], *joint)
                  : ksg_mi(samples[a], samples[b], cfg);
      } catch (const NumericError&) {
        if (!tolerate_failures) throw;
      }
      m.set_pair(patches[a], patches[b], v);
    }
  }
  return m;
}

// Argmax of row i over the other eligible patches; ties go to the smaller index.
inline std::size_t select_twin(const MIMatrix& m, std::size_t i, const IndexSet& eligible) {
  if (std::find(eligible.begin(), eligible.end(), i) == eligible.end()) {
    throw InvalidArgument("patch " + std::to_string(i) + " is not eligible");
  }
  if (eligible.size() < 2) throw InvalidArgument("scene has no twin candidates");
  std::optional<std::size_t> best;
  for (std::size_t j : eligible) {
    if (j == i) continue;
    if (!best || m(i, j) > m(i, *best) || (m(i, j) == m(i, *best) && j < *best)) best = j;
  }
  return *best;
}

enum class TwinPolicy { MutualInformation, Random };

inline std::string_view to_string(TwinPolicy p) {
  return p == TwinPolicy::MutualInformation ? "mutual-information" : "random";
}

inline TwinPolicy parse_policy(std::string_view s) {
  if (s == "mutual-information" || s == "mi") return TwinPolicy::MutualInformation;
  if (s == "random") return TwinPolicy::Random;
  throw InvalidArgument("unknown twin policy '" + std::string(s) + "'");
}

struct TwinEntry {
  std::size_t twin = 0;
  std::optional<double> mi_nats;  // absent under the random policy
};

struct SceneTwins {
  std::string video_id;
  bool filtered = true;
  std::optional<EligibilityReport> alignment;
  bool camera_moving = false;
  IndexSet eligible;
  std::map<std::size_t, TwinEntry> twins;
  std::optional<std::string> skipped_reason;
};

struct TwinDictionary {
  EstimatorConfig estimator;
  TwinPolicy policy = TwinPolicy::MutualInformation;
  std::uint64_t seed = 0;
  std::vector<SceneTwins> scenes;  // sorted by video_id

  void sort_scenes() {
    std::stable_sort(scenes.begin(), scenes.end(),
                     [](const SceneTwins& a, const SceneTwins& b) { return a.video_id < b.video_id; });
  }

  const SceneTwins* find(std::string_view id) const {
    for (const auto& s : scenes) {
      if (s.video_id == id) return &s;
    }
    return nullptr;
  }
};

struct TwinBuildOptions {
  bool filter = true;
  unsigned threads = 1;
};

namespace detail {

inline std::uint64_t scene_seed(std::uint64_t seed, std::string_view video_id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : video_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h ^ (seed * 0x9e3779b97f4a7c15ull);
}

inline SceneTwins build_scene_twins(const SceneTrack& scene, const EstimatorConfig& cfg,
                                    TwinPolicy policy, std::uint64_t seed, bool filter) {
  SceneTwins out;
  out.video_id = scene.video_id();
  out.filtered = filter;
  try {
    if (filter) {
      out.alignment = eligible_patches(scene, cfg);
      out.eligible = out.alignment->eligible;
      out.camera_moving = out.alignment->camera_moving;
    } else {
      out.eligible.resize(scene.patch_count());
      for (std::size_t i = 0; i < out.eligible.size(); ++i) out.eligible[i] = i;
    }
    if (out.eligible.size() < 2) {
      const bool all_failed = out.alignment && out.alignment->failed.size() == scene.patch_count();
      out.skipped_reason = all_failed ? "degenerate entropies" : "scene has no twin candidates";
      return out;
    }
    if (policy == TwinPolicy::MutualInformation) {
      const MIMatrix m = mi_matrix(scene, out.eligible, cfg);
      for (std::size_t i : out.eligible) {
        const std::size_t j = select_twin(m, i, out.eligible);
        out.twins[i] = {j, m(i, j)};
      }
    } else {
      std::mt19937_64 rng(scene_seed(seed, scene.video_id()));
      for (std::size_t i : out.eligible) {
        std::uniform_int_distribution<std::size_t> pick(0, out.eligible.size() - 2);
        // Position among eligible \ {i}.
        std::size_t p = pick(rng);
        if (out.eligible[p] >= i) ++p;
        const std::size_t j = out.eligible[p];
        out.twins[i] = {j, std::nullopt};
      }
    }
  } catch (const Error& e) {
    out.twins.clear();
    out.skipped_reason = e.what();
  }
  return out;
}

}  // namespace detail

// Runs the entropy filter and twin selection over every scene. Failures are
// recorded per scene; the batch always completes. Output order is by video_id
// regardless of thread scheduling.
inline TwinDictionary build_twin_dictionary(const std::vector<SceneTrack>& scenes,
                                            const EstimatorConfig& cfg, TwinPolicy policy,
                                            std::uint64_t seed, const TwinBuildOptions& opts = {}) {
  cfg.validate();
  TwinDictionary dict;
  dict.estimator = cfg;
  dict.policy = policy;
  dict.seed = seed;
  dict.scenes.resize(scenes.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < scenes.size(); s = next++) {
      dict.scenes[s] = detail::build_scene_twins(scenes[s], cfg, policy, seed, opts.filter);
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(scenes.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  dict.sort_scenes();
  return dict;
}

// ---- serialization -------------------------------------------------------

namespace detail {

inline json index_array(const IndexSet& s) { return json(s); }

inline json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

inline double number_or(const json& v, double fallback) {
  return v.is_number() ? v.get<double>() : fallback;
}

}  // namespace detail

inline json estimator_to_json(const EstimatorConfig& cfg) {
  return {{"k", cfg.k},
          {"variant", std::string(to_string(cfg.variant))},
          {"jitter", detail::optional_number(cfg.jitter)},
          {"jitter_seed", cfg.jitter_seed},
          {"min_samples", cfg.min_samples}};
}

inline EstimatorConfig estimator_from_json(const json& j) {
  EstimatorConfig cfg;
  cfg.k = j.at("k").get<std::size_t>();
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("jitter") && !j["jitter"].is_null()) cfg.jitter = j["jitter"].get<double>();
  cfg.jitter_seed = j.value("jitter_seed", std::uint64_t{0});
  cfg.min_samples = j.at("min_samples").get<std::size_t>();
  cfg.validate();
  return cfg;
}

inline json report_to_json(const EligibilityReport& r) {
  json ent = json::array();
  for (double e : r.entropies) ent.push_back(std::isfinite(e) ? json(e) : json(nullptr));
  return {{"entropies", std::move(ent)},
          {"threshold", detail::optional_number(r.threshold)},
          {"high", detail::index_array(r.high_set)},
          {"low", detail::index_array(r.low_set)},
          {"failed", detail::index_array(r.failed)}};
}

inline json twin_dictionary_to_json(const TwinDictionary& d) {
  json scenes = json::object();
  for (const auto& s : d.scenes) {
    json twins = json::object();
    for (const auto& [i, e] : s.twins) {
      json entry = {{"twin", e.twin}};
      if (e.mi_nats) entry["mi_nats"] = detail::optional_number(e.mi_nats);
      twins[std::to_string(i)] = std::move(entry);
    }
    json sj = {{"camera_moving", s.camera_moving},
               {"eligible", detail::index_array(s.eligible)},
               {"filtered", s.filtered},
               {"ineligible_patches", "excluded"},
               {"twins", std::move(twins)},
               {"skipped_reason", s.skipped_reason ? json(*s.skipped_reason) : json(nullptr)},
               {"alignment", s.alignment ? report_to_json(*s.alignment) : json(nullptr)}};
    scenes[s.video_id] = std::move(sj);
  }
  return {{"estimator", estimator_to_json(d.estimator)},
          {"policy", std::string(to_string(d.policy))},
          {"seed", d.seed},
          {"scenes", std::move(scenes)}};
}

inline std::string dump_twin_dictionary(const TwinDictionary& d) {
  return dump_canonical(twin_dictionary_to_json(d));
}

inline TwinDictionary load_twin_dictionary(std::string_view text) {
  const json doc = parse_json(text);
  TwinDictionary d;
  try {
    d.estimator = estimator_from_json(doc.at("estimator"));
    d.policy = parse_policy(doc.at("policy").get<std::string>());
    d.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& [id, sj] : doc.at("scenes").items()) {
      SceneTwins s;
      s.video_id = id;
      s.camera_moving = sj.at("camera_moving").get<bool>();
      s.eligible = sj.at("eligible").get<IndexSet>();
      s.filtered = sj.value("filtered", true);
      if (!sj.at("skipped_reason").is_null()) s.skipped_reason = sj["skipped_reason"].get<std::string>();
      for (const auto& [key, ej] : sj.at("twins").items()) {
        TwinEntry e{ej.at("twin").get<std::size_t>(), std::nullopt};
        if (ej.contains("mi_nats")) e.mi_nats = detail::number_or(ej["mi_nats"], MIMatrix::kUnset);
        s.twins[std::stoul(key)] = e;
      }
      if (sj.contains("alignment") && !sj["alignment"].is_null()) {
        const json& aj = sj["alignment"];
        EligibilityReport r;
        for (const auto& e : aj.at("entropies")) {
          r.entropies.push_back(detail::number_or(e, -std::numeric_limits<double>::infinity()));
        }
        if (!aj.at("threshold").is_null()) r.threshold = aj["threshold"].get<double>();
        r.high_set = aj.at("high").get<IndexSet>();
        r.low_set = aj.at("low").get<IndexSet>();
        r.failed = aj.at("failed").get<IndexSet>();
        r.camera_moving = s.camera_moving;
        r.eligible = s.eligible;
        s.alignment = std::move(r);
      }
      d.scenes.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw SchemaError("$", std::string("malformed twin dictionary: ") + e.what());
  }
  d.sort_scenes();
  return d;
}

}  // namespace twinmatch
