#pragma once

// Implementations behind the `twinmatch` subcommands. Each returns a process
// exit code and writes results / diagnostics to the given streams.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "twinmatch/errors.hpp"
#include "twinmatch/estimator.hpp"
#include "twinmatch/json_io.hpp"
#include "twinmatch/scene_io.hpp"
#include "twinmatch/synth.hpp"
#include "twinmatch/twins.hpp"

namespace twinmatch::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Maps a library exception onto the exit-code contract and reports it.
inline int report_error(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  return kData;
}

inline std::string format_nats(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Sample files: a JSON array of scalars (d = 1), an array of equal-length rows,
// or either of those under a top-level "samples" key.
inline SampleMatrix load_samples(const std::string& text) {
  json doc = parse_json(text);
  if (doc.is_object()) {
    if (!doc.contains("samples")) throw SchemaError("$", "missing field 'samples'");
    doc = doc["samples"];
  }
  if (!doc.is_array() || doc.empty()) throw SchemaError("$", "expected a non-empty array of samples");
  const bool rows = doc[0].is_array();
  const std::size_t d = rows ? doc[0].size() : 1;
  if (d == 0) throw SchemaError("$[0]", "empty sample row");
  std::vector<double> values;
  values.reserve(doc.size() * d);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "$[" + std::to_string(i) + "]";
    if (rows) {
      if (!doc[i].is_array() || doc[i].size() != d) {
        throw SchemaError(path, "expected a row of " + std::to_string(d) + " numbers");
      }
      for (std::size_t c = 0; c < d; ++c) {
        values.push_back(detail::require_number(doc[i][c], path + "[" + std::to_string(c) + "]"));
      }
    } else {
      values.push_back(detail::require_number(doc[i], path));
    }
  }
  return SampleMatrix(doc.size(), d, std::move(values));
}

// ---- estimate ------------------------------------------------------------

struct EstimateOptions {
  EstimatorConfig cfg;
  std::string x_path, y_path;
  std::string scene_path;
  std::optional<std::size_t> patch_a, patch_b;
  std::string output;
};

inline int cmd_estimate(const EstimateOptions& o, std::ostream& out, std::ostream& err) {
  try {
    o.cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  const bool samples_mode = !o.x_path.empty() || !o.y_path.empty();
  const bool scene_mode = !o.scene_path.empty();
  if (samples_mode == scene_mode || (samples_mode && (o.x_path.empty() || o.y_path.empty())) ||
      (scene_mode && (!o.patch_a || !o.patch_b))) {
    err << "error: give either --x and --y, or --scene with --patch-a and --patch-b\n";
    return kUsage;
  }
  try {
    double mi;
    if (samples_mode) {
      mi = ksg_mi(load_samples(read_file(o.x_path)), load_samples(read_file(o.y_path)), o.cfg);
    } else {
      const SceneTrack scene = load_scene_file(o.scene_path);
      if (*o.patch_a >= scene.patch_count() || *o.patch_b >= scene.patch_count()) {
        throw InvalidArgument("patch index out of range");
      }
      mi = ksg_mi(scene.trajectory(*o.patch_a).samples(), scene.trajectory(*o.patch_b).samples(), o.cfg);
    }
    const std::string line = format_nats(mi) + "\n";
    if (o.output.empty()) out << line;
    else write_file(o.output, line);
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

// ---- twins ---------------------------------------------------------------

struct TwinsOptions {
  EstimatorConfig cfg;
  std::vector<std::string> inputs;  // scene files or directories of them
  TwinPolicy policy = TwinPolicy::MutualInformation;
  std::uint64_t seed = 0;
  bool filter = true;
  bool standardize = false;
  unsigned threads = 1;
  std::string output;
};

// Scene files under the inputs, directories expanded (non-recursive, sorted),
// ground-truth sidecars skipped.
inline std::vector<std::filesystem::path> collect_scene_files(const std::vector<std::string>& inputs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        if (name.size() >= 11 && name.ends_with(".truth.json")) continue;
        found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

inline int cmd_twins(const TwinsOptions& o, std::ostream& out, std::ostream& err) {
  try {
    o.cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (o.inputs.empty()) {
    err << "error: no input scenes\n";
    return kUsage;
  }
  const auto files = collect_scene_files(o.inputs);
  if (files.empty()) {
    err << "error: no scene files found\n";
    return kData;
  }

  std::vector<SceneTrack> scenes;
  std::vector<SceneTwins> failures;
  std::set<std::string> seen;
  for (const auto& f : files) {
    try {
      SceneTrack s = load_scene_file(f.string());
      if (!seen.insert(s.video_id()).second) {
        throw DataError("duplicate video_id '" + s.video_id() + "'");
      }
      scenes.push_back(o.standardize ? standardize_axes(s) : std::move(s));
    } catch (const Error& e) {
      SceneTwins fail;
      fail.video_id = f.filename().string();
      fail.filtered = o.filter;
      fail.skipped_reason = std::string("load failed: ") + e.what();
      err << "warning: " << f.string() << ": " << e.what() << '\n';
      failures.push_back(std::move(fail));
    }
  }

  TwinDictionary dict = build_twin_dictionary(scenes, o.cfg, o.policy, o.seed, {o.filter, o.threads});
  for (auto& f : failures) dict.scenes.push_back(std::move(f));
  dict.sort_scenes();

  std::size_t failed = 0;
  for (const auto& s : dict.scenes) {
    if (s.skipped_reason) {
      ++failed;
      err << "note: " << s.video_id << ": " << *s.skipped_reason << '\n';
    }
  }
  try {
    const std::string text = dump_twin_dictionary(dict);
    if (o.output.empty()) out << text;
    else write_file(o.output, text);
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
  return failed == dict.scenes.size() ? kData : kOk;
}

// ---- synth ---------------------------------------------------------------

struct SynthOptions {
  std::string out_dir;
  std::size_t scenes = 1;
  std::string prefix = "scene";
  std::size_t rows = 5, cols = 8;
  std::size_t frames = 50;
  std::size_t pairs = 5;
  double rho = 0.95;
  double noise = 1.0;
  double static_fraction = 0.65;
  std::vector<double> drift;  // empty or 3 components (per-frame velocity)
  bool compensated = false;
  std::uint64_t seed = 0;
};

inline SceneSpec synth_spec(const SynthOptions& o, std::size_t index) {
  SceneSpec spec;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%03zu", o.prefix.c_str(), index);
  spec.video_id = id;
  spec.grid = {o.rows, o.cols};
  spec.n_frames = o.frames;
  spec.seed = o.seed * 1000003ull + index;
  spec.coupled_pairs = plant_pairs(spec.grid, o.pairs, o.rho, spec.seed);
  spec.noise_sigma = o.noise;
  spec.static_fraction = o.static_fraction;
  if (!o.drift.empty()) {
    if (o.drift.size() != 3) throw InvalidArgument("--drift takes three components");
    spec.camera_drift = linear_drift(o.frames, {o.drift[0], o.drift[1], o.drift[2]});
  }
  spec.compensated = o.compensated;
  return spec;
}

inline int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  if (o.out_dir.empty()) {
    err << "error: --out-dir is required\n";
    return kUsage;
  }
  std::vector<SceneSpec> specs;
  try {
    for (std::size_t s = 0; s < o.scenes; ++s) {
      specs.push_back(synth_spec(o, s));
      specs.back().validate();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    fs::create_directories(o.out_dir);
    for (const auto& spec : specs) {
      auto [scene, truth] = gen_scene(spec);
      const fs::path base = fs::path(o.out_dir) / spec.video_id;
      write_file(base.string() + ".json", dump_scene(scene));
      write_file(base.string() + ".truth.json", dump_canonical(truth_to_json(truth)));
      out << base.string() << ".json\n";
    }
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
  return kOk;
}

// ---- bench ---------------------------------------------------------------

struct BenchOptions {
  std::size_t patches = 40;
  std::size_t frames = 50;
  std::size_t k = 3;
  MiVariant variant = MiVariant::Dimensioned3kl;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  double bound_seconds = 2.0;
  std::string output;
};

struct BenchReport {
  std::size_t n_patches = 0;
  std::size_t n_frames = 0;
  std::size_t n_pairs = 0;
  std::size_t k = 0;
  std::vector<double> runs_seconds;
  double wall_seconds = 0.0;  // median over runs
  double per_pair_us = 0.0;
  double bound_seconds = 2.0;
  bool pass = false;
  std::string host;
};

inline std::string host_note() {
  std::string note = "single thread; hardware_concurrency=" +
                     std::to_string(std::thread::hardware_concurrency());
#if defined(__clang__)
  note += "; clang " __clang_version__;
#elif defined(__GNUC__)
  note += "; gcc " __VERSION__;
#endif
  return note;
}

// Times the full pairwise MI matrix of one synthetic scene on the calling
// thread. Every patch moves so each pair is estimated.
inline BenchReport run_bench(const BenchOptions& o) {
  if (o.repeats == 0) throw InvalidArgument("repeats must be positive");
  if (o.patches < 2) throw InvalidArgument("need at least 2 patches");
  EstimatorConfig cfg = EstimatorConfig::with_k(o.k);
  cfg.variant = o.variant;
  SceneSpec spec;
  spec.video_id = "bench";
  spec.grid = {1, o.patches};
  spec.n_frames = o.frames;
  spec.coupled_pairs = plant_pairs(spec.grid, o.patches / 8, 0.9, o.seed);
  spec.static_fraction = 0.0;
  spec.seed = o.seed;
  const SceneTrack scene = gen_scene(spec).first;
  IndexSet all(o.patches);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  BenchReport r;
  r.n_patches = o.patches;
  r.n_frames = o.frames;
  r.n_pairs = o.patches * (o.patches - 1) / 2;
  r.k = o.k;
  r.bound_seconds = o.bound_seconds;
  r.host = host_note();
  for (std::size_t rep = 0; rep < o.repeats; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const MIMatrix m = mi_matrix(scene, all, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (!std::isfinite(m(0, 1))) throw NumericError("benchmark produced a non-finite estimate");
    r.runs_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::vector<double> sorted = r.runs_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  r.wall_seconds = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  r.per_pair_us = r.wall_seconds * 1e6 / static_cast<double>(r.n_pairs);
  r.pass = r.wall_seconds < r.bound_seconds;
  return r;
}

inline json bench_to_json(const BenchReport& r) {
  return {{"n_patches", r.n_patches},         {"n_frames", r.n_frames},
          {"n_pairs", r.n_pairs},             {"k", r.k},
          {"runs_seconds", r.runs_seconds},   {"wall_seconds", r.wall_seconds},
          {"per_pair_us", r.per_pair_us},     {"bound_seconds", r.bound_seconds},
          {"pass", r.pass},                   {"host", r.host}};
}

inline int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const BenchReport r = run_bench(o);
    const std::string text = dump_canonical(bench_to_json(r));
    if (o.output.empty()) out << text;
    else write_file(o.output, text);
    if (!r.pass) {
      err << "bench: median " << r.wall_seconds << " s exceeds the " << r.bound_seconds << " s bound\n";
    }
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

}  // namespace twinmatch::cli
