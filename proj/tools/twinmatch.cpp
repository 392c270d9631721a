// twinmatch: trajectory mutual information, entropy filtering and twin-patch
// dictionaries from the command line.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "twinmatch/commands.hpp"

namespace tw = twinmatch;

int main(int argc, char** argv) {
  CLI::App app{"twinmatch - k-NN mutual information between patch trajectories and twin-patch mining"};
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t k = 3;
  std::string variant = "dimensioned-3kl";
  bool jitter = false;
  double jitter_scale = tw::kDefaultJitterScale;
  std::uint64_t seed = 0;
  std::size_t min_samples = 0;
  app.add_option("--k", k, "Neighbour order")->check(CLI::PositiveNumber);
  app.add_option("--variant", variant, "Estimator variant")
      ->check(CLI::IsMember({"dimensioned-3kl", "paper-eq1"}));
  app.add_flag("--jitter", jitter, "Perturb duplicate samples with seeded noise instead of failing");
  app.add_option("--jitter-scale", jitter_scale, "Jitter size relative to per-axis standard deviation")
      ->capture_default_str();
  app.add_option("--seed", seed, "Seed for jitter, random twins and synthesis");
  app.add_option("--min-samples", min_samples, "Minimum sample count (at least k+1)");

  auto estimator = [&] {
    tw::EstimatorConfig cfg = tw::EstimatorConfig::with_k(k);
    cfg.variant = tw::parse_variant(variant);
    cfg.min_samples = std::max(min_samples, k + 1);
    cfg.jitter_seed = seed;
    if (jitter) cfg.jitter = jitter_scale;
    return cfg;
  };

  tw::cli::EstimateOptions est;
  std::size_t patch_a = 0, patch_b = 0;
  auto* estimate = app.add_subcommand("estimate", "Estimate MI between two sample files or two scene patches");
  estimate->add_option("--x", est.x_path, "Samples of X (JSON)");
  estimate->add_option("--y", est.y_path, "Samples of Y (JSON)");
  estimate->add_option("--scene", est.scene_path, "Scene file");
  auto* pa = estimate->add_option("--patch-a", patch_a, "First patch index (with --scene)");
  auto* pb = estimate->add_option("--patch-b", patch_b, "Second patch index (with --scene)");
  estimate->add_option("--output,-o", est.output, "Write the value here instead of stdout");

  tw::cli::TwinsOptions twopt;
  std::string policy = "mi";
  bool no_filter = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* twins = app.add_subcommand("twins", "Build a twin-patch dictionary from scene files");
  twins->add_option("--input,-i", twopt.inputs, "Scene file(s) or directories")->required();
  twins->add_option("--policy", policy, "Twin policy")->check(CLI::IsMember({"mi", "random"}));
  twins->add_flag("--no-filter", no_filter, "Skip the entropy filter; every patch is eligible");
  twins->add_flag("--standardize", twopt.standardize, "Z-score each axis over the scene before estimation");
  twins->add_option("--threads", threads, "Scenes processed in parallel")->check(CLI::PositiveNumber);
  twins->add_option("--output,-o", twopt.output, "Output file (default stdout)");

  tw::cli::SynthOptions sy;
  auto* synth = app.add_subcommand("synth", "Write synthetic scenes with ground-truth sidecars");
  synth->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  synth->add_option("--scenes", sy.scenes, "Number of scenes");
  synth->add_option("--prefix", sy.prefix, "File / video_id prefix");
  synth->add_option("--rows", sy.rows, "Grid rows")->check(CLI::PositiveNumber);
  synth->add_option("--cols", sy.cols, "Grid columns")->check(CLI::PositiveNumber);
  synth->add_option("--frames", sy.frames, "Frames per scene")->check(CLI::PositiveNumber);
  synth->add_option("--pairs", sy.pairs, "Planted coupled pairs");
  synth->add_option("--rho", sy.rho, "Pair coupling in [0,1]");
  synth->add_option("--noise", sy.noise, "Per-axis noise sigma");
  synth->add_option("--static-fraction", sy.static_fraction, "Share of static patches");
  synth->add_option("--drift", sy.drift, "Camera velocity per frame: vx vy vz")->expected(3);
  synth->add_flag("--compensated", sy.compensated, "Movers travel with the camera");

  tw::cli::BenchOptions be;
  auto* bench = app.add_subcommand("bench", "Time a full pairwise MI matrix on one thread");
  bench->add_option("--patches", be.patches, "Patches");
  bench->add_option("--frames", be.frames, "Frames");
  bench->add_option("--repeats", be.repeats, "Timed repetitions (median reported)")->check(CLI::PositiveNumber);
  bench->add_option("--bound", be.bound_seconds, "Pass/fail bound in seconds");
  bench->add_option("--output,-o", be.output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tw::cli::kUsage;
  }

  tw::EstimatorConfig cfg;
  try {
    cfg = estimator();
    cfg.validate();
  } catch (const tw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tw::cli::kUsage;
  }

  if (*estimate) {
    est.cfg = cfg;
    if (*pa) est.patch_a = patch_a;
    if (*pb) est.patch_b = patch_b;
    return tw::cli::cmd_estimate(est, std::cout, std::cerr);
  }
  if (*twins) {
    twopt.cfg = cfg;
    twopt.policy = tw::parse_policy(policy);
    twopt.seed = seed;
    twopt.filter = !no_filter;
    twopt.threads = threads;
    return tw::cli::cmd_twins(twopt, std::cout, std::cerr);
  }
  if (*synth) {
    sy.seed = seed;
    return tw::cli::cmd_synth(sy, std::cout, std::cerr);
  }
  be.k = k;
  be.variant = cfg.variant;
  be.seed = seed;
  return tw::cli::cmd_bench(be, std::cout, std::cerr);
}
