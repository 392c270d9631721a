#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "twinmatch/alignment.hpp"
#include "twinmatch/synth.hpp"

using namespace twinmatch;

namespace {

Trajectory random_walk(std::size_t frames, double step, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, step);
  Trajectory t{0, {}};
  Point3 p{100, 100, 1};
  for (std::size_t f = 0; f < frames; ++f) {
    t.points.push_back(p);
    p = {p.x + normal(rng), p.y + normal(rng), p.z + normal(rng)};
  }
  return t;
}

}  // namespace

TEST(PatchEntropy, StaticPointFailsWithoutJitter) {
  Trajectory t{0, std::vector<Point3>(20, Point3{3, 4, 5})};
  EXPECT_THROW(patch_entropy(t, {}), ZeroDistanceError);
}

TEST(PatchEntropy, LargerStepsMeanMoreEntropy) {
  const Trajectory walk = random_walk(50, 2.0, 1);
  Trajectory small = walk;
  for (auto& p : small.points) p = {p.x / 10, p.y / 10, p.z / 10};
  const double big = patch_entropy(walk, {});
  EXPECT_GT(big, patch_entropy(small, {}));
  EXPECT_NEAR(big - patch_entropy(small, {}), 3 * std::log(10.0), 1e-10);
}

TEST(PatchEntropy, TranslationInvariant) {
  const Trajectory walk = random_walk(50, 2.0, 2);
  Trajectory moved = walk;
  for (auto& p : moved.points) p = {p.x + 40, p.y - 12, p.z + 0.5};
  EXPECT_NEAR(patch_entropy(moved, {}), patch_entropy(walk, {}), 1e-12);
}

TEST(MaxGapSplit, Examples) {
  {
    const std::vector<double> v{0.1, 0.2, 5.0, 5.1};
    const auto s = max_gap_split(v);
    EXPECT_EQ(s.low, (IndexSet{0, 1}));
    EXPECT_EQ(s.high, (IndexSet{2, 3}));
    ASSERT_TRUE(s.threshold);
    EXPECT_DOUBLE_EQ(*s.threshold, 2.6);
  }
  {
    const std::vector<double> v{2.0, 2.0, 2.0};
    const auto s = max_gap_split(v);
    EXPECT_EQ(s.high, (IndexSet{0, 1, 2}));
    EXPECT_TRUE(s.low.empty());
    EXPECT_FALSE(s.threshold);
  }
  {
    const std::vector<double> v{1.0, 2.0, 4.0};
    const auto s = max_gap_split(v);
    EXPECT_EQ(s.low, (IndexSet{0, 1}));
    EXPECT_EQ(s.high, (IndexSet{2}));
    EXPECT_EQ(*s.threshold, 3.0);
  }
}

TEST(MaxGapSplit, SingleValueAndTies) {
  const std::vector<double> one{4.2};
  EXPECT_EQ(max_gap_split(one).high, (IndexSet{0}));
  // Equal gaps: the earliest (lowest) one wins.
  const std::vector<double> tie{3.0, 1.0, 2.0};
  const auto s = max_gap_split(tie);
  EXPECT_EQ(s.low, (IndexSet{1}));
  EXPECT_EQ(s.high, (IndexSet{0, 2}));
}

TEST(MaxGapSplit, RejectsBadInput) {
  EXPECT_THROW(max_gap_split(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(max_gap_split(std::vector<double>{1.0, INFINITY}), NonFiniteError);
}

TEST(MaxGapSplit, PropertyGapEqualsLargestSortedGap) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(2, 60);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = normal(rng);
    const auto s = max_gap_split(v);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double largest = 0;
    for (std::size_t i = 1; i < sorted.size(); ++i) largest = std::max(largest, sorted[i] - sorted[i - 1]);
    ASSERT_FALSE(s.low.empty());
    double min_high = INFINITY, max_low = -INFINITY;
    for (auto i : s.high) min_high = std::min(min_high, v[i]);
    for (auto i : s.low) max_low = std::max(max_low, v[i]);
    EXPECT_EQ(min_high - max_low, largest);
    EXPECT_EQ(s.high.size() + s.low.size(), v.size());
  }
}

TEST(CameraMotion, RingVersusInteriorMeans) {
  const GridLayout g{3, 3};
  std::vector<double> e(9, 3.0);
  e[4] = 1.0;
  EXPECT_TRUE(detect_camera_motion(g, e));
  std::fill(e.begin(), e.end(), 1.0);
  e[4] = 3.0;
  EXPECT_FALSE(detect_camera_motion(g, e));
  std::fill(e.begin(), e.end(), 2.0);
  EXPECT_FALSE(detect_camera_motion(g, e));  // strict comparison
}

TEST(CameraMotion, DegenerateGridAndErrors) {
  EXPECT_FALSE(detect_camera_motion(GridLayout{2, 5}, std::vector<double>(10, 9.0)));
  EXPECT_THROW(detect_camera_motion(GridLayout{3, 3}, std::vector<double>(8, 0.0)), LengthMismatchError);
}

TEST(EligiblePatches, StaticCameraKeepsMovers) {
  SceneSpec spec;
  spec.seed = 12;
  spec.static_fraction = 35.0 / 40.0;
  const auto [scene, truth] = gen_scene(spec);
  ASSERT_EQ(truth.mover_set.size(), 5u);
  const auto r = eligible_patches(scene, {});
  EXPECT_FALSE(r.camera_moving);
  EXPECT_EQ(r.eligible, truth.mover_set);
  EXPECT_EQ(r.high_set, truth.mover_set);
}

TEST(EligiblePatches, CompensatedCameraFlipsToLowGroup) {
  SceneSpec spec;
  spec.seed = 13;
  spec.static_fraction = 35.0 / 40.0;
  spec.camera_drift = linear_drift(spec.n_frames, {2.0, 1.0, 0.0});
  spec.compensated = true;
  const auto [scene, truth] = gen_scene(spec);
  const auto r = eligible_patches(scene, {});
  EXPECT_TRUE(r.camera_moving);
  EXPECT_EQ(r.eligible, truth.mover_set);
  EXPECT_EQ(r.low_set, truth.mover_set);
}

TEST(EligiblePatches, IdenticalMotionIsOneGroup) {
  const Trajectory walk = random_walk(40, 1.5, 3);
  std::vector<Trajectory> ts;
  for (std::size_t i = 0; i < 12; ++i) {
    Trajectory t = walk;
    t.patch_index = i;
    for (auto& p : t.points) p = {p.x + 32.0 * (i % 4), p.y + 32.0 * (i / 4), p.z};
    ts.push_back(t);
  }
  const auto r = eligible_patches(SceneTrack("same", {3, 4}, 40, ts), {});
  EXPECT_TRUE(r.low_set.empty());
  EXPECT_EQ(r.eligible.size(), 12u);
  EXPECT_FALSE(r.threshold);
}

TEST(EligiblePatches, FailedPatchesAreDemoted) {
  SceneSpec spec;
  spec.grid = {3, 3};
  spec.seed = 2;
  spec.static_fraction = 0.0;
  auto [scene, truth] = gen_scene(spec);
  // Freeze patch 0 completely.
  scene = transform_points(scene, [](std::size_t i, std::size_t, Point3 p) {
    return i == 0 ? Point3{1, 1, 1} : p;
  });
  const auto r = eligible_patches(scene, {});
  EXPECT_EQ(r.failed, (IndexSet{0}));
  EXPECT_TRUE(std::isinf(r.entropies[0]));
  EXPECT_TRUE(std::find(r.low_set.begin(), r.low_set.end(), 0u) != r.low_set.end());
  EXPECT_TRUE(std::find(r.eligible.begin(), r.eligible.end(), 0u) == r.eligible.end());
}

TEST(EligiblePatches, RigidTranslationChangesNothing) {
  SceneSpec spec;
  spec.seed = 21;
  spec.static_fraction = 0.5;
  const auto [scene, truth] = gen_scene(spec);
  const auto moved = transform_points(scene, [](std::size_t, std::size_t, Point3 p) {
    return Point3{p.x + 64, p.y + 64, p.z + 2};
  });
  const auto a = eligible_patches(scene, {});
  const auto b = eligible_patches(moved, {});
  EXPECT_EQ(a.eligible, b.eligible);
  EXPECT_EQ(a.high_set, b.high_set);
  EXPECT_EQ(a.camera_moving, b.camera_moving);
  for (std::size_t i = 0; i < a.entropies.size(); ++i) {
    EXPECT_NEAR(a.entropies[i], b.entropies[i], 1e-12 * std::abs(a.entropies[i]));
  }
}

TEST(EligiblePatches, DeterministicAndRejectsShortScenes) {
  SceneSpec spec;
  spec.seed = 5;
  spec.static_fraction = 0.6;
  const auto scene = gen_scene(spec).first;
  const auto a = eligible_patches(scene, {});
  const auto b = eligible_patches(scene, {});
  EXPECT_EQ(a.entropies, b.entropies);
  EXPECT_EQ(a.eligible, b.eligible);
  spec.n_frames = 3;
  EXPECT_THROW(eligible_patches(gen_scene(spec).first, {}), InvalidArgument);
}
