#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "twinmatch/estimator.hpp"
#include "twinmatch/synth.hpp"

using namespace twinmatch;

namespace {

SampleMatrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  SampleMatrix m(n, d);
  for (auto& v : m.data()) v = normal(rng);
  return m;
}

double rel_dev(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Test-side reference: k-th neighbour distance from a fully sorted distance
// list and the textbook formulas with the asymptotic digamma written out here.
double ref_digamma(double v) {
  double acc = 0;
  while (v < 30) acc -= 1 / v, v += 1;
  return acc + std::log(v) - 1 / (2 * v) - 1 / (12 * v * v) + 1 / (120 * std::pow(v, 4)) -
         1 / (252 * std::pow(v, 6));
}

std::vector<double> ref_eps(const SampleMatrix& m, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < m.rows(); ++j) {
      if (i == j) continue;
      double mx = 0;
      for (std::size_t c = 0; c < m.cols(); ++c) mx = std::max(mx, std::fabs(m(i, c) - m(j, c)));
      d.push_back(mx);
    }
    std::sort(d.begin(), d.end());
    out.push_back(d[k - 1]);
  }
  return out;
}

double ref_entropy(const SampleMatrix& m, std::size_t k) {
  const auto e = ref_eps(m, k);
  double s = 0;
  for (double v : e) s += std::log(v);
  const double n = static_cast<double>(m.rows()), d = static_cast<double>(m.cols());
  return ref_digamma(n) - ref_digamma(static_cast<double>(k)) + d * std::log(2.0) + d / n * s;
}

double ref_eq1(const SampleMatrix& x, const SampleMatrix& y, std::size_t k) {
  const auto ex = ref_eps(x, k), ey = ref_eps(y, k), ep = ref_eps(hstack(x, y), k);
  double s = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) s += std::log(ex[i] * ey[i] / (ep[i] * ep[i]));
  const double n = static_cast<double>(x.rows());
  return ref_digamma(n) - ref_digamma(static_cast<double>(k)) + s / n;
}

EstimatorConfig eq1() {
  EstimatorConfig c;
  c.variant = MiVariant::PaperEq1;
  return c;
}

}  // namespace

TEST(EstimatorConfig, Validation) {
  EstimatorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.k = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = EstimatorConfig::with_k(5);
  EXPECT_EQ(c.min_samples, 6u);
  c.min_samples = 5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.jitter = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_EQ(parse_variant("paper-eq1"), MiVariant::PaperEq1);
  EXPECT_THROW(parse_variant("ksg2"), InvalidArgument);
}

TEST(KlEntropy, MatchesReferenceFormula) {
  std::mt19937_64 rng(3);
  for (std::size_t d : {1u, 2u, 3u, 6u}) {
    const auto m = random_matrix(120, d, rng);
    EXPECT_NEAR(kl_entropy(m), ref_entropy(m, 3), 1e-10) << d;
  }
}

TEST(KlEntropy, UniformUnitIntervalIsNearZero) {
  // Analytic entropy of U(0,1) is 0.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SampleMatrix m(10000, 1);
    for (auto& v : m.data()) v = u(rng);
    EXPECT_NEAR(kl_entropy(m), 0.0, 0.03);
  }
}

TEST(KlEntropy, ScalingAndTranslation) {
  std::mt19937_64 rng(5);
  for (std::size_t d : {1u, 3u}) {
    const auto m = random_matrix(500, d, rng);
    const double h = kl_entropy(m);
    for (double a : {0.5, 2.0, 10.0}) {
      SampleMatrix s = m;
      for (auto& v : s.data()) v *= a;
      EXPECT_LE(std::abs(kl_entropy(s) - h - static_cast<double>(d) * std::log(a)), 1e-12);
    }
    SampleMatrix t = m;
    for (auto& v : t.data()) v += 17.0;
    EXPECT_LE(rel_dev(kl_entropy(t), h), 1e-12);
  }
}

TEST(KlEntropy, ZeroDistanceAndJitter) {
  SampleMatrix m(20, 3, 4.0);
  EXPECT_THROW(kl_entropy(m), ZeroDistanceError);
  EstimatorConfig c;
  c.jitter = kDefaultJitterScale;
  const double h1 = kl_entropy(m, c);
  EXPECT_TRUE(std::isfinite(h1));
  EXPECT_EQ(h1, kl_entropy(m, c));  // seeded, deterministic
  c.jitter_seed = 99;
  EXPECT_NE(h1, kl_entropy(m, c));
}

TEST(KlEntropy, TooFewSamples) {
  EXPECT_THROW(kl_entropy(SampleMatrix{{0}, {1}, {2}}), InvalidArgument);
  EXPECT_THROW(kl_entropy(SampleMatrix{{0}, {1}, {2}, {std::nan("")}}), NonFiniteError);
}

TEST(KsgMi, IdenticalInputsGiveDigammaDifference) {
  std::vector<double> xs(100);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::sin(0.37 * i) * 10 + 0.001 * i;
  const auto x = SampleMatrix::column(xs);
  // psi(100) - psi(3) = (H_99 - gamma) - (H_2 - gamma)
  long double h = 0.0L;
  for (int j = 3; j <= 99; ++j) h += 1.0L / j;
  const double expect = static_cast<double>(h);
  EXPECT_NEAR(expect, 3.6773775176, 1e-9);
  EXPECT_NEAR(ksg_mi(x, x), expect, 1e-9);
  EXPECT_NEAR(ksg_mi(x, x, eq1()), expect, 1e-9);
}

TEST(KsgMi, MatchesReferenceFormulas) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t dx = 1 + trial % 3, dy = 1 + (trial + 1) % 3;
    const auto x = random_matrix(150, dx, rng);
    auto y = random_matrix(150, dy, rng);
    for (std::size_t i = 0; i < 150; ++i) y(i, 0) += x(i, 0);
    const double dim_ref = ref_entropy(x, 3) + ref_entropy(y, 3) - ref_entropy(hstack(x, y), 3);
    EXPECT_NEAR(ksg_mi(x, y), dim_ref, 1e-10);
    EXPECT_NEAR(ksg_mi(x, y, eq1()), ref_eq1(x, y, 3), 1e-10);
  }
}

TEST(KsgMi, VariantsCoincideInOneDimension) {
  auto [x, y] = gen_correlated_gaussian(800, 0.6, 4);
  EXPECT_NEAR(ksg_mi(x, y), ksg_mi(x, y, eq1()), 1e-12);
}

TEST(KsgMi, CorrelatedGaussian) {
  auto [x, y] = gen_correlated_gaussian(5000, 0.9, 21);
  EXPECT_NEAR(gaussian_mi(0.9), 0.83036560341082555, 1e-9);
  EXPECT_NEAR(ksg_mi(x, y), gaussian_mi(0.9), 0.05);
}

TEST(KsgMi, IndependentUniforms) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  SampleMatrix x(5000, 1), y(5000, 1);
  for (auto& v : x.data()) v = u(rng);
  for (auto& v : y.data()) v = u(rng);
  EXPECT_NEAR(ksg_mi(x, y), 0.0, 0.05);
}

TEST(KsgMi, ExactInvariances) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-50.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 60 + trial * 7, dx = 1 + trial % 3, dy = 1 + trial % 2;
    const auto x = random_matrix(n, dx, rng);
    auto y = random_matrix(n, dy, rng);
    for (std::size_t i = 0; i < n; ++i) y(i, 0) += 0.8 * x(i, 0);
    for (const auto& cfg : {EstimatorConfig{}, eq1()}) {
      const double mi = ksg_mi(x, y, cfg);
      EXPECT_EQ(ksg_mi(y, x, cfg), mi);

      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0u);
      std::shuffle(perm.begin(), perm.end(), rng);
      SampleMatrix px(n, dx), py(n, dy);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), px.row(i).begin());
        std::copy(y.row(perm[i]).begin(), y.row(perm[i]).end(), py.row(i).begin());
      }
      EXPECT_EQ(ksg_mi(px, py, cfg), mi);

      const double a = scale(rng);
      SampleMatrix sx = x, sy = y;
      for (auto& v : sx.data()) v *= a;
      for (auto& v : sy.data()) v *= a;
      EXPECT_LE(rel_dev(ksg_mi(sx, sy, cfg), mi), 1e-12);

      std::vector<double> offset(dx);
      for (auto& o : offset) o = shift(rng);
      SampleMatrix tx = x;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dx; ++c) tx(i, c) += offset[c];
      }
      EXPECT_LE(rel_dev(ksg_mi(tx, y, cfg), mi), 1e-12);
    }
  }
}

TEST(KsgMi, IncreasesWithCorrelation) {
  double prev = -1e9;
  for (double rho : {0.0, 0.3, 0.6, 0.9}) {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto [x, y] = gen_correlated_gaussian(5000, rho, 100 + seed);
      mean += ksg_mi(x, y) / 10.0;
    }
    EXPECT_GT(mean, prev) << rho;
    prev = mean;
  }
}

TEST(KsgMi, Errors) {
  const auto a = SampleMatrix{{0}, {1}, {2}, {3}, {4}};
  const auto b = SampleMatrix{{0}, {1}, {2}, {3}};
  EXPECT_THROW(ksg_mi(a, b), LengthMismatchError);
  EXPECT_THROW(ksg_mi(SampleMatrix{{0}, {1}, {2}}, SampleMatrix{{0}, {1}, {2}}), InvalidArgument);
  // k = 3 needs four coincident samples for a zero distance.
  const auto dup = SampleMatrix{{0}, {0}, {0}, {0}, {3}};
  EXPECT_THROW(ksg_mi(dup, a), ZeroDistanceError);
  EstimatorConfig c;
  c.jitter = kDefaultJitterScale;
  EXPECT_TRUE(std::isfinite(ksg_mi(dup, a, c)));
  EXPECT_EQ(ksg_mi(dup, a, c), ksg_mi(a, dup, c));
}

TEST(HistogramOracle, ComonotoneApproachesLogBins) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  SampleMatrix x(50000, 1);
  for (auto& v : x.data()) v = u(rng);
  for (std::size_t bins : {4u, 8u, 16u}) {
    EXPECT_NEAR(histogram_mi_oracle(x, x, bins), std::log(static_cast<double>(bins)), 0.01);
  }
}

TEST(HistogramOracle, IndependentShrinksWithN) {
  double prev = 1e9;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u;
    SampleMatrix x(n, 1), y(n, 1);
    for (auto& v : x.data()) v = u(rng);
    for (auto& v : y.data()) v = u(rng);
    const double mi = histogram_mi_oracle(x, y, 10);
    EXPECT_GE(mi, 0.0);
    EXPECT_LT(mi, prev);
    prev = mi;
  }
}

TEST(HistogramOracle, ReflectionSymmetric) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  SampleMatrix x(5000, 1), neg(5000, 1);
  for (std::size_t i = 0; i < 5000; ++i) x(i, 0) = u(rng), neg(i, 0) = -x(i, 0);
  EXPECT_NEAR(histogram_mi_oracle(x, neg, 12), histogram_mi_oracle(x, x, 12), 1e-12);
  EXPECT_THROW(histogram_mi_oracle(x, x, 1), InvalidArgument);
}

TEST(HistogramOracle, AgreesWithKsgOnTrend) {
  double prev_h = -1, prev_k = -1;
  for (double rho : {0.0, 0.5, 0.9}) {
    auto [x, y] = gen_correlated_gaussian(20000, rho, 9);
    const double h = histogram_mi_oracle(x, y, 20);
    const double k = ksg_mi(x, y);
    EXPECT_GT(h, prev_h);
    EXPECT_GT(k, prev_k);
    prev_h = h, prev_k = k;
  }
}
