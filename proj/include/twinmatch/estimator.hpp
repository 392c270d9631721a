#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twinmatch/digamma.hpp"
#include "twinmatch/errors.hpp"
#include "twinmatch/knn.hpp"
#include "twinmatch/matrix.hpp"

namespace twinmatch {

enum class MiVariant {
  // H(X) + H(Y) - H(X,Y), each entropy with its dimension factor.
  Dimensioned3kl,
  // psi(n) - psi(k) + mean log(eps_x * eps_y / eps_p^2), no dimension factors.
  PaperEq1,
};

inline std::string_view to_string(MiVariant v) {
  return v == MiVariant::Dimensioned3kl ? "dimensioned-3kl" : "paper-eq1";
}

inline MiVariant parse_variant(std::string_view s) {
  if (s == "dimensioned-3kl") return MiVariant::Dimensioned3kl;
  if (s == "paper-eq1") return MiVariant::PaperEq1;
  throw InvalidArgument("unknown estimator variant '" + std::string(s) + "'");
}

struct EstimatorConfig {
  std::size_t k = 3;
  MiVariant variant = MiVariant::Dimensioned3kl;
  // Relative jitter magnitude (times per-axis standard deviation); off when empty.
  std::optional<double> jitter;
  std::uint64_t jitter_seed = 0;
  std::size_t min_samples = 4;

  static EstimatorConfig with_k(std::size_t k) {
    EstimatorConfig cfg;
    cfg.k = k;
    cfg.min_samples = k + 1;
    return cfg;
  }

  void validate() const {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (min_samples < k + 1) {
      throw InvalidArgument("min_samples (" + std::to_string(min_samples) + ") must be at least k+1");
    }
    if (jitter && !(*jitter > 0.0 && std::isfinite(*jitter))) {
      throw InvalidArgument("jitter scale must be a positive finite number");
    }
  }
};

inline constexpr double kDefaultJitterScale = 1e-10;

namespace detail {

// Sum in ascending order so the result does not depend on row order.
inline double sorted_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

inline bool has_zero(std::span<const double> eps) {
  return std::any_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; });
}

inline std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h = 1469598103934665603ull) {
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline double entropy_from_distances(std::size_t n, std::size_t d, std::size_t k,
                                     const std::vector<double>& eps) {
  std::vector<double> logs(eps.size());
  std::transform(eps.begin(), eps.end(), logs.begin(), [](double e) { return std::log(e); });
  const double dd = static_cast<double>(d);
  return digamma(static_cast<double>(n)) - digamma(static_cast<double>(k)) +
         dd * std::numbers::ln2 + dd / static_cast<double>(n) * sorted_sum(std::move(logs));
}

inline void check_samples(const SampleMatrix& s, const EstimatorConfig& cfg, const char* what) {
  require_finite_samples(s, what);
  if (s.rows() < cfg.min_samples) {
    throw InvalidArgument(std::string(what) + ": too few samples (" + std::to_string(s.rows()) +
                          " < min_samples " + std::to_string(cfg.min_samples) + ")");
  }
}

}  // namespace detail

// Adds seeded Gaussian noise of `scale` x (per-axis standard deviation) to every
// entry. The stream is seeded from `seed` and the matrix contents, so equal
// inputs get equal perturbations regardless of argument order elsewhere.
// Axes with zero spread use unit deviation; the amplitude is floored at a few
// ulps of the axis magnitude so the perturbation never rounds away.
inline SampleMatrix apply_jitter(const SampleMatrix& samples, double scale, std::uint64_t seed) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  std::vector<double> amp(d);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean += samples(i, c);
      max_abs = std::max(max_abs, std::abs(samples(i, c)));
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (samples(i, c) - mean) * (samples(i, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    amp[c] = std::max(scale * (sd > 0.0 ? sd : 1.0),
                      16.0 * max_abs * std::numeric_limits<double>::epsilon());
  }
  std::mt19937_64 rng(detail::fnv1a(samples.data(), seed ^ 0x9e3779b97f4a7c15ull));
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleMatrix out = samples;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) out(i, c) += amp[c] * normal(rng);
  }
  return out;
}

// Kozachenko-Leonenko differential entropy (nats) under the max-norm:
//   H = psi(n) - psi(k) + d ln 2 + (d/n) sum_i ln eps_i
// where eps_i is the distance from sample i to its k-th neighbour.
inline double kl_entropy(const SampleMatrix& samples, const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_samples(samples, cfg, "kl_entropy");
  auto eps = kth_distances(samples, cfg.k);
  if (detail::has_zero(eps)) {
    if (!cfg.jitter) throw ZeroDistanceError();
    eps = kth_distances(apply_jitter(samples, *cfg.jitter, cfg.jitter_seed), cfg.k);
    if (detail::has_zero(eps)) throw ZeroDistanceError();
  }
  return detail::entropy_from_distances(samples.rows(), samples.cols(), cfg.k, eps);
}

// Combines precomputed k-th neighbour distances of X, Y and the joint (X,Y)
// into the configured MI variant. All distances must be positive.
inline double mi_from_distances(std::size_t n, std::size_t dx, std::size_t dy,
                                const EstimatorConfig& cfg, const std::vector<double>& ex,
                                const std::vector<double>& ey, const std::vector<double>& ep) {
  if (cfg.variant == MiVariant::Dimensioned3kl) {
    const double hx = detail::entropy_from_distances(n, dx, cfg.k, ex);
    const double hy = detail::entropy_from_distances(n, dy, cfg.k, ey);
    const double hp = detail::entropy_from_distances(n, dx + dy, cfg.k, ep);
    return (hx + hy) - hp;
  }
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = std::log(ex[i] * ey[i] / (ep[i] * ep[i]));
  return digamma(static_cast<double>(n)) - digamma(static_cast<double>(cfg.k)) +
         detail::sorted_sum(std::move(terms)) / static_cast<double>(n);
}

// k-NN ("3KL") mutual information estimate in nats between paired samples.
inline double ksg_mi(const SampleMatrix& x, const SampleMatrix& y, const EstimatorConfig& cfg = {}) {
  cfg.validate();
  if (x.rows() != y.rows()) {
    throw LengthMismatchError("sample count mismatch: " + std::to_string(x.rows()) + " vs " +
                              std::to_string(y.rows()));
  }
  detail::check_samples(x, cfg, "ksg_mi(x)");
  detail::check_samples(y, cfg, "ksg_mi(y)");

  auto ex = kth_distances(x, cfg.k);
  auto ey = kth_distances(y, cfg.k);
  auto ep = kth_distances(hstack(x, y), cfg.k);
  if (detail::has_zero(ex) || detail::has_zero(ey) || detail::has_zero(ep)) {
    if (!cfg.jitter) throw ZeroDistanceError();
    const auto jx = apply_jitter(x, *cfg.jitter, cfg.jitter_seed);
    const auto jy = apply_jitter(y, *cfg.jitter, cfg.jitter_seed);
    ex = kth_distances(jx, cfg.k);
    ey = kth_distances(jy, cfg.k);
    ep = kth_distances(hstack(jx, jy), cfg.k);
    if (detail::has_zero(ex) || detail::has_zero(ey) || detail::has_zero(ep)) {
      throw ZeroDistanceError();
    }
  }

  return mi_from_distances(x.rows(), x.cols(), y.cols(), cfg, ex, ey, ep);
}

// Plug-in mutual information of an equal-width 2-D histogram. Biased upward
// and only meant as an independent cross-check of trends.
inline double histogram_mi_oracle(const SampleMatrix& x, const SampleMatrix& y, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("histogram oracle needs at least 2 bins");
  if (x.cols() != 1 || y.cols() != 1) throw InvalidArgument("histogram oracle takes 1-D samples");
  if (x.rows() != y.rows()) throw LengthMismatchError("sample count mismatch");
  require_finite_samples(x, "histogram_mi_oracle(x)");
  require_finite_samples(y, "histogram_mi_oracle(y)");
  const std::size_t n = x.rows();
  if (n < bins) throw InvalidArgument("histogram oracle needs at least `bins` samples");

  auto binner = [bins](const SampleMatrix& m) {
    const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
    const double min = *lo, width = (*hi - *lo) / static_cast<double>(bins);
    std::vector<std::size_t> idx(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      std::size_t b = width > 0.0 ? static_cast<std::size_t>((m(i, 0) - min) / width) : 0;
      idx[i] = std::min(b, bins - 1);
    }
    return idx;
  };
  const auto bx = binner(x);
  const auto by = binner(y);
  std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[bx[i] * bins + by[i]] += 1.0;
    px[bx[i]] += 1.0;
    py[by[i]] += 1.0;
  }
  const double nn = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double c = joint[a * bins + b];
      if (c > 0.0) mi += c / nn * std::log(c * nn / (px[a] * py[b]));
    }
  }
  return std::max(mi, 0.0);
}

}  // namespace twinmatch
