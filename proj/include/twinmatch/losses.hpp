#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "twinmatch/errors.hpp"
#include "twinmatch/matrix.hpp"

namespace twinmatch {

// b x dim projection-head outputs.
using EmbeddingBatch = RowMatrix<struct EmbeddingTag>;

struct LossConfig {
  double temperature = 0.5;
  double lambda = 1.0;

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw InvalidArgument("temperature must be positive");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be non-negative");
  }
};

struct LossWithGrad {
  double loss = 0.0;
  EmbeddingBatch grad_first;   // dL/d(first argument)
  EmbeddingBatch grad_second;  // dL/d(second argument)
};

namespace detail {

inline void check_pair(const EmbeddingBatch& a, const EmbeddingBatch& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw LengthMismatchError(std::string(what) + ": batch shapes differ (" + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()) + ")");
  }
  if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument(std::string(what) + ": empty batch");
  if (auto i = a.first_non_finite(); i != a.data().size()) throw NonFiniteError(what, i);
  if (auto i = b.first_non_finite(); i != b.data().size()) throw NonFiniteError(what, i);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

inline double checked_norm(std::span<const double> v, const char* what) {
  const double n = std::sqrt(dot(v, v));
  if (n == 0.0) throw InvalidArgument(std::string(what) + ": zero-norm embedding");
  return n;
}

}  // namespace detail

// NT-Xent over the 2b views [z1; z2]: every view's positive is its counterpart
// in the other batch, the other 2b-2 views are negatives, similarities are
// cosines divided by the temperature, and the loss is the mean over all 2b
// anchors of the softmax cross-entropy. Gradients are exact.
inline LossWithGrad nt_xent(const EmbeddingBatch& z1, const EmbeddingBatch& z2, double temperature) {
  detail::check_pair(z1, z2, "nt_xent");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const std::size_t b = z1.rows();
  const std::size_t m = 2 * b;
  const std::size_t dim = z1.cols();
  auto view = [&](std::size_t i) { return i < b ? z1.row(i) : z2.row(i - b); };

  std::vector<double> norm(m);
  std::vector<double> unit(m * dim);
  for (std::size_t i = 0; i < m; ++i) {
    auto v = view(i);
    norm[i] = detail::checked_norm(v, "nt_xent");
    for (std::size_t c = 0; c < dim; ++c) unit[i * dim + c] = v[c] / norm[i];
  }
  auto u = [&](std::size_t i) { return std::span<const double>(unit.data() + i * dim, dim); };

  std::vector<double> sim(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double s = detail::dot(u(i), u(j)) / temperature;
      sim[i * m + j] = s;
      sim[j * m + i] = s;
    }
  }

  // dL/dsim as if every ordered (anchor, candidate) similarity were independent.
  std::vector<double> g(m * m, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t pos = a < b ? a + b : a - b;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != a) mx = std::max(mx, sim[a * m + j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != a) denom += std::exp(sim[a * m + j] - mx);
    }
    total += mx + std::log(denom) - sim[a * m + pos];
    for (std::size_t j = 0; j < m; ++j) {
      if (j == a) continue;
      g[a * m + j] = std::exp(sim[a * m + j] - mx) / denom / static_cast<double>(m);
    }
    g[a * m + pos] -= 1.0 / static_cast<double>(m);
  }

  LossWithGrad out{total / static_cast<double>(m), EmbeddingBatch(b, dim), EmbeddingBatch(b, dim)};
  std::vector<double> gu(dim);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(gu.begin(), gu.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double w = (g[i * m + j] + g[j * m + i]) / temperature;
      for (std::size_t c = 0; c < dim; ++c) gu[c] += w * unit[j * dim + c];
    }
    // Back through normalisation: (I - u u^T) / |v|.
    const double proj = detail::dot(gu, u(i));
    auto dst = i < b ? out.grad_first.row(i) : out.grad_second.row(i - b);
    for (std::size_t c = 0; c < dim; ++c) dst[c] = (gu[c] - proj * unit[i * dim + c]) / norm[i];
  }
  return out;
}

// Mean over the batch of -cos(z_i, w_i).
inline LossWithGrad neg_cosine(const EmbeddingBatch& z, const EmbeddingBatch& w) {
  detail::check_pair(z, w, "neg_cosine");
  const std::size_t b = z.rows();
  const std::size_t dim = z.cols();
  const double inv_b = 1.0 / static_cast<double>(b);
  LossWithGrad out{0.0, EmbeddingBatch(b, dim), EmbeddingBatch(b, dim)};
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto zi = z.row(i);
    const auto wi = w.row(i);
    const double zz = detail::dot(zi, zi);
    const double ww = detail::dot(wi, wi);
    if (zz == 0.0 || ww == 0.0) throw InvalidArgument("neg_cosine: zero-norm embedding");
    const double nz = std::sqrt(zz);
    const double nw = std::sqrt(ww);
    const double cos = detail::dot(zi, wi) / std::sqrt(zz * ww);
    total -= cos;
    auto gz = out.grad_first.row(i);
    auto gw = out.grad_second.row(i);
    for (std::size_t c = 0; c < dim; ++c) {
      gz[c] = -inv_b * (wi[c] / (nz * nw) - cos * zi[c] / zz);
      gw[c] = -inv_b * (zi[c] / (nz * nw) - cos * wi[c] / ww);
    }
  }
  out.loss = total * inv_b;
  return out;
}

// View-branch loss plus lambda times twin-branch loss.
inline double combined_loss(double l_view, double l_twin, double lambda) {
  if (!std::isfinite(l_view) || !std::isfinite(l_twin)) throw InvalidArgument("losses must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be non-negative");
  return l_view + lambda * l_twin;
}

}  // namespace twinmatch
