#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "twinmatch/errors.hpp"
#include "twinmatch/matrix.hpp"

namespace twinmatch {

// L-infinity distance between two equal-length rows.
inline double chebyshev(std::span<const double> a, std::span<const double> b) noexcept {
  double d = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) d = std::max(d, std::abs(a[c] - b[c]));
  return d;
}

namespace detail {

inline void require_neighbors(std::size_t n, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (n <= k) {
    throw InvalidArgument("need more than k=" + std::to_string(k) + " samples, got " +
                          std::to_string(n));
  }
}

}  // namespace detail

// k-th smallest L-infinity distance from row i to every other row, by exhaustive
// scan. Duplicated rows count at distance zero.
inline double chebyshev_kth_distance(const SampleMatrix& samples, std::size_t i, std::size_t k) {
  const std::size_t n = samples.rows();
  detail::require_neighbors(n, k);
  if (i >= n) throw InvalidArgument("row index " + std::to_string(i) + " out of range");
  std::vector<double> dist;
  dist.reserve(n - 1);
  const auto qi = samples.row(i);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) dist.push_back(chebyshev(qi, samples.row(j)));
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  return dist[k - 1];
}

inline std::vector<double> kth_distances_brute(const SampleMatrix& samples, std::size_t k) {
  const std::size_t n = samples.rows();
  detail::require_neighbors(n, k);
  std::vector<double> out(n);
  std::vector<double> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = samples.row(i);
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist[m++] = chebyshev(qi, samples.row(j));
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    out[i] = dist[k - 1];
  }
  return out;
}

// Static k-d tree over the rows of a sample matrix for exact k-th neighbour
// distances under the max-norm. Distances are computed with the same
// `chebyshev` as the exhaustive scan, so results are bit-identical to it.
class ChebyshevKdTree {
 public:
  explicit ChebyshevKdTree(const SampleMatrix& samples, std::size_t leaf_size = 12)
      : samples_(&samples), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    order_.resize(samples.rows());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty()) {
      nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
      build(0, order_.size());
    }
  }

  // k-th smallest distance from row i to the other rows.
  double kth_distance(std::size_t i, std::size_t k) const {
    Heap heap;
    search(0, samples_->row(i), i, k, heap);
    return heap.top();
  }

 private:
  struct Node {
    std::size_t lo, hi;            // range in order_
    std::size_t left = 0, right = 0;  // child node ids, 0 for leaf
    std::size_t split_dim = 0;
    double split = 0.0;
  };
  using Heap = std::priority_queue<double>;

  std::size_t build(std::size_t lo, std::size_t hi) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({lo, hi});
    if (hi - lo <= leaf_size_) return id;

    const std::size_t d = samples_->cols();
    std::size_t best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t c = 0; c < d; ++c) {
      double mn = (*samples_)(order_[lo], c), mx = mn;
      for (std::size_t p = lo + 1; p < hi; ++p) {
        const double v = (*samples_)(order_[p], c);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) best_spread = mx - mn, best_dim = c;
    }
    if (best_spread <= 0.0) return id;  // all points coincide: keep as a leaf

    const std::size_t mid = lo + (hi - lo) / 2;
    auto first = order_.begin();
    std::nth_element(first + static_cast<std::ptrdiff_t>(lo), first + static_cast<std::ptrdiff_t>(mid),
                     first + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                       return (*samples_)(a, best_dim) < (*samples_)(b, best_dim);
                     });
    const double split = (*samples_)(order_[mid], best_dim);
    nodes_[id].split_dim = best_dim;
    nodes_[id].split = split;
    const std::size_t l = build(lo, mid);
    const std::size_t r = build(mid, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Left subtree holds coordinates <= split, right subtree >= split.
  void search(std::size_t id, std::span<const double> q, std::size_t self, std::size_t k,
              Heap& heap) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t p = node.lo; p < node.hi; ++p) {
        const std::size_t j = order_[p];
        if (j == self) continue;
        const double dist = chebyshev(q, samples_->row(j));
        if (heap.size() < k) {
          heap.push(dist);
        } else if (dist < heap.top()) {
          heap.pop();
          heap.push(dist);
        }
      }
      return;
    }
    const double delta = q[node.split_dim] - node.split;
    const std::size_t near = delta < 0.0 ? node.left : node.right;
    const std::size_t far = delta < 0.0 ? node.right : node.left;
    search(near, q, self, k, heap);
    // Points on the far side are at least |delta| away; ones at exactly the
    // current k-th distance cannot change its value.
    if (heap.size() < k || std::abs(delta) < heap.top()) search(far, q, self, k, heap);
  }

  const SampleMatrix* samples_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

// k-th neighbour distance of every row. Small inputs use the exhaustive scan,
// larger ones the k-d tree; both give identical values.
inline std::vector<double> kth_distances(const SampleMatrix& samples, std::size_t k) {
  const std::size_t n = samples.rows();
  detail::require_neighbors(n, k);
  if (n < 256) return kth_distances_brute(samples, k);
  ChebyshevKdTree tree(samples);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = tree.kth_distance(i, k);
  return out;
}

}  // namespace twinmatch
