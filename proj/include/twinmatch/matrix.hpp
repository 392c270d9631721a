#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "twinmatch/errors.hpp"

namespace twinmatch {

// Dense row-major real matrix. The tag keeps sample matrices and embedding
// batches from being mixed up at call sites.
template <class Tag>
class RowMatrix {
 public:
  RowMatrix() = default;

  RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  RowMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw LengthMismatchError("matrix storage has " + std::to_string(values_.size()) +
                                " values, expected " + std::to_string(rows_ * cols_));
    }
  }

  RowMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw LengthMismatchError("ragged matrix literal");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  // One column from a flat sequence of scalars.
  static RowMatrix column(std::span<const double> xs) {
    return RowMatrix(xs.size(), 1, std::vector<double>(xs.begin(), xs.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return values_; }
  std::span<double> data() noexcept { return values_; }

  bool operator==(const RowMatrix&) const = default;

  // Returns the flat index of the first non-finite entry, or size() if none.
  std::size_t first_non_finite() const noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) return i;
    }
    return values_.size();
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// n x d observations; n = sample count, d = dimension.
using SampleMatrix = RowMatrix<struct SampleTag>;

// Side-by-side concatenation [x | y] of two sample matrices with equal n.
inline SampleMatrix hstack(const SampleMatrix& x, const SampleMatrix& y) {
  if (x.rows() != y.rows()) {
    throw LengthMismatchError("sample count mismatch: " + std::to_string(x.rows()) + " vs " +
                              std::to_string(y.rows()));
  }
  SampleMatrix out(x.rows(), x.cols() + y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    auto a = x.row(i);
    auto b = y.row(i);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

inline void require_finite_samples(const SampleMatrix& m, const char* what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidArgument(std::string(what) + ": sample matrix must be non-empty");
  }
  if (auto i = m.first_non_finite(); i != m.data().size()) {
    throw NonFiniteError(std::string(what) + ": non-finite sample", i);
  }
}

}  // namespace twinmatch
