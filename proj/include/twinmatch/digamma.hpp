#pragma once

#include <cmath>
#include <string>

#include "twinmatch/errors.hpp"

namespace twinmatch {

// Digamma function psi(v) = d/dv ln Gamma(v) for v > 0.
//
// Small arguments are shifted up with psi(v) = psi(v + 1) - 1/v until v >= 10,
// then the asymptotic expansion
//   psi(v) ~ ln v - 1/(2v) - sum_n B_2n / (2n v^2n)
// is evaluated through the v^-16 term, which is below double rounding there.
inline double digamma(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument("digamma: argument must be positive and finite, got " + std::to_string(v));
  }
  double shift = 0.0;
  while (v < 10.0) {
    shift += 1.0 / v;
    v += 1.0;
  }
  const double inv = 1.0 / v;
  const double inv2 = inv * inv;
  // B_2n / (2n) for n = 1..8
  constexpr double c[] = {
      1.0 / 12.0,   -1.0 / 120.0,       1.0 / 252.0,   -1.0 / 240.0,
      1.0 / 132.0,  -691.0 / 32760.0,   1.0 / 12.0,    -3617.0 / 8160.0,
  };
  double series = 0.0;
  for (int n = 7; n >= 0; --n) series = (series + c[n]) * inv2;
  return std::log(v) - 0.5 * inv - series - shift;
}

}  // namespace twinmatch
