#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "mrregger/error.hpp"

namespace mrregger::normal {

template <typename Scalar>
Scalar pdf(Scalar x) {
  return std::exp(Scalar(-0.5) * x * x) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// Lower-tail probability Phi(x).
template <typename Scalar>
Scalar cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// Upper-tail probability 1 - Phi(x), computed without cancellation.
template <typename Scalar>
Scalar ccdf(Scalar x) {
  return Scalar(0.5) * std::erfc(x / std::numbers::sqrt2_v<Scalar>);
}

/// Solves ccdf(x) = q for x. Newton iteration on log ccdf, safeguarded by a
/// bisection bracket, so tiny tail probabilities keep full relative accuracy.
template <typename Scalar>
Scalar upper_quantile(Scalar q) {
  if (!(q > Scalar(0) && q < Scalar(1))) {
    throw Error("normal quantile: probability must lie in (0, 1)");
  }
  if (q == Scalar(0.5)) return Scalar(0);
  if (q > Scalar(0.5)) return -upper_quantile(Scalar(1) - q);

  Scalar lo = 0;
  Scalar hi = 40;
  const Scalar target = std::log(q);
  Scalar x = std::sqrt(Scalar(-2) * target);  // tail-asymptotic start
  if (!(x > lo && x < hi)) x = Scalar(0.5) * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const Scalar tail = ccdf(x);
    const Scalar g = std::log(tail) - target;
    if (g > 0) {
      lo = x;  // tail too heavy: move right
    } else {
      hi = x;
    }
    // d/dx log ccdf(x) = -pdf(x)/ccdf(x)
    const Scalar step = g * tail / pdf(x);
    Scalar next = x + step;
    if (!(next > lo && next < hi)) next = Scalar(0.5) * (lo + hi);
    if (std::abs(next - x) <= std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

/// Inverse of cdf.
template <typename Scalar>
Scalar quantile(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1))) {
    throw Error("normal quantile: probability must lie in (0, 1)");
  }
  return -upper_quantile(p);
}

}  // namespace mrregger::normal
