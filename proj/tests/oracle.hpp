#pragma once

// Exact-arithmetic reference computations. Every double input converts to a
// rational without rounding, so these values are the true results of the
// formulas on the given data.

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mrregger/core.hpp"

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

inline std::vector<Rational> exact(const mrregger::Vector<double>& v) {
  std::vector<Rational> out;
  for (double x : v) out.emplace_back(x);
  return out;
}

struct Sums {
  Rational s0, sg, sy, sxx, sxy, swv, sw2v;
};

/// Plain (uncentred) weighted sums.
inline Sums sums(const mrregger::Vector<double>& w, const mrregger::Vector<double>& x,
                 const mrregger::Vector<double>& y, const mrregger::Vector<double>& v) {
  const auto W = exact(w), X = exact(x), Y = exact(y), V = exact(v);
  Sums s;
  for (std::size_t j = 0; j < W.size(); ++j) {
    s.s0 += W[j];
    s.sg += W[j] * X[j];
    s.sy += W[j] * Y[j];
    s.sxx += W[j] * X[j] * X[j];
    s.sxy += W[j] * X[j] * Y[j];
    s.swv += W[j] * V[j];
    s.sw2v += W[j] * W[j] * V[j];
  }
  return s;
}

inline Rational theta1(const Sums& s) { return s.s0 * s.sxy - s.sg * s.sy; }
inline Rational theta2(const Sums& s) { return s.s0 * s.sxx - s.sg * s.sg; }
inline Rational delta(const Sums& s) { return s.s0 * s.swv - s.sw2v; }

/// Weighted least squares of y on (1, x): solves the 2x2 normal equations
///   [S0  Sg ] [mu  ]   [Sy ]
///   [Sg  Sxx] [beta] = [Sxy]
/// by Cramer's rule.
inline std::pair<Rational, Rational> wls(const Sums& s) {
  const Rational det = s.s0 * s.sxx - s.sg * s.sg;
  const Rational mu = (s.sy * s.sxx - s.sg * s.sxy) / det;
  const Rational beta = (s.s0 * s.sxy - s.sg * s.sy) / det;
  return {beta, mu};
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace oracle
