#pragma once

#include <cmath>

#include <Eigen/Core>

namespace mrregger {

/// Neumaier-compensated accumulator. Tracks the rounding error of every
/// addition and folds it back in when the value is read.
template <typename Scalar>
class CompensatedSum {
 public:
  CompensatedSum& operator+=(Scalar value) {
    const Scalar t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  Scalar value() const { return sum_ + compensation_; }

 private:
  Scalar sum_{0};
  Scalar compensation_{0};
};

/// Compensated sum of all coefficients of an Eigen expression, in index order.
template <typename Derived>
typename Derived::Scalar csum(const Eigen::DenseBase<Derived>& expr) {
  using Scalar = typename Derived::Scalar;
  const auto& e = expr.derived();
  CompensatedSum<Scalar> acc;
  for (Eigen::Index i = 0; i < e.size(); ++i) acc += e.coeff(i);
  return acc.value();
}

}  // namespace mrregger
