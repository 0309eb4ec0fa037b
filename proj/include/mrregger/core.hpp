#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mrregger/error.hpp"
#include "mrregger/summation.hpp"

namespace mrregger {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One SNP's exposure and outcome association estimates.
template <typename Scalar>
struct BasicSnpSummary {
  std::string snp_id;
  Scalar gamma_hat{0};      // SNP-exposure association
  Scalar sigma_x{0};        // standard error of gamma_hat
  Scalar big_gamma_hat{0};  // SNP-outcome association
  Scalar sigma_y{0};        // standard error of big_gamma_hat

  bool operator==(const BasicSnpSummary&) const = default;
};

/// Column-oriented collection of independent SNP summaries.
///
/// The columns are immutable after construction; estimators only ever read
/// them, which makes a dataset safe to share across Monte Carlo threads.
template <typename Scalar>
class BasicSummaryDataset {
 public:
  using VectorType = Vector<Scalar>;

  BasicSummaryDataset() = default;

  BasicSummaryDataset(std::vector<std::string> ids, VectorType gamma_hat, VectorType sigma_x,
                      VectorType big_gamma_hat, VectorType sigma_y, std::string provenance = {})
      : ids_(std::move(ids)),
        gamma_hat_(std::move(gamma_hat)),
        sigma_x_(std::move(sigma_x)),
        big_gamma_hat_(std::move(big_gamma_hat)),
        sigma_y_(std::move(sigma_y)),
        provenance_(std::move(provenance)) {
    const auto n = static_cast<Eigen::Index>(ids_.size());
    if (gamma_hat_.size() != n || sigma_x_.size() != n || big_gamma_hat_.size() != n ||
        sigma_y_.size() != n) {
      throw InputError("summary dataset: column lengths differ");
    }
  }

  static BasicSummaryDataset from_records(const std::vector<BasicSnpSummary<Scalar>>& snps,
                                          std::string provenance = {}) {
    const auto n = static_cast<Eigen::Index>(snps.size());
    std::vector<std::string> ids;
    ids.reserve(snps.size());
    VectorType g(n), sx(n), bg(n), sy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = snps[static_cast<std::size_t>(i)];
      ids.push_back(s.snp_id);
      g[i] = s.gamma_hat;
      sx[i] = s.sigma_x;
      bg[i] = s.big_gamma_hat;
      sy[i] = s.sigma_y;
    }
    return BasicSummaryDataset(std::move(ids), std::move(g), std::move(sx), std::move(bg),
                               std::move(sy), std::move(provenance));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(ids_.size()); }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const VectorType& gamma_hat() const { return gamma_hat_; }
  const VectorType& sigma_x() const { return sigma_x_; }
  const VectorType& big_gamma_hat() const { return big_gamma_hat_; }
  const VectorType& sigma_y() const { return sigma_y_; }
  const std::string& provenance() const { return provenance_; }

  BasicSnpSummary<Scalar> record(Eigen::Index i) const {
    return {ids_[static_cast<std::size_t>(i)], gamma_hat_[i], sigma_x_[i], big_gamma_hat_[i],
            sigma_y_[i]};
  }

  /// Inverse outcome variances, the regression weights of every estimator.
  VectorType outcome_weights() const { return sigma_y_.array().square().inverse().matrix(); }

  /// Rows at the given indices, in the given order.
  BasicSummaryDataset subset(const std::vector<Eigen::Index>& rows) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    VectorType g(n), sx(n), bg(n), sy(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = rows[static_cast<std::size_t>(k)];
      ids.push_back(ids_[static_cast<std::size_t>(i)]);
      g[k] = gamma_hat_[i];
      sx[k] = sigma_x_[i];
      bg[k] = big_gamma_hat_[i];
      sy[k] = sigma_y_[i];
    }
    return BasicSummaryDataset(std::move(ids), std::move(g), std::move(sx), std::move(bg),
                               std::move(sy), provenance_);
  }

 private:
  std::vector<std::string> ids_;
  VectorType gamma_hat_;
  VectorType sigma_x_;
  VectorType big_gamma_hat_;
  VectorType sigma_y_;
  std::string provenance_;
};

using SnpSummary = BasicSnpSummary<double>;
using SummaryDataset = BasicSummaryDataset<double>;

/// Simulation truth behind a generated dataset.
struct TrueEffects {
  Vector<double> gamma;
  Vector<double> alpha;
  double beta{0};
  double mu_alpha{0};
};

/// Average instrument strength (kappa), effective sample size (psi) and SNP count.
template <typename Scalar>
struct BasicStrengthDiagnostics {
  Scalar kappa{0};
  Scalar psi{0};
  Eigen::Index p{0};
};

using StrengthDiagnostics = BasicStrengthDiagnostics<double>;

struct ValidationFinding {
  std::string snp_id;
  std::string reason;
};

template <typename Scalar>
std::vector<ValidationFinding> validate_dataset(const BasicSummaryDataset<Scalar>& ds) {
  std::vector<ValidationFinding> findings;
  std::unordered_set<std::string> seen;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const auto& id = ds.ids()[static_cast<std::size_t>(i)];
    if (!seen.insert(id).second) findings.push_back({id, "duplicate id " + id});
    const Scalar g = ds.gamma_hat()[i], sx = ds.sigma_x()[i];
    const Scalar bg = ds.big_gamma_hat()[i], sy = ds.sigma_y()[i];
    if (!std::isfinite(g) || !std::isfinite(sx) || !std::isfinite(bg) || !std::isfinite(sy)) {
      findings.push_back({id, "nonfinite value"});
      continue;
    }
    if (!(sx > 0)) findings.push_back({id, "nonpositive sigma_x"});
    if (!(sy > 0)) findings.push_back({id, "nonpositive sigma_y"});
  }
  return findings;
}

/// kappa = mean(gamma^2 / sigma_x^2), psi = kappa * sqrt(p).
template <typename DerivedG, typename DerivedS>
BasicStrengthDiagnostics<typename DerivedG::Scalar> strength_diagnostics(
    const Eigen::MatrixBase<DerivedG>& gamma, const Eigen::MatrixBase<DerivedS>& sigma_x) {
  using Scalar = typename DerivedG::Scalar;
  if (gamma.size() == 0) throw InputError("empty dataset");
  if (gamma.size() != sigma_x.size()) throw InputError("strength diagnostics: length mismatch");
  if ((sigma_x.array() <= Scalar(0)).any()) {
    throw InputError("strength diagnostics: sigma_x must be positive");
  }
  const auto p = gamma.size();
  const Scalar kappa = csum((gamma.array() / sigma_x.array()).square()) / Scalar(p);
  return {kappa, kappa * std::sqrt(Scalar(p)), p};
}

}  // namespace mrregger
