#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mrregger/core.hpp"
#include "mrregger/error.hpp"
#include "mrregger/normal.hpp"
#include "mrregger/rng.hpp"

namespace mrregger {

inline constexpr double kDefaultEta = 0.5;
inline constexpr double kDefaultRandomPThreshold = 5e-5;
inline constexpr double kGenomeWideLambda = 5.4513;

/// Threshold lambda, pseudo-noise SD eta and the seed of the selection noise.
struct SelectionConfig {
  double lambda{0};
  double eta{kDefaultEta};
  std::uint64_t seed{0};

  void validate() const {
    if (!(eta > 0) || !std::isfinite(eta)) throw InputError("selection: eta must be positive");
    if (!(lambda >= 0)) throw InputError("selection: lambda must be nonnegative");
  }
};

/// Two-sided normal threshold matching a p-value cutoff.
inline double pvalue_to_lambda(double p_threshold) {
  if (!(p_threshold > 0 && p_threshold < 1)) {
    throw InputError("p-value threshold must lie in (0, 1)");
  }
  return normal::upper_quantile(p_threshold / 2);
}

template <typename Scalar>
struct RaoBlackwellGamma {
  Scalar gamma_rb;
  Scalar a_plus;
  Scalar a_minus;
};

namespace detail {

template <typename Scalar>
struct RbTerms {
  Scalar a_plus, a_minus, phi_plus, phi_minus, denom;
};

template <typename Scalar>
RbTerms<Scalar> rb_terms(Scalar gamma_hat, Scalar sigma_x, Scalar lambda, Scalar eta) {
  const Scalar centre = -gamma_hat / (sigma_x * eta);
  const Scalar shift = lambda / eta;
  RbTerms<Scalar> t{centre + shift, centre - shift, 0, 0, 0};
  t.phi_plus = normal::pdf(t.a_plus);
  t.phi_minus = normal::pdf(t.a_minus);
  // Probability of selection given gamma_hat; upper tail taken directly.
  t.denom = normal::ccdf(t.a_plus) + normal::cdf(t.a_minus);
  if (!(t.denom >= Scalar(1e-300))) throw Error("selection probability underflow");
  return t;
}

}  // namespace detail

/// Rao-Blackwellised exposure association: unbiased for gamma conditional on
/// selection under the randomised rule |gamma_hat/sigma_x + Z| > lambda.
template <typename Scalar>
RaoBlackwellGamma<Scalar> rao_blackwell_gamma(Scalar gamma_hat, Scalar sigma_x,
                                              const SelectionConfig& cfg) {
  const auto t = detail::rb_terms<Scalar>(gamma_hat, sigma_x, Scalar(cfg.lambda), Scalar(cfg.eta));
  const Scalar correction = (sigma_x / Scalar(cfg.eta)) * (t.phi_plus - t.phi_minus) / t.denom;
  return {gamma_hat - correction, t.a_plus, t.a_minus};
}

/// Variance estimate of rao_blackwell_gamma.
template <typename Scalar>
Scalar rao_blackwell_variance(Scalar gamma_hat, Scalar sigma_x, const SelectionConfig& cfg) {
  const Scalar eta = Scalar(cfg.eta);
  const auto t = detail::rb_terms<Scalar>(gamma_hat, sigma_x, Scalar(cfg.lambda), eta);
  const Scalar eta2 = eta * eta;
  const Scalar ratio = (t.phi_plus - t.phi_minus) / t.denom;
  const Scalar bracket = Scalar(1) -
                         (t.a_plus * t.phi_plus - t.a_minus * t.phi_minus) / (eta2 * t.denom) +
                         ratio * ratio / eta2;
  const Scalar v = sigma_x * sigma_x * bracket;
  if (!(v > 0)) throw Error("degenerate RB variance");
  return v;
}

template <typename Scalar>
struct BasicRbRecord {
  BasicSnpSummary<Scalar> snp;
  Scalar z_noise;
  Scalar gamma_rb;
  Scalar sigma_rb_sq;
  Scalar a_plus;
  Scalar a_minus;
};

/// Instruments surviving randomised selection together with their
/// Rao-Blackwell quantities. `snps` holds the selected rows of the source
/// dataset in their original order; `source_index` maps back into it.
template <typename Scalar>
struct BasicSelection {
  BasicSummaryDataset<Scalar> snps;
  std::vector<Eigen::Index> source_index;
  Vector<Scalar> z_noise;
  Vector<Scalar> gamma_rb;
  Vector<Scalar> sigma_rb_sq;
  Vector<Scalar> a_plus;
  Vector<Scalar> a_minus;
  double lambda{0};
  double eta{kDefaultEta};

  Eigen::Index size() const { return snps.size(); }
  bool empty() const { return snps.empty(); }

  BasicRbRecord<Scalar> record(Eigen::Index i) const {
    return {snps.record(i), z_noise[i], gamma_rb[i], sigma_rb_sq[i], a_plus[i], a_minus[i]};
  }
};

using RbRecord = BasicRbRecord<double>;
using Selection = BasicSelection<double>;

/// Pseudo-noise Z_j ~ N(0, eta^2) for SNP `index`; the stream depends only on
/// (seed, index).
inline double selection_noise(std::uint64_t seed, std::uint64_t index, double eta) {
  StreamEngine engine(derive_seed(seed, StreamDomain::kSelection, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  return eta * normal(engine);
}

/// Randomised instrument selection with Rao-Blackwell correction of the
/// selected exposure associations. Ties at |t| == lambda are not selected.
template <typename Scalar>
BasicSelection<Scalar> select_random(const BasicSummaryDataset<Scalar>& ds,
                                     const SelectionConfig& cfg) {
  cfg.validate();
  std::vector<Eigen::Index> rows;
  std::vector<Scalar> noise;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const Scalar z = Scalar(selection_noise(cfg.seed, static_cast<std::uint64_t>(i), cfg.eta));
    const Scalar t = ds.gamma_hat()[i] / ds.sigma_x()[i] + z;
    if (std::abs(t) > Scalar(cfg.lambda)) {
      rows.push_back(i);
      noise.push_back(z);
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  BasicSelection<Scalar> sel;
  sel.snps = ds.subset(rows);
  sel.source_index = rows;
  sel.z_noise = Eigen::Map<const Vector<Scalar>>(noise.data(), n);
  sel.gamma_rb.resize(n);
  sel.sigma_rb_sq.resize(n);
  sel.a_plus.resize(n);
  sel.a_minus.resize(n);
  sel.lambda = cfg.lambda;
  sel.eta = cfg.eta;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar g = sel.snps.gamma_hat()[k];
    const Scalar s = sel.snps.sigma_x()[k];
    try {
      const auto rb = rao_blackwell_gamma(g, s, cfg);
      sel.gamma_rb[k] = rb.gamma_rb;
      sel.a_plus[k] = rb.a_plus;
      sel.a_minus[k] = rb.a_minus;
      sel.sigma_rb_sq[k] = rao_blackwell_variance(g, s, cfg);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at SNP " + sel.snps.ids()[static_cast<std::size_t>(k)]);
    }
  }
  return sel;
}

/// Deterministic |gamma_hat/sigma_x| > lambda filter used by fixed-threshold
/// baselines. lambda <= 0 keeps everything.
template <typename Scalar>
BasicSummaryDataset<Scalar> select_fixed(const BasicSummaryDataset<Scalar>& ds, double lambda) {
  if (!(lambda > 0)) return ds;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (std::abs(ds.gamma_hat()[i] / ds.sigma_x()[i]) > Scalar(lambda)) rows.push_back(i);
  }
  return ds.subset(rows);
}

}  // namespace mrregger
