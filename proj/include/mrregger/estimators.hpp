#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mrregger/core.hpp"
#include "mrregger/error.hpp"
#include "mrregger/normal.hpp"
#include "mrregger/selection.hpp"
#include "mrregger/summation.hpp"

namespace mrregger {

enum class Method { kIvw, kDivw, kRivw, kEgger, kDegger, kRegger };

inline constexpr Method kAllMethods[] = {Method::kIvw,   Method::kDivw,   Method::kRivw,
                                         Method::kEgger, Method::kDegger, Method::kRegger};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kIvw: return "IVW";
    case Method::kDivw: return "dIVW";
    case Method::kRivw: return "RIVW";
    case Method::kEgger: return "Egger";
    case Method::kDegger: return "dEgger";
    case Method::kRegger: return "REgger";
  }
  return "?";
}

/// Case-insensitive lookup ("regger", "REgger", ...).
inline Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : kAllMethods) {
    std::string candidate(method_name(m));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return m;
  }
  throw InputError("unknown method '" + std::string(name) + "'");
}

/// Rerandomised methods draw their own selection noise.
inline bool uses_random_selection(Method m) { return m == Method::kRivw || m == Method::kRegger; }

inline bool is_egger_family(Method m) {
  return m == Method::kEgger || m == Method::kDegger || m == Method::kRegger;
}

inline constexpr double kEssGuidance = 20.0;
inline constexpr Eigen::Index kSmallSampleInstruments = 10;

template <typename Scalar>
struct BasicEstimateDiagnostics {
  std::optional<BasicStrengthDiagnostics<Scalar>> strength;
  std::optional<Scalar> ess_rb;  // post-selection psi_lambda (rerandomised methods)
  std::optional<Scalar> attenuation_ratio;
  std::optional<Scalar> i2_gx;
};

template <typename Scalar>
struct BasicEstimateReport {
  Method method{Method::kIvw};
  Scalar beta_hat{0};
  Scalar se_beta{0};
  std::optional<Scalar> mu_alpha_hat;
  std::optional<Scalar> se_mu_alpha;
  std::optional<Scalar> pleiotropy_z;
  std::optional<Scalar> pleiotropy_p;
  Eigen::Index n_snps_used{0};
  BasicEstimateDiagnostics<Scalar> diagnostics;
  std::vector<std::string> warnings;

  Scalar ci_lower() const { return beta_hat - Scalar(1.96) * se_beta; }
  Scalar ci_upper() const { return beta_hat + Scalar(1.96) * se_beta; }
};

using EstimateReport = BasicEstimateReport<double>;

/// Sums entering the Egger-family slope. `theta2_adj` is the denominator
/// actually used: theta2_hat for classical Egger, theta2_hat - delta for the
/// debiased and rerandomised versions.
template <typename Scalar>
struct EggerInternals {
  Scalar s0{0};  // sum of weights
  Scalar sg{0};  // weighted sum of the regressor
  Scalar sy{0};  // weighted sum of the outcome associations
  Scalar theta1{0};
  Scalar theta2_hat{0};
  Scalar delta{0};
  Scalar theta2_adj{0};
};

template <typename Scalar>
struct ResidualTerms {
  Vector<Scalar> xi;
  Vector<Scalar> omega;
};

struct PleiotropyTest {
  double z;
  double p;
};

inline PleiotropyTest pleiotropy_test(double mu_alpha_hat, double v_mu) {
  if (!(v_mu > 0)) throw Error("pleiotropy test: intercept variance must be positive");
  const double z = mu_alpha_hat / std::sqrt(v_mu);
  return {z, std::min(1.0, 2.0 * normal::ccdf(std::abs(z)))};
}

/// Weighted regression sums for regressor `x` with measurement-error variances
/// `v`. The covariance and variance terms use centred sums, which equal the
/// product-of-sums forms algebraically but avoid their cancellation.
template <typename Scalar>
EggerInternals<Scalar> egger_internals(const Vector<Scalar>& w, const Vector<Scalar>& x,
                                       const Vector<Scalar>& y, const Vector<Scalar>& v) {
  EggerInternals<Scalar> in;
  in.s0 = csum(w);
  in.sg = csum(w.cwiseProduct(x));
  in.sy = csum(w.cwiseProduct(y));
  const auto xc = (x.array() - in.sg / in.s0);
  const auto yc = (y.array() - in.sy / in.s0);
  in.theta1 = in.s0 * csum(w.array() * xc * yc);
  in.theta2_hat = in.s0 * csum(w.array() * xc.square());
  in.delta = in.s0 * csum(w.cwiseProduct(v)) - csum(w.array().square() * v.array());
  in.theta2_adj = in.theta2_hat - in.delta;
  return in;
}

/// xi_j = x_j y_j - beta (x_j^2 - v_j) - mu x_j,  omega_j = y_j - beta x_j - mu.
template <typename Scalar>
ResidualTerms<Scalar> residual_terms(const Vector<Scalar>& x, const Vector<Scalar>& y,
                                     const Vector<Scalar>& v, Scalar beta, Scalar mu) {
  ResidualTerms<Scalar> r;
  r.xi = (x.array() * y.array() - beta * (x.array().square() - v.array()) - mu * x.array()).matrix();
  r.omega = (y.array() - beta * x.array() - mu).matrix();
  return r;
}

template <typename Scalar>
struct EggerVariance {
  Scalar v_beta;
  Scalar v_mu;
};

/// Residual-based variances of the debiased Egger slope and intercept.
///
/// u_j = xi_j S0 - omega_j Sg is the per-SNP contribution to the slope's
/// leading stochastic term, so V_beta = sum w_j^2 u_j^2 / theta_adj^2. The
/// intercept mu = (Sy - beta Sg)/S0 has influence
/// w_j [omega_j / S0 - (Sg/S0) u_j / theta_adj], squared and summed for V_mu.
template <typename Scalar>
EggerVariance<Scalar> egger_variance(const Vector<Scalar>& w, const ResidualTerms<Scalar>& r,
                                     const EggerInternals<Scalar>& in) {
  if (!(in.theta2_adj > 0)) throw Error("egger variance: nonpositive denominator");
  const auto u = (r.xi.array() * in.s0 - r.omega.array() * in.sg);
  const auto w2 = w.array().square();
  const Scalar v_beta = csum(w2 * u.square()) / (in.theta2_adj * in.theta2_adj);
  const auto influence = r.omega.array() / in.s0 - (in.sg / in.s0) * u / in.theta2_adj;
  const Scalar v_mu = csum(w2 * influence.square());
  return {v_beta, v_mu};
}

/// Residuals of the two estimating equations solved by the debiased Egger fit:
///   intercept: sum w_j omega_j = 0
///   slope:     sum w_j xi_j - beta sum w_j^2 v_j / S0 = 0
/// The second term is the leave-one-out part of delta; it vanishes when v = 0.
template <typename Scalar>
std::pair<Scalar, Scalar> egger_estimating_equations(const Vector<Scalar>& w,
                                                     const ResidualTerms<Scalar>& r,
                                                     const Vector<Scalar>& v, Scalar beta,
                                                     Scalar s0) {
  const Scalar intercept = csum(w.cwiseProduct(r.omega));
  const Scalar slope = csum(w.cwiseProduct(r.xi)) - beta * csum(w.array().square() * v.array()) / s0;
  return {intercept, slope};
}

namespace detail {

template <typename Scalar>
std::optional<BasicStrengthDiagnostics<Scalar>> try_strength(const Vector<Scalar>& g,
                                                             const Vector<Scalar>& s) {
  if (g.size() == 0 || (s.array() <= Scalar(0)).any()) return std::nullopt;
  return strength_diagnostics(g, s);
}

template <typename Scalar>
Scalar i2_gx(const Vector<Scalar>& gamma_hat, const Vector<Scalar>& sigma_x) {
  if ((sigma_x.array() <= Scalar(0)).any()) return Scalar(1);
  const Vector<Scalar> wx = sigma_x.array().square().inverse().matrix();
  const Scalar mean = csum(wx.cwiseProduct(gamma_hat)) / csum(wx);
  const Scalar q = csum(wx.array() * (gamma_hat.array() - mean).square());
  if (!(q > 0)) return Scalar(0);
  const Scalar df = Scalar(gamma_hat.size() - 1);
  return std::max(Scalar(0), (q - df) / q);
}

template <typename Scalar>
void small_sample_warning(BasicEstimateReport<Scalar>& report) {
  if (report.n_snps_used < kSmallSampleInstruments) {
    report.warnings.push_back("small sample: " + std::to_string(report.n_snps_used) +
                              " instruments; variance theory is asymptotic in the instrument count");
  }
}

/// Shared dIVW/RIVW fit: regressor x with measurement-error variances v.
template <typename Scalar>
BasicEstimateReport<Scalar> debiased_ivw_fit(Method method, const Vector<Scalar>& w,
                                             const Vector<Scalar>& x, const Vector<Scalar>& y,
                                             const Vector<Scalar>& v) {
  const Scalar num = csum(w.array() * x.array() * y.array());
  const Scalar den = csum(w.array() * (x.array().square() - v.array()));
  if (!(den > 0)) throw Error("weak-instrument denominator collapse");
  BasicEstimateReport<Scalar> report;
  report.method = method;
  report.beta_hat = num / den;
  const auto resid = x.array() * y.array() - report.beta_hat * (x.array().square() - v.array());
  const Scalar var = csum(w.array().square() * resid.square()) / (den * den);
  report.se_beta = std::sqrt(var);
  report.n_snps_used = x.size();
  return report;
}

/// Shared dEgger/REgger fit.
template <typename Scalar>
BasicEstimateReport<Scalar> debiased_egger_fit(Method method, const Vector<Scalar>& w,
                                               const Vector<Scalar>& x, const Vector<Scalar>& y,
                                               const Vector<Scalar>& v,
                                               const std::string& collapse_message) {
  const auto in = egger_internals(w, x, y, v);
  if (!(in.theta2_adj > 0)) throw Error(collapse_message);
  BasicEstimateReport<Scalar> report;
  report.method = method;
  report.beta_hat = in.theta1 / in.theta2_adj;
  const Scalar mu = (in.sy - report.beta_hat * in.sg) / in.s0;
  const auto residuals = residual_terms(x, y, v, report.beta_hat, mu);
  const auto var = egger_variance(w, residuals, in);
  report.se_beta = std::sqrt(var.v_beta);
  report.mu_alpha_hat = mu;
  report.se_mu_alpha = std::sqrt(var.v_mu);
  const auto test = pleiotropy_test(double(mu), double(var.v_mu));
  report.pleiotropy_z = Scalar(test.z);
  report.pleiotropy_p = Scalar(test.p);
  report.n_snps_used = x.size();
  report.diagnostics.attenuation_ratio = in.theta2_adj / in.theta2_hat;
  return report;
}

}  // namespace detail

/// Inverse-variance weighted ratio estimate. The fixed-effect standard error is
/// inflated by the residual overdispersion when that exceeds one.
template <typename Scalar>
BasicEstimateReport<Scalar> ivw(const BasicSummaryDataset<Scalar>& ds) {
  if (ds.empty()) throw Error("empty dataset");
  const Vector<Scalar> w = ds.outcome_weights();
  const auto& x = ds.gamma_hat();
  const auto& y = ds.big_gamma_hat();
  const Scalar den = csum(w.array() * x.array().square());
  if (!(den > 0)) throw Error("no instrument signal");
  BasicEstimateReport<Scalar> report;
  report.method = Method::kIvw;
  report.beta_hat = csum(w.array() * x.array() * y.array()) / den;
  Scalar overdispersion = 1;
  if (ds.size() > 1) {
    overdispersion = csum(w.array() * (y - report.beta_hat * x).array().square()) /
                     Scalar(ds.size() - 1);
  }
  report.se_beta = std::sqrt(std::max(Scalar(1), overdispersion) / den);
  report.n_snps_used = ds.size();
  report.diagnostics.strength = detail::try_strength(ds.gamma_hat(), ds.sigma_x());
  return report;
}

/// Debiased IVW: subtracts sigma_x^2 from gamma_hat^2 in the denominator.
template <typename Scalar>
BasicEstimateReport<Scalar> divw(const BasicSummaryDataset<Scalar>& ds) {
  if (ds.empty()) throw Error("empty dataset");
  const Vector<Scalar> v = ds.sigma_x().array().square().matrix();
  auto report = detail::debiased_ivw_fit(Method::kDivw, ds.outcome_weights(), ds.gamma_hat(),
                                         ds.big_gamma_hat(), v);
  report.diagnostics.strength = detail::try_strength(ds.gamma_hat(), ds.sigma_x());
  return report;
}

/// kappa_lambda and psi_lambda from the Rao-Blackwell plug-ins; ess_rb is
/// psi_lambda, the effective sample size reported to users.
template <typename Scalar>
struct PostSelectionDiagnostics {
  Scalar kappa_lambda;
  Scalar psi_lambda;
  Scalar ess_rb;
  Eigen::Index p_lambda;
};

template <typename Scalar>
PostSelectionDiagnostics<Scalar> post_selection_diagnostics(const BasicSelection<Scalar>& sel,
                                                            double lambda) {
  if (sel.empty()) throw Error("empty selection");
  const Vector<Scalar> sd = sel.sigma_rb_sq.array().sqrt().matrix();
  const auto base = strength_diagnostics(sel.gamma_rb, sd);
  const Scalar psi = base.psi / std::max(Scalar(1), Scalar(lambda));
  return {base.kappa, psi, psi, base.p};
}

namespace detail {

template <typename Scalar>
void attach_post_selection(BasicEstimateReport<Scalar>& report, const BasicSelection<Scalar>& sel) {
  const auto d = post_selection_diagnostics(sel, sel.lambda);
  report.diagnostics.strength = BasicStrengthDiagnostics<Scalar>{d.kappa_lambda, d.psi_lambda, d.p_lambda};
  report.diagnostics.ess_rb = d.ess_rb;
  if (d.ess_rb < Scalar(kEssGuidance)) {
    std::ostringstream msg;
    msg << "RB-based effective sample size " << d.ess_rb << " is below " << kEssGuidance
        << "; estimates may be unreliable";
    report.warnings.push_back(msg.str());
  }
}

}  // namespace detail

/// Rerandomised IVW on Rao-Blackwell corrected instruments.
template <typename Scalar>
BasicEstimateReport<Scalar> rivw(const BasicSelection<Scalar>& sel) {
  if (sel.empty()) throw Error("empty selection");
  auto report = detail::debiased_ivw_fit(Method::kRivw, sel.snps.outcome_weights(), sel.gamma_rb,
                                         sel.snps.big_gamma_hat(), sel.sigma_rb_sq);
  detail::attach_post_selection(report, sel);
  return report;
}

/// Classical MR-Egger: weighted regression of Gamma_hat on gamma_hat with an
/// intercept; standard errors scaled by the residual dispersion floored at 1.
template <typename Scalar>
BasicEstimateReport<Scalar> egger(const BasicSummaryDataset<Scalar>& ds) {
  if (ds.size() < 3) throw Error("insufficient instruments: Egger regression needs at least 3");
  const Vector<Scalar> w = ds.outcome_weights();
  const auto& x = ds.gamma_hat();
  const auto& y = ds.big_gamma_hat();
  const Vector<Scalar> zero = Vector<Scalar>::Zero(ds.size());
  const auto in = egger_internals(w, x, y, zero);
  const Scalar sxx = csum(w.array() * x.array().square());
  if (!(in.theta2_hat > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * in.s0 * sxx)) {
    throw Error("degenerate regressor variance");
  }
  BasicEstimateReport<Scalar> report;
  report.method = Method::kEgger;
  report.beta_hat = in.theta1 / in.theta2_hat;
  const Scalar mu = (in.sy - report.beta_hat * in.sg) / in.s0;
  const Scalar rss = csum(w.array() * (y.array() - mu - report.beta_hat * x.array()).square());
  const Scalar dispersion = std::max(Scalar(1), rss / Scalar(ds.size() - 2));
  report.se_beta = std::sqrt(dispersion * in.s0 / in.theta2_hat);
  const Scalar v_mu = dispersion * sxx / in.theta2_hat;
  report.mu_alpha_hat = mu;
  report.se_mu_alpha = std::sqrt(v_mu);
  const auto test = pleiotropy_test(double(mu), double(v_mu));
  report.pleiotropy_z = Scalar(test.z);
  report.pleiotropy_p = Scalar(test.p);
  report.n_snps_used = ds.size();
  report.diagnostics.strength = detail::try_strength(ds.gamma_hat(), ds.sigma_x());
  const Vector<Scalar> v = ds.sigma_x().array().square().matrix();
  const auto corrected = egger_internals(w, x, y, v);
  if (corrected.theta2_adj > 0) {
    report.diagnostics.attenuation_ratio = corrected.theta2_adj / corrected.theta2_hat;
  }
  report.diagnostics.i2_gx = detail::i2_gx(ds.gamma_hat(), ds.sigma_x());
  detail::small_sample_warning(report);
  return report;
}

/// Debiased Egger: removes the measurement-error term delta from the slope's
/// denominator; residual-based standard errors and intercept z-test.
template <typename Scalar>
BasicEstimateReport<Scalar> degger(const BasicSummaryDataset<Scalar>& ds) {
  if (ds.size() < 3) throw Error("insufficient instruments: Egger regression needs at least 3");
  const Vector<Scalar> v = ds.sigma_x().array().square().matrix();
  auto report = detail::debiased_egger_fit(Method::kDegger, ds.outcome_weights(), ds.gamma_hat(),
                                           ds.big_gamma_hat(), v,
                                           "weak-instrument denominator collapse");
  report.diagnostics.strength = detail::try_strength(ds.gamma_hat(), ds.sigma_x());
  report.diagnostics.i2_gx = detail::i2_gx(ds.gamma_hat(), ds.sigma_x());
  detail::small_sample_warning(report);
  return report;
}

/// Rerandomised Egger on the Rao-Blackwell corrected selected instruments.
template <typename Scalar>
BasicEstimateReport<Scalar> regger(const BasicSelection<Scalar>& sel) {
  if (sel.size() < 3) {
    throw Error("insufficient selected instruments: " + std::to_string(sel.size()) +
                " selected, at least 3 required");
  }
  const Vector<Scalar> w = sel.snps.outcome_weights();
  const auto in = egger_internals(w, sel.gamma_rb, sel.snps.big_gamma_hat(), sel.sigma_rb_sq);
  if (!(in.theta2_adj > 0)) {
    std::ostringstream msg;
    msg << "post-selection denominator collapse (psi_lambda="
        << post_selection_diagnostics(sel, sel.lambda).psi_lambda << ")";
    throw Error(msg.str());
  }
  auto report = detail::debiased_egger_fit(Method::kRegger, w, sel.gamma_rb,
                                           sel.snps.big_gamma_hat(), sel.sigma_rb_sq, "");
  report.diagnostics.i2_gx = detail::i2_gx(sel.snps.gamma_hat(), sel.snps.sigma_x());
  detail::attach_post_selection(report, sel);
  detail::small_sample_warning(report);
  return report;
}

struct AttenuationDiagnostics {
  double ratio;
  double i2_gx;
};

/// Plug-in estimate of the Egger attenuation factor theta2 / (theta2 + delta)
/// together with I^2_GX (Cochran-Q based, inverse sigma_x^2 weights).
template <typename Scalar>
AttenuationDiagnostics attenuation_diagnostics(const BasicSummaryDataset<Scalar>& ds) {
  if (ds.size() < 3) throw Error("insufficient instruments: Egger regression needs at least 3");
  const Vector<Scalar> v = ds.sigma_x().array().square().matrix();
  const auto in = egger_internals(ds.outcome_weights(), ds.gamma_hat(), ds.big_gamma_hat(), v);
  if (!(in.theta2_adj > 0)) throw Error("weak-instrument denominator collapse");
  return {double(in.theta2_adj / (in.theta2_adj + in.delta)),
          double(detail::i2_gx(ds.gamma_hat(), ds.sigma_x()))};
}

}  // namespace mrregger
