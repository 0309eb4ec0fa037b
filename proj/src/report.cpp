#include "mrregger/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace mrregger {

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : "NA"; }

namespace {

nlohmann::ordered_json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

struct Field {
  const char* name;
  std::optional<double> value;
};

std::vector<Field> flatten(const EstimateReport& r) {
  const auto& d = r.diagnostics;
  std::optional<double> kappa, psi;
  if (d.strength) {
    kappa = d.strength->kappa;
    psi = d.strength->psi;
  }
  return {{"beta_hat", r.beta_hat},
          {"se_beta", r.se_beta},
          {"ci_lower", r.ci_lower()},
          {"ci_upper", r.ci_upper()},
          {"mu_alpha_hat", r.mu_alpha_hat},
          {"se_mu_alpha", r.se_mu_alpha},
          {"pleiotropy_z", r.pleiotropy_z},
          {"pleiotropy_p", r.pleiotropy_p},
          {"n_snps_used", static_cast<double>(r.n_snps_used)},
          {"kappa", kappa},
          {"psi", psi},
          {"ess_rb", d.ess_rb},
          {"attenuation_ratio", d.attenuation_ratio},
          {"i2_gx", d.i2_gx}};
}

}  // namespace

nlohmann::ordered_json to_json(const EstimateReport& r) {
  nlohmann::ordered_json j;
  j["method"] = std::string(method_name(r.method));
  j["beta_hat"] = r.beta_hat;
  j["se_beta"] = r.se_beta;
  j["ci_lower"] = r.ci_lower();
  j["ci_upper"] = r.ci_upper();
  j["mu_alpha_hat"] = optional_json(r.mu_alpha_hat);
  j["se_mu_alpha"] = optional_json(r.se_mu_alpha);
  j["pleiotropy_z"] = optional_json(r.pleiotropy_z);
  j["pleiotropy_p"] = optional_json(r.pleiotropy_p);
  j["n_snps_used"] = r.n_snps_used;
  nlohmann::ordered_json d;
  const auto& diag = r.diagnostics;
  if (diag.strength) {
    d["kappa"] = diag.strength->kappa;
    d["psi"] = diag.strength->psi;
    d["p"] = diag.strength->p;
  } else {
    d["kappa"] = nullptr;
    d["psi"] = nullptr;
    d["p"] = nullptr;
  }
  d["ess_rb"] = optional_json(diag.ess_rb);
  d["attenuation_ratio"] = optional_json(diag.attenuation_ratio);
  d["i2_gx"] = optional_json(diag.i2_gx);
  j["diagnostics"] = d;
  j["warnings"] = r.warnings;
  return j;
}

std::string to_key_value(const EstimateReport& r) {
  std::ostringstream out;
  out << "method=" << method_name(r.method) << '\n';
  for (const auto& f : flatten(r)) out << f.name << '=' << format_optional(f.value) << '\n';
  for (const auto& w : r.warnings) out << "warning=" << w << '\n';
  return out.str();
}

std::string estimate_tsv_header() {
  std::string h = "method";
  for (const auto& f : flatten(EstimateReport{})) h += std::string("\t") + f.name;
  return h + '\n';
}

std::string to_tsv_row(const EstimateReport& r) {
  std::string row(method_name(r.method));
  for (const auto& f : flatten(r)) row += '\t' + format_optional(f.value);
  return row + '\n';
}

std::string metrics_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans) {
  std::ostringstream out;
  out << "point\tp\tpi1\tpi2\tpi3\teps_x_sq\tbeta\tmu_alpha\th2_x\th2_y\tmethod\tlambda\teta\treps_ok\t"
         "reps_failed\tflagged\tbias_kind\tmean_estimate\tbias\tsd\tmean_se\tmse\tcp\trejection_rate\t"
         "mean_ess_rb\tmean_selected\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i].cfg;
    const auto h2 = sim::heritability(c);
    for (std::size_t k = 0; k < plans.size(); ++k) {
      const auto& m = points[i].result.metrics[k];
      out << i << '\t' << c.p << '\t' << format_number(c.pi1) << '\t' << format_number(c.pi2) << '\t'
          << format_number(c.pi3) << '\t' << format_number(c.eps_x_sq) << '\t' << format_number(c.beta)
          << '\t' << format_number(c.mu_alpha) << '\t' << format_number(h2.h2_x) << '\t'
          << format_number(h2.h2_y) << '\t' << method_name(m.method) << '\t'
          << format_number(plans[k].lambda) << '\t' << format_number(plans[k].eta) << '\t'
          << m.reps_ok << '\t' << m.reps_failed << '\t' << (m.flagged ? 1 : 0) << '\t'
          << (m.bias_is_absolute ? "absolute" : "relative") << '\t' << format_number(m.mean_estimate)
          << '\t' << format_number(m.relative_bias) << '\t' << (m.sd ? format_number(*m.sd) : "")
          << '\t' << format_number(m.mean_se) << '\t' << format_number(m.mse) << '\t'
          << format_number(m.cp) << '\t' << format_optional(m.rejection_rate) << '\t'
          << format_optional(m.mean_ess_rb) << '\t' << format_number(m.mean_selected) << '\n';
    }
  }
  return out.str();
}

std::string reps_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans) {
  std::ostringstream out;
  out << "point\trep\tmethod\tok\tbeta_hat\tse\tcovered\tmu_alpha_hat\tpleiotropy_p\tess_rb\tn_selected\terror\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& r : points[i].result.reps) {
      out << i << '\t' << r.rep << '\t' << method_name(plans[r.plan].method) << '\t' << (r.ok ? 1 : 0)
          << '\t' << (r.ok ? format_number(r.beta_hat) : "NA") << '\t'
          << (r.ok ? format_number(r.se) : "NA") << '\t' << (r.covered ? 1 : 0) << '\t'
          << format_optional(r.mu_alpha_hat) << '\t' << format_optional(r.pleiotropy_p) << '\t'
          << format_optional(r.ess_rb) << '\t' << r.n_selected << '\t' << r.error << '\n';
    }
  }
  return out.str();
}

std::string plot_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans) {
  std::ostringstream out;
  out << "h2_x\tmethod\tmetric\tvalue\n";
  for (const auto& point : points) {
    const double h2 = sim::heritability(point.cfg).h2_x;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      const auto& m = point.result.metrics[k];
      const std::pair<const char*, std::optional<double>> rows[] = {
          {m.bias_is_absolute ? "bias" : "relative_bias", m.relative_bias},
          {"sd", m.sd},
          {"se", m.mean_se},
          {"mse", m.mse},
          {"cp", m.cp},
          {"rejection_rate", m.rejection_rate}};
      for (const auto& [name, value] : rows) {
        if (!value) continue;
        out << format_number(h2) << '\t' << method_name(m.method) << '\t' << name << '\t'
            << format_number(*value) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace mrregger
