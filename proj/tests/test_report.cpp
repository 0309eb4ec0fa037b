#include <doctest.h>

#include "mrregger/report.hpp"

using namespace mrregger;

namespace {

EstimateReport sample() {
  EstimateReport r;
  r.method = Method::kRegger;
  r.beta_hat = 0.2;
  r.se_beta = 0.05;
  r.mu_alpha_hat = 0.004;
  r.se_mu_alpha = 0.001;
  r.pleiotropy_z = 4.0;
  r.pleiotropy_p = 6.334e-5;
  r.n_snps_used = 120;
  r.diagnostics.strength = StrengthDiagnostics{3.5, 38.3, 120};
  r.diagnostics.ess_rb = 38.3;
  r.warnings.push_back("note");
  return r;
}

}  // namespace

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(format_optional(std::nullopt) == "NA");
}

TEST_CASE("JSON keeps a fixed key order") {
  const auto j = to_json(sample());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"method", "beta_hat", "se_beta", "ci_lower", "ci_upper",
                                         "mu_alpha_hat", "se_mu_alpha", "pleiotropy_z", "pleiotropy_p",
                                         "n_snps_used", "diagnostics", "warnings"});
  CHECK(j["method"] == "REgger");
  CHECK(j["ci_lower"].get<double>() == doctest::Approx(0.2 - 1.96 * 0.05));
  CHECK(j["diagnostics"]["attenuation_ratio"].is_null());
  CHECK(to_json(sample()).dump() == j.dump());

  EstimateReport plain;
  plain.beta_hat = 1;
  plain.se_beta = 1;
  CHECK(to_json(plain)["mu_alpha_hat"].is_null());
}

TEST_CASE("key=value block and TSV row") {
  const auto kv = to_key_value(sample());
  CHECK(kv.rfind("method=REgger\nbeta_hat=0.2\nse_beta=0.05\n", 0) == 0);
  CHECK(kv.find("attenuation_ratio=NA\n") != std::string::npos);
  CHECK(kv.find("warning=note\n") != std::string::npos);

  const auto header = estimate_tsv_header();
  const auto row = to_tsv_row(sample());
  CHECK(std::count(header.begin(), header.end(), '\t') == std::count(row.begin(), row.end(), '\t'));
  CHECK(row.rfind("REgger\t0.2\t0.05\t", 0) == 0);
  CHECK(row.back() == '\n');
}

TEST_CASE("simulation tables") {
  sim::SimConfig c;
  c.p = 2000;
  c.pi1 = c.pi2 = c.pi3 = 0.1;
  c.reps = 3;
  const auto plans = sim::default_plans({Method::kDivw, Method::kRegger});
  std::vector<SweepPoint> points{{c, sim::run_study(c, plans)}};
  const auto metrics = metrics_tsv(points, plans);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
  const auto reps = reps_tsv(points, plans);
  CHECK(std::count(reps.begin(), reps.end(), '\n') == 1 + 3 * 2);
  const auto plot = plot_tsv(points, plans);
  CHECK(plot.rfind("h2_x\tmethod\tmetric\tvalue\n", 0) == 0);
  CHECK(plot.find("\tREgger\tcp\t") != std::string::npos);

  c.beta = 0;
  c.reps = 1;
  std::vector<SweepPoint> null_points{{c, sim::run_study(c, plans)}};
  const auto null_metrics = metrics_tsv(null_points, plans);
  CHECK(null_metrics.find("\tabsolute\t") != std::string::npos);
  CHECK(plot_tsv(null_points, plans).find("\tbias\t") != std::string::npos);
  CHECK(plot_tsv(null_points, plans).find("\tsd\t") == std::string::npos);
}
