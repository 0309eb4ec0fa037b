#include "mrregger/simulation.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "mrregger/rng.hpp"

namespace mrregger::sim {

void SimConfig::validate() const {
  if (p <= 0) throw InputError("simulation: p must be positive");
  if (!(n_x > 0) || !(n_y > 0)) throw InputError("simulation: sample sizes must be positive");
  if (reps <= 0) throw InputError("simulation: reps must be positive");
  for (double pi : {pi1, pi2, pi3}) {
    if (!(pi >= 0 && pi <= 1)) throw InputError("simulation: mixture weights must lie in [0, 1]");
  }
  if (pi1 + pi2 + pi3 > 1 + 1e-12) throw InputError("simulation: mixture weights sum above 1");
  if (!(eps_x_sq >= 0) || !(eps_alpha_sq >= 0)) {
    throw InputError("simulation: effect variances must be nonnegative");
  }
  if (!(flip_fraction >= 0 && flip_fraction <= 1)) {
    throw InputError("simulation: flip_fraction must lie in [0, 1]");
  }
}

double SimConfig::sigma_x() const { return 1.0 / std::sqrt(n_x); }
double SimConfig::sigma_y() const { return 1.0 / std::sqrt(n_y); }

std::pair<SummaryDataset, TrueEffects> generate(const SimConfig& cfg, std::int64_t rep_index) {
  cfg.validate();
  const auto p = static_cast<Eigen::Index>(cfg.p);
  const double sx = cfg.sigma_x();
  const double sy = cfg.sigma_y();
  const double sd_gamma = std::sqrt(cfg.eps_x_sq);
  const double sd_alpha = std::sqrt(cfg.eps_alpha_sq);
  const std::uint64_t rep_seed =
      derive_seed(cfg.seed, StreamDomain::kGenerate, static_cast<std::uint64_t>(rep_index));

  std::vector<std::string> ids(static_cast<std::size_t>(p));
  Vector<double> g_hat(p), bg_hat(p);
  TrueEffects truth;
  truth.gamma.resize(p);
  truth.alpha.resize(p);
  truth.beta = cfg.beta;
  truth.mu_alpha = cfg.mu_alpha;

  for (Eigen::Index j = 0; j < p; ++j) {
    // Fixed draw order per SNP: component, gamma, alpha, flip, noise.
    StreamEngine engine(rep_seed, static_cast<std::uint64_t>(j));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u = engine.uniform();
    const bool exposure = u < cfg.pi1 + cfg.pi2;
    const bool pleiotropic = u >= cfg.pi1 && u < cfg.pi1 + cfg.pi2 + cfg.pi3;
    const double zg = normal(engine);
    const double za = normal(engine);
    const bool flip = engine.uniform() < cfg.flip_fraction;
    const double ex = normal(engine);
    const double ey = normal(engine);

    double gamma = exposure ? cfg.mu_gamma + sd_gamma * zg : 0.0;
    double alpha = pleiotropic ? cfg.mu_alpha + sd_alpha * za : 0.0;
    double gh = gamma + sx * ex;
    double bgh = cfg.beta * gamma + alpha + sy * ey;
    if (flip) {
      gamma = -gamma;
      alpha = -alpha;
      gh = -gh;
      bgh = -bgh;
    }
    truth.gamma[j] = gamma;
    truth.alpha[j] = alpha;
    g_hat[j] = gh;
    bg_hat[j] = bgh;
    ids[static_cast<std::size_t>(j)] = "snp" + std::to_string(j + 1);
  }
  SummaryDataset ds(std::move(ids), std::move(g_hat), Vector<double>::Constant(p, sx),
                    std::move(bg_hat), Vector<double>::Constant(p, sy),
                    "simulated seed=" + std::to_string(cfg.seed) + " rep=" + std::to_string(rep_index));
  return {std::move(ds), std::move(truth)};
}

Heritability heritability(const SimConfig& cfg) {
  const double p = static_cast<double>(cfg.p);
  const double h2_x = p * (cfg.pi1 + cfg.pi2) * (cfg.mu_gamma * cfg.mu_gamma + cfg.eps_x_sq);
  const double h2_y = cfg.beta * cfg.beta * h2_x +
                      p * (cfg.pi2 + cfg.pi3) * (cfg.mu_alpha * cfg.mu_alpha + cfg.eps_alpha_sq);
  return {h2_x, h2_y};
}

std::vector<MethodPlan> default_plans(const std::vector<Method>& methods, double random_p_threshold,
                                      double eta, double fixed_lambda) {
  const double random_lambda = pvalue_to_lambda(random_p_threshold);
  std::vector<MethodPlan> plans;
  for (Method m : methods) {
    plans.push_back({m, uses_random_selection(m) ? random_lambda : fixed_lambda, eta});
  }
  return plans;
}

std::uint64_t selection_seed(const SimConfig& cfg, std::int64_t rep) {
  return derive_seed(cfg.seed, StreamDomain::kSelection, static_cast<std::uint64_t>(rep));
}

namespace {

EstimateReport estimate_plan(const SummaryDataset& ds, const MethodPlan& plan, std::uint64_t seed,
                             std::int64_t& n_selected) {
  if (uses_random_selection(plan.method)) {
    const auto sel = select_random(ds, SelectionConfig{plan.lambda, plan.eta, seed});
    n_selected = sel.size();
    return plan.method == Method::kRivw ? rivw(sel) : regger(sel);
  }
  const auto used = select_fixed(ds, plan.lambda);
  n_selected = used.size();
  switch (plan.method) {
    case Method::kIvw: return ivw(used);
    case Method::kDivw: return divw(used);
    case Method::kEgger: return egger(used);
    default: return degger(used);
  }
}

}  // namespace

std::vector<RepResult> run_replicate(const SimConfig& cfg, std::int64_t rep,
                                     const std::vector<MethodPlan>& plans) {
  const auto [ds, truth] = generate(cfg, rep);
  const std::uint64_t seed = selection_seed(cfg, rep);
  std::vector<RepResult> out;
  out.reserve(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const auto& plan = plans[k];
    RepResult r;
    r.rep = rep;
    r.plan = k;
    r.method = plan.method;
    try {
      const auto report = estimate_plan(ds, plan, seed, r.n_selected);
      r.ok = std::isfinite(report.beta_hat) && std::isfinite(report.se_beta);
      if (!r.ok) r.error = "nonfinite estimate";
      r.beta_hat = report.beta_hat;
      r.se = report.se_beta;
      r.covered = report.ci_lower() <= cfg.beta && cfg.beta <= report.ci_upper();
      r.mu_alpha_hat = report.mu_alpha_hat;
      r.pleiotropy_p = report.pleiotropy_p;
      r.ess_rb = report.diagnostics.ess_rb;
    } catch (const Error& e) {
      r.ok = false;
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

MetricsReport summarize(Method method, double beta, const std::vector<RepResult>& results) {
  MetricsReport m;
  m.method = method;
  CompensatedSum<double> sum_est, sum_se, sum_sq_err, sum_sel, sum_ess;
  std::int64_t covered = 0, rejected = 0, with_test = 0, with_ess = 0;
  std::vector<double> estimates;
  for (const auto& r : results) {
    if (!r.ok) {
      ++m.reps_failed;
      continue;
    }
    ++m.reps_ok;
    estimates.push_back(r.beta_hat);
    sum_est += r.beta_hat;
    sum_se += r.se;
    sum_sq_err += (r.beta_hat - beta) * (r.beta_hat - beta);
    sum_sel += static_cast<double>(r.n_selected);
    covered += r.covered ? 1 : 0;
    if (r.pleiotropy_p) {
      ++with_test;
      rejected += *r.pleiotropy_p < 0.05 ? 1 : 0;
    }
    if (r.ess_rb) {
      ++with_ess;
      sum_ess += *r.ess_rb;
    }
  }
  const std::int64_t total = m.reps_ok + m.reps_failed;
  m.flagged = total > 0 && 10 * m.reps_failed > total;
  m.bias_is_absolute = beta == 0;
  if (m.reps_ok == 0) return m;
  const double n = static_cast<double>(m.reps_ok);
  m.mean_estimate = sum_est.value() / n;
  const double bias = m.mean_estimate - beta;
  m.relative_bias = m.bias_is_absolute ? bias : bias / beta;
  if (m.reps_ok > 1) {
    CompensatedSum<double> ss;
    for (double e : estimates) ss += (e - m.mean_estimate) * (e - m.mean_estimate);
    m.sd = std::sqrt(ss.value() / (n - 1));
  }
  m.mean_se = sum_se.value() / n;
  m.mse = sum_sq_err.value() / n;
  m.cp = static_cast<double>(covered) / n;
  if (with_test > 0) m.rejection_rate = static_cast<double>(rejected) / static_cast<double>(with_test);
  if (with_ess > 0) m.mean_ess_rb = sum_ess.value() / static_cast<double>(with_ess);
  m.mean_selected = sum_sel.value() / n;
  return m;
}

StudyResult run_study(const SimConfig& cfg, const std::vector<MethodPlan>& plans, unsigned threads) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<RepResult>> per_rep(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reps; i = next++) {
      per_rep[i] = run_replicate(cfg, static_cast<std::int64_t>(i), plans);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  StudyResult result;
  result.reps.reserve(reps * plans.size());
  for (auto& rep : per_rep) {
    for (auto& r : rep) result.reps.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < plans.size(); ++k) {
    std::vector<RepResult> mine;
    for (const auto& r : result.reps) {
      if (r.plan == k) mine.push_back(r);
    }
    result.metrics.push_back(summarize(plans[k].method, cfg.beta, mine));
  }
  return result;
}

}  // namespace mrregger::sim
