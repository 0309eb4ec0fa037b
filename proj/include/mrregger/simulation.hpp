#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrregger/core.hpp"
#include "mrregger/estimators.hpp"
#include "mrregger/selection.hpp"

namespace mrregger::sim {

/// Mixture data-generating process for summary statistics.
///
/// Each SNP falls in one of four components: exposure-only (pi1), exposure and
/// pleiotropic (pi2), pleiotropic only (pi3) or null. Causal exposure effects are
/// N(mu_gamma, eps_x_sq), pleiotropic effects N(mu_alpha, eps_alpha_sq). The
/// estimates add N(0, 1/n_x) and N(0, 1/n_y) noise.
struct SimConfig {
  std::int64_t p{20000};
  double n_x{200000};
  double n_y{200000};
  double beta{0.2};
  double mu_gamma{0.001};
  double mu_alpha{0.005};
  double eps_x_sq{1e-4};
  double eps_alpha_sq{1e-4};
  double pi1{0.01};
  double pi2{0.01};
  double pi3{0.01};
  double flip_fraction{0};
  std::uint64_t seed{1};
  std::int64_t reps{200};

  void validate() const;
  double sigma_x() const;
  double sigma_y() const;
};

std::pair<SummaryDataset, TrueEffects> generate(const SimConfig& cfg, std::int64_t rep_index);

struct Heritability {
  double h2_x;
  double h2_y;
};

Heritability heritability(const SimConfig& cfg);

/// Method together with its instrument-selection rule. For rerandomised
/// methods `lambda`/`eta` drive the noisy selection; for the others `lambda`
/// is a deterministic |z| threshold (0 disables it).
struct MethodPlan {
  Method method;
  double lambda{0};
  double eta{kDefaultEta};
};

/// The conventional comparison: rerandomised methods at p < 5e-5, the rest at
/// the genome-wide threshold.
std::vector<MethodPlan> default_plans(const std::vector<Method>& methods,
                                      double random_p_threshold = kDefaultRandomPThreshold,
                                      double eta = kDefaultEta,
                                      double fixed_lambda = kGenomeWideLambda);

struct RepResult {
  std::int64_t rep{0};
  std::size_t plan{0};  // index into the plan list
  Method method{Method::kIvw};
  bool ok{false};
  std::string error;
  double beta_hat{0};
  double se{0};
  bool covered{false};
  std::optional<double> mu_alpha_hat;
  std::optional<double> pleiotropy_p;
  std::optional<double> ess_rb;
  std::int64_t n_selected{0};
};

/// Runs every plan on one generated replicate. Selection noise is keyed by
/// (seed, rep) so the rerandomised methods share the draw within a replicate.
std::vector<RepResult> run_replicate(const SimConfig& cfg, std::int64_t rep,
                                     const std::vector<MethodPlan>& plans);

struct MetricsReport {
  Method method{Method::kIvw};
  std::int64_t reps_ok{0};
  std::int64_t reps_failed{0};
  bool flagged{false};          // more than 10% of replicates failed
  bool bias_is_absolute{false}; // beta == 0: relative bias replaced by bias
  double mean_estimate{0};
  double relative_bias{0};
  std::optional<double> sd;     // missing with fewer than two replicates
  double mean_se{0};
  double mse{0};
  double cp{0};
  std::optional<double> rejection_rate;  // pleiotropy test at 0.05
  std::optional<double> mean_ess_rb;
  double mean_selected{0};
};

/// Aggregates the successful replicates in `results` (all assumed to come from
/// one plan). Failed replicates are counted, never imputed.
MetricsReport summarize(Method method, double beta, const std::vector<RepResult>& results);

struct StudyResult {
  std::vector<MetricsReport> metrics;  // one per plan, in plan order
  std::vector<RepResult> reps;         // rep-major, plan order within rep
};

/// Seeded Monte Carlo study. Replicates run on `threads` workers; results are
/// stored by index so output does not depend on the thread count.
StudyResult run_study(const SimConfig& cfg, const std::vector<MethodPlan>& plans,
                      unsigned threads = 1);

/// Seed used for the selection noise of replicate `rep`.
std::uint64_t selection_seed(const SimConfig& cfg, std::int64_t rep);

}  // namespace mrregger::sim
