#pragma once

#include <map>
#include <span>
#include <string>

#include "rmd/rmdn.hpp"
#include "rmd/rmdx.hpp"

namespace rmd::eval {

// One out-of-sample forecast: made at `origin` (using observations up to and
// including that index) and targeting the average of the next `horizon`
// observations.
struct ForecastRecord {
  std::size_t origin = 0;
  int horizon = 0;
  double point = 0.0;
  double pred_var = 0.0;     // variance of the predictive of the h-average
  double log_density = 0.0;  // log predictive density at the realized average
  double realized = 0.0;
  bool has_realized = false;
};

double msfe(std::span<const ForecastRecord> records, int horizon);

struct WlrResult {
  double wlr_hat = 0.0;
  double sigma_hat = 0.0;
  double t_stat = 0.0;
  double p_right = 0.0;
  std::size_t n = 0;
};

// Average log predictive-density difference (uniform weights) with a
// Newey-West long-run standard error, bandwidth floor(4 * (n/100)^(2/9)).
// t = sqrt(n) * mean / sigma; p_right is the standard normal CDF of t. Zero
// variance with a nonzero mean reports t = +-inf.
WlrResult wlr_test(std::span<const double> logdens_a, std::span<const double> logdens_b);

// Argmin of past MSFE over the beta grid at the given horizon; ties break
// toward the smaller beta. history[i] holds completed past records for
// grid[i]. Returns warm_start when no beta has a completed forecast yet.
double select_beta(std::span<const double> grid,
                   const std::vector<std::vector<ForecastRecord>>& history, int horizon,
                   double warm_start = 0.5);

enum class Estimator { none, rmd_x, rmd_n };
Estimator parse_estimator(std::string_view name);
std::string estimator_name(Estimator e);

std::vector<double> default_beta_grid();

struct EvalConfig {
  ModelFamily family;
  Estimator estimator = Estimator::none;
  std::vector<double> beta_grid = default_beta_grid();
  std::vector<int> horizons{1, 4, 8, 12};
  std::size_t eval_start = 0;  // first forecast origin (index into the series)
  double warm_start_beta = 0.5;
  std::uint64_t seed = 0;
  int threads = 1;
  RmdxConfig rmdx;          // per-path budgets (beta/seed overwritten per run)
  RmdnConfig rmdn;          // particle budgets (seed overwritten per run)
  OptimizerSettings optimizer;  // estimator none
};

struct ReportRow {
  std::string model;
  std::string estimator;
  std::string beta_strategy;  // "fixed:<b>", "Q<h>", or "beta=1"
  int horizon = 0;
  double msfe_value = 0.0;
  double wlr = 0.0, wlr_se = 0.0, wlr_t = 0.0, wlr_p = 0.0;
  bool has_wlr = false;  // false on the baseline row
  std::size_t n_forecasts = 0;
};

struct BetaChoice {
  std::size_t origin = 0;
  int horizon = 0;  // the optimizing criterion
  double beta = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<BetaChoice> beta_schedule;
  std::vector<double> beta_grid;
  // Per-beta record sets (fixed strategies), aligned with beta_grid; used by
  // plots and tests.
  std::vector<std::vector<ForecastRecord>> records_per_beta;
  // Full-sample per-t filtered means / smoothed inclusion, aligned with
  // plot_betas (the working grid including the beta = 1 baseline); populated
  // by the rmd-n estimator, whose evaluation pass ends at T.
  std::vector<double> plot_betas;
  std::vector<std::vector<double>> filtered_means_per_beta;
  std::vector<std::vector<double>> smoothed_per_beta;
  int n_failed_origins = 0;
  int n_origin_runs = 0;

  std::string to_csv() const;
  std::string to_json() const;
};

// Recursive out-of-sample evaluation with no look-ahead: at every origin from
// eval_start on, forecasts at all horizons are produced for each beta in the
// grid (refit from scratch per origin for MLE/RMD-X; one sequential Bayesian
// pass per beta for RMD-N), then per-horizon strategies pick beta by past
// MSFE. Emits fixed-beta rows, Q-strategy rows, and the beta = 1 baseline,
// with WLR comparisons against beta = 1.
EvalReport run_recursive_evaluation(const TimeSeries& series, const EvalConfig& config);

}  // namespace rmd::eval
