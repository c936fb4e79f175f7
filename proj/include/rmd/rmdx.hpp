#pragma once

#include <cstdint>
#include <optional>

#include "rmd/mle.hpp"

namespace rmd {

// Fixed-size inclusion-path sampler: each path has exactly round(beta*T)
// observations marked informative, drawn uniformly without replacement and
// kept in original time order.
struct PathSampler {
  std::size_t length = 0;
  double beta = 1.0;
  int n_paths = 1;
  std::uint64_t seed = 0;
};

// Nearest integer to beta*length, ties away from zero. Throws invalid_input
// when the result is empty (beta too small for the sample).
std::size_t fixed_inclusion_count(std::size_t length, double beta);

std::vector<InclusionPath> sample_paths(const PathSampler& sampler);

// All length-choose-count fixed-size paths in lexicographic order (test and
// oracle sizes only).
std::vector<InclusionPath> enumerate_fixed_size_paths(std::size_t length, std::size_t count);

enum class SigmaScale { log_scale, natural };

struct RmdxConfig {
  double beta = 1.0;
  int n_paths = 200;
  int horizon_max = 12;
  std::uint64_t seed = 0;
  int threads = 1;
  // Scale on which the positive (sigma) parameters are averaged across paths.
  SigmaScale sigma_scale = SigmaScale::log_scale;
  // When set, per-path estimation is skipped and every path is filtered at
  // this family theta (used by oracle comparisons and known-theta studies).
  std::optional<std::vector<double>> fixed_theta;
  // When set, overrides sampling entirely (e.g. exhaustive enumeration).
  std::optional<std::vector<InclusionPath>> explicit_paths;
  bool keep_per_path = false;
  OptimizerSettings optimizer;
};

struct RmdxResult {
  std::vector<double> theta_bar;
  std::vector<double> filtered_mean_bar;      // per t
  std::vector<double> point_step;             // per horizon h: aggregated y_{T+h}
  std::vector<double> point_avg;              // per horizon h: aggregated h-quarter average
  std::vector<ForecastMixture> step_mixture;  // per horizon, equal weight across paths
  std::vector<ForecastMixture> avg_mixture;
  int n_paths_used = 0;
  int n_failed = 0;
  std::vector<MleFit> per_path;  // populated when keep_per_path
};

// Exogenous randomization: estimate the family independently on each sampled
// inclusion path, then aggregate parameters, filtered means, and forecasts
// with equal weights across paths. Paths whose fit fails to converge are
// dropped with a warning count; estimation fails outright when fewer than 10%
// of paths survive. At beta = 1 the result is exactly the single full-data
// fit. Deterministic for a given seed regardless of thread count.
RmdxResult rmd_x_estimate(const ModelFamily& family, const TimeSeries& series,
                          const RmdxConfig& config);

}  // namespace rmd
