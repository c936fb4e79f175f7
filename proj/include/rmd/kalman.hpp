#pragma once

#include <optional>

#include "rmd/model.hpp"
#include "rmd/time_series.hpp"

namespace rmd {

struct KalmanStep {
  GaussianBelief posterior;
  double loglik_increment = 0.0;
};

// One time advance: predict from `belief` through the transition, then (if an
// observation is supplied) condition on it. The log-likelihood increment is
// the log predictive density of the observation, 0 for a predict-only step.
KalmanStep kalman_step(const GaussianBelief& belief, const LinearGaussianModel& model,
                       std::optional<double> obs);

// Filters the whole series, skipping observations whose inclusion flag is 0
// (predict-only steps). Beliefs are recorded at every t; loglik sums the
// increments of included times only.
FilterOutput filter_series(const LinearGaussianModel& model, const TimeSeries& series,
                           const InclusionPath& path);

// Exact Gaussian forecast moments from a filtered belief: the per-step
// predictive of y_{t+1..t+h} plus the h-step average (1/h) sum_j y_{t+j},
// whose variance accounts for cross-horizon state covariance.
struct Forecast {
  std::vector<double> step_means;
  std::vector<double> step_vars;
  double avg_mean = 0.0;
  double avg_var = 0.0;
};

Forecast forecast(const LinearGaussianModel& model, const GaussianBelief& belief, int horizon);

}  // namespace rmd
