#pragma once

#include <cstddef>
#include <vector>

namespace rmd {

// Scalar linear-Gaussian state-space model:
//   x_t = state_const + state_coef * x_{t-1} + N(0, state_sd^2)
//   y_t = x_t + N(0, obs_sd^2)
// with x_0 ~ N(init_mean, init_var). The local-level (random-walk trend)
// instance has state_const = 0 and state_coef = 1 exactly.
struct LinearGaussianModel {
  double state_const = 0.0;
  double state_coef = 1.0;
  double state_sd = 1.0;
  double obs_sd = 1.0;
  double init_mean = 0.0;
  double init_var = 100.0;

  void validate() const;  // throws invalid_input on negative sds/var or non-finite fields
};

struct GaussianBelief {
  double mean = 0.0;
  double var = 0.0;
};

struct FilterOutput {
  std::vector<GaussianBelief> filtered;  // posterior belief at every t
  double loglik = 0.0;                   // sum over included observations only
};

// Finite Gaussian mixture used for predictive densities.
struct ForecastMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> vars;

  std::size_t size() const noexcept { return weights.size(); }
  void validate() const;  // equal lengths, weights >= 0 summing to 1 within 1e-12
  double mean() const;
  double var() const;
  double logpdf(double y) const;
};

// Zero-mean measurement-noise mixture: noise variance is obs_sd^2 scaled by
// var_scales[k] with probability weights[k]. A plain Gaussian measurement is
// the single-component case.
struct MeasurementMixture {
  std::vector<double> weights{1.0};
  std::vector<double> var_scales{1.0};

  std::size_t size() const noexcept { return weights.size(); }
  bool is_gaussian() const noexcept { return weights.size() == 1; }

  static MeasurementMixture gaussian() { return {}; }
  // Discretization of the scaled Student-t with dof > 2 and unit total
  // variance as an n-component Gaussian scale mixture (equal-probability
  // quadrature over the inverse-gamma mixing variable).
  static MeasurementMixture scaled_t(double dof, int n_components = 10);
};

}  // namespace rmd
