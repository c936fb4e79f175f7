#include "rmd/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rmd/errors.hpp"
#include "rmd/kernels/kernels.hpp"
#include "rmd/stats.hpp"

namespace rmd {

void LinearGaussianModel::validate() const {
  const bool finite = std::isfinite(state_const) && std::isfinite(state_coef) &&
                      std::isfinite(state_sd) && std::isfinite(obs_sd) &&
                      std::isfinite(init_mean) && std::isfinite(init_var);
  if (!finite || state_sd < 0.0 || obs_sd < 0.0 || init_var < 0.0)
    throw_error(ErrorCode::invalid_input, "invalid linear-Gaussian model parameters");
}

void ForecastMixture::validate() const {
  if (weights.size() != means.size() || weights.size() != vars.size() || weights.empty())
    throw_error(ErrorCode::invalid_input, "mixture component lengths differ or empty");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0 || vars[i] < 0.0 || !std::isfinite(means[i]))
      throw_error(ErrorCode::invalid_input, "invalid mixture component");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw_error(ErrorCode::invalid_input, "mixture weights do not sum to 1");
}

double ForecastMixture::mean() const {
  double m, v;
  kernels::ops().mixture_moments(weights.data(), means.data(), vars.data(), size(), &m, &v);
  return m;
}

double ForecastMixture::var() const {
  double m, v;
  kernels::ops().mixture_moments(weights.data(), means.data(), vars.data(), size(), &m, &v);
  return v;
}

double ForecastMixture::logpdf(double y) const {
  const std::size_t n = size();
  std::vector<double> logs(n), scratch(n);
  kernels::ops().gauss_logpdf_batch(y, means.data(), vars.data(), logs.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    logs[i] = weights[i] > 0.0 ? logs[i] + std::log(weights[i])
                               : -std::numeric_limits<double>::infinity();
  return kernels::logsumexp(logs.data(), scratch.data(), n);
}

MeasurementMixture MeasurementMixture::scaled_t(double dof, int n_components) {
  if (!(dof > 2.0) || n_components < 1)
    throw_error(ErrorCode::invalid_input, "scaled_t mixture needs dof > 2 and >= 1 component");
  // t_dof = N(0, lambda) with lambda ~ InvGamma(a, a), a = dof/2. Stratify
  // lambda into equal-probability bins and represent each bin by its exact
  // conditional mean, using the identity
  //   E[lambda | l < lambda < u] propto F_{IG(a-1, a)}(u) - F_{IG(a-1, a)}(l)
  // so the mixture matches E[lambda] (hence the t variance) exactly.
  MeasurementMixture mix;
  const auto n = static_cast<std::size_t>(n_components);
  mix.weights.assign(n, 1.0 / n_components);
  mix.var_scales.resize(n);
  const double a = 0.5 * dof;
  const double mean_lambda = a / (a - 1.0);

  auto ig_cdf_am1 = [&](double x) {
    // CDF of InvGamma(a-1, a) at x, via the upper incomplete gamma.
    return boost::math::gamma_q(a - 1.0, a / x);
  };
  double prev_edge_cdf = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double upper_cdf = 1.0;
    if (k + 1 < n) {
      const double p = static_cast<double>(k + 1) / n_components;
      const double edge = 1.0 / gamma_quantile(1.0 - p, a, 1.0 / a);
      upper_cdf = ig_cdf_am1(edge);
    }
    const double cond_mean =
        mean_lambda * (upper_cdf - prev_edge_cdf) * static_cast<double>(n_components);
    mix.var_scales[k] = cond_mean * (dof - 2.0) / dof;
    prev_edge_cdf = upper_cdf;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += mix.weights[k] * mix.var_scales[k];
  for (double& s : mix.var_scales) s /= total;
  return mix;
}

}  // namespace rmd
