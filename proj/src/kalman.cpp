#include "rmd/kalman.hpp"

#include <cmath>

#include "rmd/errors.hpp"
#include "rmd/stats.hpp"

namespace rmd {

namespace {
constexpr double kVarFloor = 1e-10;  // guards divisions in degenerate updates
}

KalmanStep kalman_step(const GaussianBelief& belief, const LinearGaussianModel& model,
                       std::optional<double> obs) {
  model.validate();
  if (!std::isfinite(belief.mean) || !std::isfinite(belief.var) || belief.var < 0.0)
    throw_error(ErrorCode::invalid_input, "kalman_step: invalid belief");
  if (obs && !std::isfinite(*obs))
    throw_error(ErrorCode::invalid_input, "kalman_step: non-finite observation");

  const double a = model.state_coef;
  const double pred_mean = model.state_const + a * belief.mean;
  const double pred_var = a * a * belief.var + model.state_sd * model.state_sd;
  if (!obs) return {{pred_mean, pred_var}, 0.0};

  const double obs_var = model.obs_sd * model.obs_sd;
  double s = pred_var + obs_var;
  if (s <= 0.0)
    throw_error(ErrorCode::degenerate_model,
                "kalman_step: zero predictive variance with an observation present");
  if (s < kVarFloor) s = kVarFloor;

  const double increment = norm_logpdf(*obs, pred_mean, s);
  const double gain = pred_var / s;
  const double post_mean = pred_mean + gain * (*obs - pred_mean);
  double post_var = pred_var * (1.0 - gain);
  if (post_var < 0.0) post_var = 0.0;
  return {{post_mean, post_var}, increment};
}

FilterOutput filter_series(const LinearGaussianModel& model, const TimeSeries& series,
                           const InclusionPath& path) {
  model.validate();
  series.validate();
  if (path.size() != series.size())
    throw_error(ErrorCode::invalid_input, "filter_series: path/series length mismatch");

  FilterOutput out;
  out.filtered.reserve(series.size());
  GaussianBelief belief{model.init_mean, model.init_var};
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto step = kalman_step(
        belief, model, path[t] ? std::optional<double>(series.values[t]) : std::nullopt);
    belief = step.posterior;
    out.filtered.push_back(belief);
    out.loglik += step.loglik_increment;
  }
  return out;
}

Forecast forecast(const LinearGaussianModel& model, const GaussianBelief& belief, int horizon) {
  model.validate();
  if (horizon < 1) throw_error(ErrorCode::invalid_input, "forecast: horizon must be >= 1");
  if (!std::isfinite(belief.mean) || !std::isfinite(belief.var) || belief.var < 0.0)
    throw_error(ErrorCode::invalid_input, "forecast: invalid belief");

  const double a = model.state_coef;
  const double q = model.state_sd * model.state_sd;
  const double r = model.obs_sd * model.obs_sd;

  Forecast out;
  out.step_means.reserve(static_cast<std::size_t>(horizon));
  out.step_vars.reserve(static_cast<std::size_t>(horizon));
  std::vector<double> state_vars(static_cast<std::size_t>(horizon));
  double m = belief.mean, p = belief.var;
  double mean_sum = 0.0, state_var_sum = 0.0;
  for (int j = 0; j < horizon; ++j) {
    m = model.state_const + a * m;
    p = a * a * p + q;
    out.step_means.push_back(m);
    out.step_vars.push_back(p + r);
    state_vars[static_cast<std::size_t>(j)] = p;
    mean_sum += m;
    state_var_sum += p;
  }

  // Cov(y_{t+j}, y_{t+k}) = a^{k-j} * Var(x_{t+j}) for j < k.
  double cross = 0.0;
  for (int j = 0; j < horizon; ++j) {
    double apow = 1.0;
    for (int k = j + 1; k < horizon; ++k) {
      apow *= a;
      cross += apow * state_vars[static_cast<std::size_t>(j)];
    }
  }
  const double h = static_cast<double>(horizon);
  out.avg_mean = mean_sum / h;
  out.avg_var = (state_var_sum + h * r + 2.0 * cross) / (h * h);
  return out;
}

}  // namespace rmd
