#include "rmd/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmd/nelder_mead.hpp"

namespace rmd {

namespace {

constexpr double kLogSigmaLo = -13.815510557964274;  // log 1e-6
constexpr double kLogSigmaHi = 9.210340371976184;    // log 1e4
constexpr double kLogitCap = 30.0;
constexpr double kMuCap = 1e4;

std::vector<double> to_theta(const ModelFamily& family, std::span<const double> z) {
  auto clamp = [](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };
  std::vector<double> theta;
  theta.push_back(std::exp(clamp(z[0], kLogSigmaLo, kLogSigmaHi)));
  theta.push_back(std::exp(clamp(z[1], kLogSigmaLo, kLogSigmaHi)));
  if (family.tag == FamilyTag::ar || family.tag == FamilyTag::armf) {
    const double logit = clamp(z[2], -kLogitCap, kLogitCap);
    theta.push_back(1.0 / (1.0 + std::exp(-logit)));
  }
  if (family.tag == FamilyTag::ar) theta.push_back(clamp(z[3], -kMuCap, kMuCap));
  return theta;
}

}  // namespace

MleFit mle_fit(const ModelFamily& family, const TimeSeries& series, const InclusionPath& path,
               const OptimizerSettings& settings) {
  family.validate();
  series.validate();
  if (path.size() != series.size())
    throw_error(ErrorCode::invalid_input, "mle_fit: path/series length mismatch");
  if (family.tag == FamilyTag::uc_t)
    throw_error(ErrorCode::invalid_input,
                "mle_fit: uc-t has a non-Gaussian measurement; fit it with the Bayesian path");

  const std::size_t n_included = path.count();
  if (n_included < static_cast<std::size_t>(family.identifiability_floor()))
    throw_error(ErrorCode::under_identified,
                "mle_fit: " + std::to_string(n_included) + " included observations, need >= " +
                    std::to_string(family.identifiability_floor()));

  double mean = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t)
    if (path[t]) mean += series.values[t];
  mean /= static_cast<double>(n_included);
  double var = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t)
    if (path[t]) var += (series.values[t] - mean) * (series.values[t] - mean);
  var /= static_cast<double>(n_included);
  double scale = std::sqrt(var);
  if (!(scale > 1e-8)) scale = 1.0;

  auto objective = [&](std::span<const double> z) -> double {
    const auto theta = to_theta(family, z);
    try {
      ModelSpec spec = instantiate(family, theta);
      apply_default_init(spec.lgm, series, path);
      const double ll = filter_series(spec.lgm, series, path).loglik;
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const int d = family.param_count();
  std::vector<std::vector<double>> starts;
  auto make_start = [&](double se, double so, double kappa) {
    std::vector<double> z{std::log(se * scale), std::log(so * scale)};
    if (d >= 3) z.push_back(std::log(kappa / (1.0 - kappa)));
    if (d >= 4) z.push_back(mean);
    return z;
  };
  starts.push_back(make_start(0.5, 0.5, 0.5));
  starts.push_back(make_start(0.1, 1.0, 0.8));
  starts.push_back(make_start(1.0, 0.1, 0.2));

  bool any_converged = false;
  NelderMeadResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (const auto& z0 : starts) {
    auto run = nelder_mead(objective, z0, 0.5, settings.max_iterations, settings.simplex_tol);
    iterations += run.iterations;
    any_converged = any_converged || run.converged;
    if (run.fmin < best.fmin || best.x.empty()) best = std::move(run);
  }

  MleFit fit;
  fit.theta = to_theta(family, best.x);
  ModelSpec spec = instantiate(family, fit.theta);
  apply_default_init(spec.lgm, series, path);
  fit.model = spec.lgm;
  fit.loglik = -best.fmin;
  fit.iterations = iterations;
  if (!any_converged)
    throw ConvergenceFailure(std::move(fit), "mle_fit: no start converged within " +
                                                 std::to_string(settings.max_iterations) +
                                                 " iterations");
  return fit;
}

}  // namespace rmd
