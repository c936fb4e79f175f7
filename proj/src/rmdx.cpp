#include "rmd/rmdx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rmd/parallel.hpp"
#include "rmd/rng.hpp"

namespace rmd {

namespace {
constexpr std::uint64_t kPathStream = 0x7061746873ull;  // sampler label
}

std::size_t fixed_inclusion_count(std::size_t length, double beta) {
  if (!(beta > 0.0) || beta > 1.0)
    throw_error(ErrorCode::invalid_input, "beta must lie in (0, 1]");
  const auto k = static_cast<long long>(std::llround(beta * static_cast<double>(length)));
  if (k < 1)
    throw_error(ErrorCode::invalid_input,
                "beta yields an empty inclusion subset (round(beta*T) < 1)");
  return std::min<std::size_t>(static_cast<std::size_t>(k), length);
}

std::vector<InclusionPath> sample_paths(const PathSampler& sampler) {
  if (sampler.n_paths < 1) throw_error(ErrorCode::invalid_input, "n_paths must be >= 1");
  if (sampler.length == 0) throw_error(ErrorCode::invalid_input, "empty sample");
  const std::size_t k = fixed_inclusion_count(sampler.length, sampler.beta);

  std::vector<InclusionPath> paths;
  paths.reserve(static_cast<std::size_t>(sampler.n_paths));
  std::vector<std::uint32_t> positions(sampler.length);
  for (int i = 0; i < sampler.n_paths; ++i) {
    Rng rng = Rng::stream(sampler.seed, {kPathStream, static_cast<std::uint64_t>(i)});
    std::iota(positions.begin(), positions.end(), 0u);
    InclusionPath path{std::vector<std::uint8_t>(sampler.length, 0)};
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pick = j + rng.below(sampler.length - j);
      std::swap(positions[j], positions[pick]);
      path.flags[positions[j]] = 1;
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<InclusionPath> enumerate_fixed_size_paths(std::size_t length, std::size_t count) {
  if (count > length) throw_error(ErrorCode::invalid_input, "count exceeds length");
  std::vector<InclusionPath> out;
  std::vector<std::size_t> comb(count);
  std::iota(comb.begin(), comb.end(), 0);
  for (;;) {
    InclusionPath path{std::vector<std::uint8_t>(length, 0)};
    for (std::size_t pos : comb) path.flags[pos] = 1;
    out.push_back(std::move(path));
    // next combination in lexicographic order
    std::size_t i = count;
    while (i > 0 && comb[i - 1] == length - count + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < count; ++j) comb[j] = comb[j - 1] + 1;
  }
  return out;
}

namespace {

struct PathOutput {
  bool ok = false;
  std::vector<double> theta;
  double loglik = 0.0;
  LinearGaussianModel model;
  std::vector<double> filtered_means;
  std::vector<double> step_means, step_vars;  // per horizon
  std::vector<double> avg_means, avg_vars;
};

std::vector<double> aggregate_theta(const ModelFamily& family,
                                    const std::vector<const PathOutput*>& ok_paths,
                                    SigmaScale scale) {
  const std::size_t dim = ok_paths.front()->theta.size();
  if (ok_paths.size() == 1) return ok_paths.front()->theta;  // exact, no round trip
  std::vector<double> bar(dim, 0.0);
  const double inv_n = 1.0 / static_cast<double>(ok_paths.size());
  for (std::size_t d = 0; d < dim; ++d) {
    const bool is_sigma = d < 2;  // every family carries (sigma_eps, sigma_eta) first
    double acc = 0.0;
    for (const PathOutput* p : ok_paths)
      acc += (is_sigma && scale == SigmaScale::log_scale) ? std::log(p->theta[d]) : p->theta[d];
    acc *= inv_n;
    bar[d] = (is_sigma && scale == SigmaScale::log_scale) ? std::exp(acc) : acc;
  }
  (void)family;
  return bar;
}

}  // namespace

RmdxResult rmd_x_estimate(const ModelFamily& family, const TimeSeries& series,
                          const RmdxConfig& config) {
  family.validate();
  series.validate();
  if (config.horizon_max < 1) throw_error(ErrorCode::invalid_input, "horizon_max must be >= 1");

  std::vector<InclusionPath> paths;
  if (config.explicit_paths) {
    paths = *config.explicit_paths;
    if (paths.empty()) throw_error(ErrorCode::invalid_input, "explicit path set is empty");
    for (const auto& p : paths)
      if (p.size() != series.size())
        throw_error(ErrorCode::invalid_input, "explicit path length mismatch");
  } else {
    const std::size_t k = fixed_inclusion_count(series.size(), config.beta);
    if (!config.fixed_theta && k < static_cast<std::size_t>(family.identifiability_floor()))
      throw_error(ErrorCode::under_identified,
                  "round(beta*T) = " + std::to_string(k) + " is below the " + family.name() +
                      " identifiability floor of " +
                      std::to_string(family.identifiability_floor()));
    if (k == series.size()) {
      // All paths are the full-inclusion path; a single estimation suffices
      // and keeps the beta = 1 case bit-identical to the plain fit.
      paths.push_back(InclusionPath::all(series.size()));
    } else {
      paths = sample_paths({series.size(), config.beta,
                            std::max(config.n_paths, 1), config.seed});
    }
  }

  const std::size_t n_paths = paths.size();
  const int h_max = config.horizon_max;
  std::vector<PathOutput> slots(n_paths);

  parallel_for(n_paths, config.threads, [&](std::size_t i) {
    PathOutput& out = slots[i];
    try {
      if (config.fixed_theta) {
        out.theta = *config.fixed_theta;
        ModelSpec spec = instantiate(family, out.theta);
        apply_default_init(spec.lgm, series, paths[i]);
        out.model = spec.lgm;
      } else {
        MleFit fit = mle_fit(family, series, paths[i], config.optimizer);
        out.theta = std::move(fit.theta);
        out.model = fit.model;
      }
      const FilterOutput filt = filter_series(out.model, series, paths[i]);
      out.loglik = filt.loglik;
      out.filtered_means.reserve(filt.filtered.size());
      for (const auto& b : filt.filtered) out.filtered_means.push_back(b.mean);
      const GaussianBelief last = filt.filtered.back();
      for (int h = 1; h <= h_max; ++h) {
        const Forecast f = forecast(out.model, last, h);
        out.step_means.push_back(f.step_means.back());
        out.step_vars.push_back(f.step_vars.back());
        out.avg_means.push_back(f.avg_mean);
        out.avg_vars.push_back(f.avg_var);
      }
      out.ok = true;
    } catch (const ConvergenceFailure&) {
      out.ok = false;  // dropped from aggregation, counted below
    }
  });

  std::vector<const PathOutput*> ok_paths;
  for (const auto& s : slots)
    if (s.ok) ok_paths.push_back(&s);

  RmdxResult result;
  result.n_paths_used = static_cast<int>(ok_paths.size());
  result.n_failed = static_cast<int>(n_paths - ok_paths.size());
  if (ok_paths.empty() ||
      static_cast<double>(ok_paths.size()) < 0.1 * static_cast<double>(n_paths))
    throw_error(ErrorCode::estimation_failure,
                "rmd_x_estimate: only " + std::to_string(ok_paths.size()) + " of " +
                    std::to_string(n_paths) + " paths estimated successfully");

  result.theta_bar = aggregate_theta(family, ok_paths, config.sigma_scale);

  const double w = 1.0 / static_cast<double>(ok_paths.size());
  result.filtered_mean_bar.assign(series.size(), 0.0);
  for (const PathOutput* p : ok_paths)
    for (std::size_t t = 0; t < series.size(); ++t)
      result.filtered_mean_bar[t] += w * p->filtered_means[t];

  result.point_step.resize(static_cast<std::size_t>(h_max));
  result.point_avg.resize(static_cast<std::size_t>(h_max));
  for (int h = 0; h < h_max; ++h) {
    ForecastMixture step, avg;
    for (const PathOutput* p : ok_paths) {
      step.weights.push_back(w);
      step.means.push_back(p->step_means[static_cast<std::size_t>(h)]);
      step.vars.push_back(p->step_vars[static_cast<std::size_t>(h)]);
      avg.weights.push_back(w);
      avg.means.push_back(p->avg_means[static_cast<std::size_t>(h)]);
      avg.vars.push_back(p->avg_vars[static_cast<std::size_t>(h)]);
    }
    double acc_step = 0.0, acc_avg = 0.0;
    for (const PathOutput* p : ok_paths) {
      acc_step += p->step_means[static_cast<std::size_t>(h)];
      acc_avg += p->avg_means[static_cast<std::size_t>(h)];
    }
    result.point_step[static_cast<std::size_t>(h)] = acc_step * w;
    result.point_avg[static_cast<std::size_t>(h)] = acc_avg * w;
    result.step_mixture.push_back(std::move(step));
    result.avg_mixture.push_back(std::move(avg));
  }

  if (config.keep_per_path) {
    for (const PathOutput* p : ok_paths) {
      MleFit fit;
      fit.theta = p->theta;
      fit.model = p->model;
      fit.loglik = p->loglik;
      result.per_path.push_back(std::move(fit));
    }
  }
  return result;
}

}  // namespace rmd
