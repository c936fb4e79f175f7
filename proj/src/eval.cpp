#include "rmd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rmd/parallel.hpp"
#include "rmd/stats.hpp"

namespace rmd::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kEvalRmdxStream = 0x4558ull;
constexpr std::uint64_t kEvalRmdnStream = 0x454Eull;

double realized_average(const TimeSeries& series, std::size_t origin, int horizon) {
  double acc = 0.0;
  for (int j = 1; j <= horizon; ++j) acc += series.values[origin + static_cast<std::size_t>(j)];
  return acc / static_cast<double>(horizon);
}

}  // namespace

double msfe(std::span<const ForecastRecord> records, int horizon) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.horizon != horizon || !r.has_realized) continue;
    const double e = r.point - r.realized;
    acc += e * e;
    ++n;
  }
  if (n == 0) throw_error(ErrorCode::invalid_input, "msfe: no realized records at this horizon");
  return acc / static_cast<double>(n);
}

WlrResult wlr_test(std::span<const double> logdens_a, std::span<const double> logdens_b) {
  if (logdens_a.size() != logdens_b.size())
    throw_error(ErrorCode::invalid_input, "wlr_test: length mismatch");
  const std::size_t n = logdens_a.size();
  if (n < 8) throw_error(ErrorCode::invalid_input, "wlr_test: need at least 8 aligned forecasts");

  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = logdens_a[i] - logdens_b[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);

  const int bandwidth =
      static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
  double lrv = 0.0;
  for (int lag = 0; lag <= bandwidth; ++lag) {
    double gamma = 0.0;
    for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i)
      gamma += (d[i] - mean) * (d[i - static_cast<std::size_t>(lag)] - mean);
    gamma /= static_cast<double>(n);
    lrv += lag == 0 ? gamma
                    : 2.0 * (1.0 - static_cast<double>(lag) / (bandwidth + 1.0)) * gamma;
  }

  WlrResult out;
  out.n = n;
  out.wlr_hat = mean;
  out.sigma_hat = lrv > 0.0 ? std::sqrt(lrv) : 0.0;
  if (out.sigma_hat > 0.0) {
    out.t_stat = std::sqrt(static_cast<double>(n)) * mean / out.sigma_hat;
  } else {
    out.t_stat = mean == 0.0 ? 0.0
                             : std::copysign(std::numeric_limits<double>::infinity(), mean);
  }
  out.p_right = norm_cdf(out.t_stat);
  return out;
}

double select_beta(std::span<const double> grid,
                   const std::vector<std::vector<ForecastRecord>>& history, int horizon,
                   double warm_start) {
  if (grid.empty() || history.size() != grid.size())
    throw_error(ErrorCode::invalid_input, "select_beta: grid/history mismatch");
  double best_beta = kNaN;
  double best_msfe = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : history[i]) {
      if (r.horizon != horizon || !r.has_realized) continue;
      acc += (r.point - r.realized) * (r.point - r.realized);
      ++n;
    }
    if (n == 0) continue;
    const double value = acc / static_cast<double>(n);
    if (value < best_msfe || (value == best_msfe && grid[i] < best_beta)) {
      best_msfe = value;
      best_beta = grid[i];
    }
  }
  return std::isnan(best_beta) ? warm_start : best_beta;
}

Estimator parse_estimator(std::string_view name) {
  if (name == "none") return Estimator::none;
  if (name == "rmd-x" || name == "rmdx") return Estimator::rmd_x;
  if (name == "rmd-n" || name == "rmdn") return Estimator::rmd_n;
  throw_error(ErrorCode::invalid_input, "unknown estimator: " + std::string(name));
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::none: return "none";
    case Estimator::rmd_x: return "rmd-x";
    case Estimator::rmd_n: return "rmd-n";
  }
  return "?";
}

std::vector<double> default_beta_grid() {
  return {0.05, 0.10, 0.15, 0.20, 0.25, 0.35, 0.50, 0.70, 0.90, 1.00};
}

namespace {

struct OriginSet {
  std::vector<std::vector<ForecastRecord>> by_origin;  // per origin slot, all horizons
  std::vector<std::uint8_t> failed;
};

struct Origins {
  std::size_t first = 0;
  std::size_t count = 0;
  std::size_t slot(std::size_t origin) const { return origin - first; }
  std::size_t origin(std::size_t slot) const { return first + slot; }
};

OriginSet generate_none(const TimeSeries& series, const EvalConfig& config,
                        const Origins& origins) {
  OriginSet set;
  set.by_origin.resize(origins.count);
  set.failed.assign(origins.count, 0);
  parallel_for(origins.count, config.threads, [&](std::size_t slot) {
    const std::size_t t = origins.origin(slot);
    const TimeSeries prefix = series.prefix(t + 1);
    try {
      const MleFit fit = mle_fit(config.family, prefix, InclusionPath::all(prefix.size()),
                                 config.optimizer);
      const FilterOutput filt =
          filter_series(fit.model, prefix, InclusionPath::all(prefix.size()));
      for (int h : config.horizons) {
        const Forecast f = forecast(fit.model, filt.filtered.back(), h);
        ForecastRecord rec;
        rec.origin = t;
        rec.horizon = h;
        rec.point = f.avg_mean;
        rec.pred_var = f.avg_var;
        if (t + static_cast<std::size_t>(h) < series.size()) {
          rec.realized = realized_average(series, t, h);
          rec.log_density = norm_logpdf(rec.realized, f.avg_mean, f.avg_var);
          rec.has_realized = true;
        } else {
          rec.realized = kNaN;
          rec.log_density = kNaN;
        }
        set.by_origin[slot].push_back(rec);
      }
    } catch (const Error&) {
      set.failed[slot] = 1;
      set.by_origin[slot].clear();
    }
  });
  return set;
}

OriginSet generate_rmdx(const TimeSeries& series, const EvalConfig& config,
                        const Origins& origins, double beta, std::size_t beta_idx) {
  OriginSet set;
  set.by_origin.resize(origins.count);
  set.failed.assign(origins.count, 0);
  const int h_max = *std::max_element(config.horizons.begin(), config.horizons.end());
  parallel_for(origins.count, config.threads, [&](std::size_t slot) {
    const std::size_t t = origins.origin(slot);
    const TimeSeries prefix = series.prefix(t + 1);
    RmdxConfig c = config.rmdx;
    c.beta = beta;
    c.threads = 1;  // origins provide the parallelism
    c.horizon_max = h_max;
    c.seed = Rng::stream(config.seed, {kEvalRmdxStream, beta_idx, t}).next_u64();
    try {
      const RmdxResult res = rmd_x_estimate(config.family, prefix, c);
      for (int h : config.horizons) {
        const auto& mix = res.avg_mixture[static_cast<std::size_t>(h - 1)];
        ForecastRecord rec;
        rec.origin = t;
        rec.horizon = h;
        rec.point = res.point_avg[static_cast<std::size_t>(h - 1)];
        rec.pred_var = mix.var();
        if (t + static_cast<std::size_t>(h) < series.size()) {
          rec.realized = realized_average(series, t, h);
          rec.log_density = mix.logpdf(rec.realized);
          rec.has_realized = true;
        } else {
          rec.realized = kNaN;
          rec.log_density = kNaN;
        }
        set.by_origin[slot].push_back(rec);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_input) throw;
      set.failed[slot] = 1;
      set.by_origin[slot].clear();
    }
  });
  return set;
}

OriginSet generate_rmdn(const TimeSeries& series, const EvalConfig& config,
                        const Origins& origins, double beta, std::size_t beta_idx,
                        std::vector<double>* filtered_out, std::vector<double>* smoothed_out) {
  OriginSet set;
  set.by_origin.resize(origins.count);
  set.failed.assign(origins.count, 0);
  RmdnConfig c = config.rmdn;
  c.threads = config.threads;
  c.seed = Rng::stream(config.seed, {kEvalRmdnStream, beta_idx}).next_u64();
  try {
    auto system = ThetaParticleSystem::init(config.family, series, beta, c);
    for (std::size_t t = 0; t < series.size(); ++t) {
      const StepRecord step = system.update(series.values[t]);
      if (filtered_out) filtered_out->push_back(step.filtered_mean);
      if (t < origins.first) continue;
      const std::size_t slot = origins.slot(t);
      if (slot >= origins.count) continue;
      for (int h : config.horizons) {
        const ForecastMixture mix = system.forecast_mixture_avg(h);
        ForecastRecord rec;
        rec.origin = t;
        rec.horizon = h;
        rec.point = mix.mean();
        rec.pred_var = mix.var();
        if (t + static_cast<std::size_t>(h) < series.size()) {
          rec.realized = realized_average(series, t, h);
          rec.log_density = mix.logpdf(rec.realized);
          rec.has_realized = true;
        } else {
          rec.realized = kNaN;
          rec.log_density = kNaN;
        }
        set.by_origin[slot].push_back(rec);
      }
    }
    if (smoothed_out) *smoothed_out = system.smoothed().probs;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_input) throw;
    std::fill(set.failed.begin(), set.failed.end(), 1);
    for (auto& v : set.by_origin) v.clear();
  }
  return set;
}

const ForecastRecord* find_record(const OriginSet& set, const Origins& origins,
                                  std::size_t origin, int horizon) {
  const std::size_t slot = origins.slot(origin);
  if (set.failed[slot]) return nullptr;
  for (const auto& r : set.by_origin[slot])
    if (r.horizon == horizon) return &r;
  return nullptr;
}

ReportRow make_row(const EvalConfig& config, const std::string& strategy, int horizon,
                   const std::vector<ForecastRecord>& records,
                   const std::vector<ForecastRecord>* baseline) {
  ReportRow row;
  row.model = config.family.name();
  row.estimator = estimator_name(config.estimator);
  row.beta_strategy = strategy;
  row.horizon = horizon;

  std::vector<const ForecastRecord*> realized;
  for (const auto& r : records)
    if (r.horizon == horizon && r.has_realized) realized.push_back(&r);
  row.n_forecasts = realized.size();
  if (!realized.empty()) {
    double acc = 0.0;
    for (const auto* r : realized) acc += (r->point - r->realized) * (r->point - r->realized);
    row.msfe_value = acc / static_cast<double>(realized.size());
  } else {
    row.msfe_value = kNaN;
  }

  if (baseline) {
    // Align on common realized origins.
    std::vector<double> a, b;
    for (const auto* r : realized) {
      for (const auto& rb : *baseline) {
        if (rb.horizon == horizon && rb.has_realized && rb.origin == r->origin) {
          a.push_back(r->log_density);
          b.push_back(rb.log_density);
          break;
        }
      }
    }
    if (a.size() >= 8) {
      const WlrResult w = wlr_test(a, b);
      row.wlr = w.wlr_hat;
      row.wlr_se = w.sigma_hat;
      row.wlr_t = w.t_stat;
      row.wlr_p = w.p_right;
      row.has_wlr = true;
    }
  }
  return row;
}

}  // namespace

EvalReport run_recursive_evaluation(const TimeSeries& series, const EvalConfig& config) {
  series.validate();
  config.family.validate();
  if (config.horizons.empty())
    throw_error(ErrorCode::invalid_input, "evaluation needs at least one horizon");
  for (int h : config.horizons)
    if (h < 1) throw_error(ErrorCode::invalid_input, "horizons must be >= 1");
  if (config.eval_start < 40)
    throw_error(ErrorCode::invalid_input,
                "eval_start must leave at least 40 training observations");
  if (config.eval_start >= series.size())
    throw_error(ErrorCode::invalid_input, "eval_start beyond the end of the series");
  if (config.estimator == Estimator::none && config.family.tag == FamilyTag::uc_t)
    throw_error(ErrorCode::invalid_input,
                "uc-t has no closed-form likelihood; evaluate it with estimator rmd-n");

  Origins origins;
  origins.first = config.eval_start;
  origins.count = series.size() - config.eval_start;

  // Working grid: the user grid (sorted, unique) plus beta = 1 for the
  // baseline; estimator none is the beta = 1 baseline only.
  std::vector<double> grid = config.beta_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double b : grid)
    if (!(b > 0.0 && b <= 1.0))
      throw_error(ErrorCode::invalid_input, "beta grid entries must lie in (0, 1]");
  if (config.estimator == Estimator::none) grid = {1.0};
  std::vector<double> work_grid = grid;
  if (std::find(work_grid.begin(), work_grid.end(), 1.0) == work_grid.end())
    work_grid.push_back(1.0);

  EvalReport report;
  report.beta_grid = grid;

  std::vector<OriginSet> sets(work_grid.size());
  report.plot_betas = work_grid;
  report.filtered_means_per_beta.assign(work_grid.size(), {});
  report.smoothed_per_beta.assign(work_grid.size(), {});
  for (std::size_t i = 0; i < work_grid.size(); ++i) {
    switch (config.estimator) {
      case Estimator::none:
        sets[i] = generate_none(series, config, origins);
        break;
      case Estimator::rmd_x:
        sets[i] = generate_rmdx(series, config, origins, work_grid[i], i);
        break;
      case Estimator::rmd_n:
        sets[i] = generate_rmdn(series, config, origins, work_grid[i], i,
                                &report.filtered_means_per_beta[i],
                                &report.smoothed_per_beta[i]);
        break;
    }
  }

  int n_failed = 0;
  for (const auto& s : sets)
    for (auto f : s.failed) n_failed += f != 0;
  report.n_failed_origins = n_failed;
  report.n_origin_runs = static_cast<int>(work_grid.size() * origins.count);
  if (n_failed > 0.2 * static_cast<double>(report.n_origin_runs))
    throw_error(ErrorCode::estimation_failure,
                "evaluation failed: " + std::to_string(n_failed) + " of " +
                    std::to_string(report.n_origin_runs) + " origin fits failed");

  const std::size_t base_idx = static_cast<std::size_t>(
      std::find(work_grid.begin(), work_grid.end(), 1.0) - work_grid.begin());
  std::vector<ForecastRecord> baseline_records;
  for (std::size_t slot = 0; slot < origins.count; ++slot)
    for (const auto& r : sets[base_idx].by_origin[slot]) baseline_records.push_back(r);

  // Per-beta record sets (aligned with the user grid).
  report.records_per_beta.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t wi = static_cast<std::size_t>(
        std::find(work_grid.begin(), work_grid.end(), grid[i]) - work_grid.begin());
    for (std::size_t slot = 0; slot < origins.count; ++slot)
      for (const auto& r : sets[wi].by_origin[slot]) report.records_per_beta[i].push_back(r);
  }

  const bool has_strategies = config.estimator != Estimator::none && grid.size() > 1;

  // Fixed-beta rows.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (config.estimator == Estimator::none) break;
    if (grid[i] == 1.0) continue;  // emitted as the baseline row below
    std::ostringstream name;
    name << "fixed:" << grid[i];
    for (int h : config.horizons)
      report.rows.push_back(
          make_row(config, name.str(), h, report.records_per_beta[i], &baseline_records));
  }

  // Q-strategies: per optimizing horizon, pick beta at each origin from past
  // realized MSFE with no look-ahead, then evaluate the induced forecasts.
  if (has_strategies) {
    for (int opt_h : config.horizons) {
      std::vector<ForecastRecord> strat_records;
      for (std::size_t slot = 0; slot < origins.count; ++slot) {
        const std::size_t t = origins.origin(slot);
        std::vector<std::vector<ForecastRecord>> history(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          for (const auto& r : report.records_per_beta[i]) {
            if (r.horizon == opt_h && r.has_realized &&
                r.origin + static_cast<std::size_t>(opt_h) <= t)
              history[i].push_back(r);
          }
        }
        const double chosen = select_beta(grid, history, opt_h, config.warm_start_beta);
        report.beta_schedule.push_back({t, opt_h, chosen});
        const std::size_t ci = static_cast<std::size_t>(
            std::find(work_grid.begin(), work_grid.end(), chosen) - work_grid.begin());
        if (ci >= work_grid.size()) continue;  // warm start outside the grid
        for (int h : config.horizons) {
          const ForecastRecord* rec = find_record(sets[ci], origins, t, h);
          if (rec) strat_records.push_back(*rec);
        }
      }
      for (int h : config.horizons)
        report.rows.push_back(make_row(config, "Q" + std::to_string(opt_h), h, strat_records,
                                       &baseline_records));
    }
  }

  // beta = 1 baseline row.
  for (int h : config.horizons)
    report.rows.push_back(make_row(config, "beta=1", h, baseline_records, nullptr));

  return report;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "model,estimator,beta_strategy,horizon,msfe,wlr,wlr_se,wlr_t,wlr_p,n_forecasts\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.estimator << ',' << r.beta_strategy << ',' << r.horizon << ','
        << r.msfe_value << ',';
    if (r.has_wlr)
      out << r.wlr << ',' << r.wlr_se << ',' << r.wlr_t << ',' << r.wlr_p;
    else
      out << ",,,";
    out << ',' << r.n_forecasts << '\n';
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"model", r.model},
                          {"estimator", r.estimator},
                          {"beta_strategy", r.beta_strategy},
                          {"horizon", r.horizon},
                          {"msfe", r.msfe_value},
                          {"n_forecasts", r.n_forecasts}};
    if (r.has_wlr) {
      row["wlr"] = r.wlr;
      row["wlr_se"] = r.wlr_se;
      row["wlr_t"] = r.wlr_t;
      row["wlr_p"] = r.wlr_p;
    }
    j["rows"].push_back(row);
  }
  j["beta_schedule"] = nlohmann::json::array();
  for (const auto& c : beta_schedule)
    j["beta_schedule"].push_back(
        {{"origin", c.origin}, {"horizon", c.horizon}, {"beta", c.beta}});
  j["n_failed_origins"] = n_failed_origins;
  j["n_origin_runs"] = n_origin_runs;
  return j.dump(2);
}

}  // namespace rmd::eval
