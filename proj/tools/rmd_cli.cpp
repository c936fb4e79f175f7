// rmd: simulation, fitting, forecasting, and out-of-sample evaluation for
// randomized-missing-data robust state-space filtering.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmd/data_io.hpp"
#include "rmd/eval.hpp"
#include "rmd/kernels/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitIo = 4;

int exit_code_for(const rmd::Error& e) {
  switch (e.code()) {
    case rmd::ErrorCode::invalid_input:
    case rmd::ErrorCode::invalid_state:
    case rmd::ErrorCode::under_identified:
      return kExitConfig;
    case rmd::ErrorCode::io_error:
      return kExitIo;
    default:
      return kExitEstimation;
  }
}

int default_threads() {
  if (const char* env = std::getenv("RMD_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

struct CommonOpts {
  std::string config_path;  // consumed by the pre-scan; option absorbs the flag
  std::string input;
  std::string input_kind = "inflation";  // or "levels"
  bool raw_transform = false;            // levels: raw log difference
  std::string family = "uc";
  std::string estimator = "none";
  std::string out_dir = ".";
  int threads = default_threads();
  std::optional<std::uint64_t> seed;

  // rmd-x budget
  int n_paths = 200;
  std::string sigma_scale = "log";
  // rmd-n budget
  int n_theta = 512;
  int component_cap = 64;
  double ess_threshold = 0.5;
  int rejuvenation_moves = 3;
  double proposal_scale = 0.5;
  int fixed_lag = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_input = true) {
  cmd->add_option("--config", o.config_path, "JSON config with flag defaults");
  if (needs_input)
    cmd->add_option("--input", o.input, "input CSV (header: date,value)")->required();
  cmd->add_option("--input-kind", o.input_kind, "inflation | levels")
      ->check(CLI::IsMember({"inflation", "levels"}));
  cmd->add_flag("--raw-transform", o.raw_transform,
                "levels: raw log difference instead of 400*dln");
  cmd->add_option("--family", o.family, "uc | ar | armf | uc-t");
  cmd->add_option("--estimator", o.estimator, "none | rmd-x | rmd-n");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (env RMD_THREADS)");
  cmd->add_option("--seed", o.seed, "master seed (required for stochastic commands)");
  cmd->add_option("--n-paths", o.n_paths, "rmd-x: sampled inclusion paths");
  cmd->add_option("--sigma-scale", o.sigma_scale, "rmd-x sigma averaging: log | natural")
      ->check(CLI::IsMember({"log", "natural"}));
  cmd->add_option("--n-theta", o.n_theta, "rmd-n: theta particles");
  cmd->add_option("--component-cap", o.component_cap, "rmd-n: inner mixture cap");
  cmd->add_option("--ess-threshold", o.ess_threshold, "rmd-n: resample-move trigger");
  cmd->add_option("--rejuvenation-moves", o.rejuvenation_moves, "rmd-n: MH steps per particle");
  cmd->add_option("--proposal-scale", o.proposal_scale, "rmd-n: proposal covariance factor");
  cmd->add_option("--fixed-lag", o.fixed_lag, "rmd-n: fixed-lag smoother window (0 = full)");
}

rmd::TimeSeries load_series(const CommonOpts& o) {
  if (o.input_kind == "levels")
    return rmd::data::to_inflation(rmd::data::read_levels_csv(o.input), !o.raw_transform);
  return rmd::data::read_series_csv(o.input);
}

void require_seed(const CommonOpts& o, bool stochastic) {
  if (stochastic && !o.seed)
    rmd::throw_error(rmd::ErrorCode::invalid_input,
                     "--seed is required for stochastic commands");
}

rmd::RmdxConfig rmdx_config(const CommonOpts& o) {
  rmd::RmdxConfig c;
  c.n_paths = o.n_paths;
  c.seed = o.seed.value_or(0);
  c.threads = o.threads;
  c.sigma_scale =
      o.sigma_scale == "natural" ? rmd::SigmaScale::natural : rmd::SigmaScale::log_scale;
  return c;
}

rmd::RmdnConfig rmdn_config(const CommonOpts& o) {
  rmd::RmdnConfig c;
  c.n_theta = o.n_theta;
  c.component_cap = o.component_cap;
  c.ess_threshold = o.ess_threshold;
  c.rejuvenation_moves = o.rejuvenation_moves;
  c.proposal_scale = o.proposal_scale;
  c.fixed_lag = o.fixed_lag;
  c.seed = o.seed.value_or(0);
  c.threads = o.threads;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) rmd::throw_error(rmd::ErrorCode::io_error, "cannot write " + path.string());
  out << text;
  if (!out) rmd::throw_error(rmd::ErrorCode::io_error, "write failed for " + path.string());
}

json quantile_block(const rmd::ThetaParticleSystem& system, const rmd::ModelFamily& family) {
  const double qs[] = {0.025, 0.5, 0.975};
  json block;
  const auto names = family.param_names();
  for (std::size_t d = 0; d < names.size(); ++d) {
    const auto v = system.posterior_quantiles(d, qs);
    block[names[d]] = {{"p2.5", v[0]}, {"p50", v[1]}, {"p97.5", v[2]}};
  }
  return block;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& o, int length, double sigma_eps, double sigma_eta,
                 double kappa, double mu, double rate, const std::string& mechanism,
                 double magnitude, const std::string& start) {
  require_seed(o, true);
  rmd::LinearGaussianModel model;
  model.state_sd = sigma_eps;
  model.obs_sd = sigma_eta;
  if (kappa >= 0.0) {  // mean-reverting state requested
    model.state_coef = kappa;
    model.state_const = mu * (1.0 - kappa);
  }
  model.init_mean = mu;
  model.init_var = 1.0;

  rmd::data::ContaminationSpec spec;
  spec.rate = rate;
  spec.mechanism = rmd::data::parse_mechanism(mechanism);
  spec.magnitude = magnitude;
  spec.seed = *o.seed;

  const auto sim = rmd::data::simulate_contaminated(model, static_cast<std::size_t>(length),
                                                    spec, rmd::YearQuarter::parse(start));
  fs::create_directories(o.out_dir);
  rmd::data::write_series_csv(fs::path(o.out_dir) / "simulated.csv", sim.observed);
  rmd::data::write_truth_json(fs::path(o.out_dir) / "truth.json", sim);
  std::cout << "wrote " << (fs::path(o.out_dir) / "simulated.csv").string() << " ("
            << sim.observed.size() << " observations)\n";
  return kExitOk;
}

int cmd_fit(const CommonOpts& o, const std::vector<double>& betas) {
  const auto estimator = rmd::eval::parse_estimator(o.estimator);
  require_seed(o, estimator != rmd::eval::Estimator::none);
  const auto family = rmd::ModelFamily::parse(o.family);
  const auto series = load_series(o);
  fs::create_directories(o.out_dir);

  json out;
  out["family"] = family.name();
  out["estimator"] = o.estimator;
  out["results"] = json::array();

  if (estimator == rmd::eval::Estimator::none) {
    const auto fit = rmd::mle_fit(family, series, rmd::InclusionPath::all(series.size()));
    json block{{"beta", 1.0}, {"loglik", fit.loglik}};
    const auto names = family.param_names();
    for (std::size_t d = 0; d < names.size(); ++d) block["theta"][names[d]] = fit.theta[d];
    out["results"].push_back(block);
  } else if (estimator == rmd::eval::Estimator::rmd_x) {
    for (double beta : betas) {
      auto c = rmdx_config(o);
      c.beta = beta;
      const auto res = rmd::rmd_x_estimate(family, series, c);
      json block{{"beta", beta}, {"n_paths_used", res.n_paths_used},
                 {"n_failed", res.n_failed}};
      const auto names = family.param_names();
      for (std::size_t d = 0; d < names.size() && d < res.theta_bar.size(); ++d)
        block["theta_bar"][names[d]] = res.theta_bar[d];
      out["results"].push_back(block);
    }
  } else {
    for (double beta : betas) {
      const auto fit = rmd::fit_rmd_n(family, series, beta, rmdn_config(o));
      json block{{"beta", beta},
                 {"log_evidence", fit.system.log_evidence()},
                 {"parameters", quantile_block(fit.system, family)}};
      out["results"].push_back(block);
    }
  }
  write_text(fs::path(o.out_dir) / "fit.json", out.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(o.out_dir) / "fit.json").string() << "\n";
  return kExitOk;
}

int cmd_forecast(const CommonOpts& o, double beta, const std::vector<int>& horizons) {
  const auto estimator = rmd::eval::parse_estimator(o.estimator);
  require_seed(o, estimator != rmd::eval::Estimator::none);
  const auto family = rmd::ModelFamily::parse(o.family);
  const auto series = load_series(o);
  fs::create_directories(o.out_dir);
  const int h_max = *std::max_element(horizons.begin(), horizons.end());

  struct Line {
    int h;
    double point_step, var_step, point_avg, var_avg;
  };
  std::vector<Line> lines;

  if (estimator == rmd::eval::Estimator::none) {
    const auto fit = rmd::mle_fit(family, series, rmd::InclusionPath::all(series.size()));
    const auto filt =
        rmd::filter_series(fit.model, series, rmd::InclusionPath::all(series.size()));
    for (int h : horizons) {
      const auto f = rmd::forecast(fit.model, filt.filtered.back(), h);
      lines.push_back({h, f.step_means.back(), f.step_vars.back(), f.avg_mean, f.avg_var});
    }
  } else if (estimator == rmd::eval::Estimator::rmd_x) {
    auto c = rmdx_config(o);
    c.beta = beta;
    c.horizon_max = h_max;
    const auto res = rmd::rmd_x_estimate(family, series, c);
    for (int h : horizons) {
      const auto& sm = res.step_mixture[static_cast<std::size_t>(h - 1)];
      const auto& am = res.avg_mixture[static_cast<std::size_t>(h - 1)];
      lines.push_back({h, sm.mean(), sm.var(), am.mean(), am.var()});
    }
  } else {
    const auto fit = rmd::fit_rmd_n(family, series, beta, rmdn_config(o));
    for (int h : horizons) {
      const auto sm = fit.system.forecast_mixture_step(h);
      const auto am = fit.system.forecast_mixture_avg(h);
      lines.push_back({h, sm.mean(), sm.var(), am.mean(), am.var()});
    }
  }

  std::ostringstream csv;
  csv.precision(10);
  csv << "horizon,point_step,var_step,point_avg,var_avg\n";
  json jout;
  jout["family"] = family.name();
  jout["estimator"] = o.estimator;
  jout["beta"] = beta;
  jout["forecasts"] = json::array();
  for (const auto& l : lines) {
    csv << l.h << ',' << l.point_step << ',' << l.var_step << ',' << l.point_avg << ','
        << l.var_avg << '\n';
    jout["forecasts"].push_back({{"horizon", l.h},
                                 {"point_step", l.point_step},
                                 {"var_step", l.var_step},
                                 {"point_avg", l.point_avg},
                                 {"var_avg", l.var_avg}});
  }
  write_text(fs::path(o.out_dir) / "forecast.csv", csv.str());
  write_text(fs::path(o.out_dir) / "forecast.json", jout.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(o.out_dir) / "forecast.csv").string() << "\n";
  return kExitOk;
}

rmd::eval::EvalConfig eval_config(const CommonOpts& o, const std::vector<double>& beta_grid,
                                  const std::vector<int>& horizons, const std::string& eval_start,
                                  double warm_start, const rmd::TimeSeries& series) {
  rmd::eval::EvalConfig c;
  c.family = rmd::ModelFamily::parse(o.family);
  c.estimator = rmd::eval::parse_estimator(o.estimator);
  if (!beta_grid.empty()) c.beta_grid = beta_grid;
  c.horizons = horizons;
  std::sort(c.horizons.begin(), c.horizons.end());
  c.horizons.erase(std::unique(c.horizons.begin(), c.horizons.end()), c.horizons.end());
  c.warm_start_beta = warm_start;
  c.seed = o.seed.value_or(0);
  c.threads = o.threads;
  c.rmdx = rmdx_config(o);
  c.rmdn = rmdn_config(o);

  const auto start = rmd::YearQuarter::parse(eval_start);
  const auto it = std::find(series.index.begin(), series.index.end(), start);
  if (it == series.index.end())
    rmd::throw_error(rmd::ErrorCode::invalid_input,
                     "eval-start " + eval_start + " not found in the input series");
  c.eval_start = static_cast<std::size_t>(it - series.index.begin());
  return c;
}

void write_plot_files(const fs::path& dir, const rmd::TimeSeries& series,
                      const rmd::eval::EvalReport& report, const rmd::eval::EvalConfig& config) {
  {
    std::ostringstream out;
    out.precision(10);
    out << "beta_strategy,horizon,msfe,n_forecasts\n";
    for (const auto& r : report.rows)
      out << r.beta_strategy << ',' << r.horizon << ',' << r.msfe_value << ',' << r.n_forecasts
          << '\n';
    write_text(dir / "msfe_by_strategy.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "origin,horizon,beta\n";
    for (const auto& c : report.beta_schedule)
      out << series.index[c.origin].str() << ',' << c.horizon << ',' << c.beta << '\n';
    write_text(dir / "beta_schedule.csv", out.str());
  }

  // Filtered-mean overlays per beta. The rmd-n pass records them; for the
  // other estimators run one full-sample estimate per beta.
  std::vector<double> betas = report.plot_betas;
  std::vector<std::vector<double>> filtered = report.filtered_means_per_beta;
  if (config.estimator == rmd::eval::Estimator::rmd_x) {
    for (std::size_t i = 0; i < betas.size(); ++i) {
      auto c = config.rmdx;
      c.beta = betas[i];
      c.seed = rmd::Rng::stream(config.seed, {0x706C6F74ull, i}).next_u64();
      c.threads = config.threads;
      filtered[i] = rmd::rmd_x_estimate(config.family, series, c).filtered_mean_bar;
    }
  } else if (config.estimator == rmd::eval::Estimator::none) {
    const auto fit = rmd::mle_fit(config.family, series,
                                  rmd::InclusionPath::all(series.size()), config.optimizer);
    const auto filt =
        rmd::filter_series(fit.model, series, rmd::InclusionPath::all(series.size()));
    filtered[0].clear();
    for (const auto& b : filt.filtered) filtered[0].push_back(b.mean);
  }
  {
    std::ostringstream out;
    out.precision(10);
    out << "date,observed,beta,filtered_mean\n";
    for (std::size_t i = 0; i < betas.size(); ++i) {
      if (filtered[i].size() != series.size()) continue;
      for (std::size_t t = 0; t < series.size(); ++t)
        out << series.index[t].str() << ',' << series.values[t] << ',' << betas[i] << ','
            << filtered[i][t] << '\n';
    }
    write_text(dir / "filtered_means.csv", out.str());
  }
  if (config.estimator == rmd::eval::Estimator::rmd_n) {
    std::ostringstream out;
    out.precision(10);
    out << "date,beta,prob\n";
    for (std::size_t i = 0; i < betas.size(); ++i) {
      if (report.smoothed_per_beta[i].size() != series.size()) continue;
      for (std::size_t t = 0; t < series.size(); ++t)
        out << series.index[t].str() << ',' << betas[i] << ','
            << report.smoothed_per_beta[i][t] << '\n';
    }
    write_text(dir / "smoothed_inclusion.csv", out.str());
  }
}

int cmd_evaluate(const CommonOpts& o, const std::vector<double>& beta_grid,
                 const std::vector<int>& horizons, const std::string& eval_start,
                 double warm_start, bool schedule_only) {
  require_seed(o, rmd::eval::parse_estimator(o.estimator) != rmd::eval::Estimator::none);
  const auto series = load_series(o);
  const auto config = eval_config(o, beta_grid, horizons, eval_start, warm_start, series);
  const auto report = rmd::eval::run_recursive_evaluation(series, config);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  if (schedule_only) {
    std::ostringstream out;
    out << "origin,horizon,beta\n";
    for (const auto& c : report.beta_schedule)
      out << series.index[c.origin].str() << ',' << c.horizon << ',' << c.beta << '\n';
    write_text(dir / "beta_schedule.csv", out.str());
    std::cout << "wrote " << (dir / "beta_schedule.csv").string() << "\n";
    return kExitOk;
  }
  write_text(dir / "eval_report.csv", report.to_csv());
  write_text(dir / "eval_report.json", report.to_json() + "\n");
  write_plot_files(dir, series, report, config);
  std::cout << "wrote " << (dir / "eval_report.csv").string() << " ("
            << report.rows.size() << " rows, " << report.n_failed_origins
            << " failed origin fits)\n";
  return kExitOk;
}

// Applies JSON config values as option defaults; explicit flags override.
void apply_config_defaults(CLI::App& app, const json& cfg, const std::string& path) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string flag = "--" + it.key();
    bool found = false;
    for (CLI::App* sub : app.get_subcommands({})) {
      if (CLI::Option* opt = sub->get_option_no_throw(flag)) {
        found = true;
        if (it.value().is_array()) {
          std::vector<std::string> vals;
          for (const auto& v : it.value()) vals.push_back(v.dump());
          opt->default_val(CLI::detail::join(vals, ","));
        } else if (it.value().is_string()) {
          opt->default_val(it.value().get<std::string>());
        } else {
          opt->default_val(it.value().dump());
        }
      }
    }
    if (!found)
      rmd::throw_error(rmd::ErrorCode::invalid_input,
                       "config " + path + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized-missing-data robust filtering and forecasting"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config with flag defaults");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a (possibly contaminated) series");
  int sim_T = 221;
  double sim_se = 0.35, sim_so = 1.0, sim_kappa = -1.0, sim_mu = 2.0, sim_rate = 0.0,
         sim_magnitude = 10.0;
  std::string sim_mech = "additive-shift", sim_start = "1960Q2";
  add_common(sim, opts, /*needs_input=*/false);
  sim->add_option("--T", sim_T, "series length (default mirrors 1960Q1-2015Q2 levels)");
  sim->add_option("--sigma-eps", sim_se, "state innovation sd");
  sim->add_option("--sigma-eta", sim_so, "measurement sd");
  sim->add_option("--kappa", sim_kappa, "mean reversion (omit for random-walk state)");
  sim->add_option("--mu", sim_mu, "long-run mean (with --kappa)");
  sim->add_option("--rate", sim_rate, "contamination rate");
  sim->add_option("--mechanism", sim_mech, "additive-shift | predictive-replacement");
  sim->add_option("--magnitude", sim_magnitude, "shift in obs-sd units / sd inflation factor");
  sim->add_option("--start", sim_start, "first quarter label");

  // fit
  auto* fit = app.add_subcommand("fit", "estimate parameters on the full sample");
  std::vector<double> fit_betas{1.0};
  add_common(fit, opts);
  fit->add_option("--beta", fit_betas, "beta value(s)")->delimiter(',');

  // forecast
  auto* fc = app.add_subcommand("forecast", "forecast from the end of the sample");
  double fc_beta = 1.0;
  std::vector<int> fc_horizons{1, 4, 8, 12};
  add_common(fc, opts);
  fc->add_option("--beta", fc_beta, "beta");
  fc->add_option("--horizons", fc_horizons, "forecast horizons")->delimiter(',');

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "recursive out-of-sample evaluation");
  std::vector<double> ev_grid;
  std::vector<int> ev_horizons{1, 4, 8, 12};
  std::string ev_start = "1990Q1";
  double ev_warm = 0.5;
  add_common(ev, opts);
  ev->add_option("--beta-grid", ev_grid, "beta grid")->delimiter(',');
  ev->add_option("--horizons", ev_horizons, "forecast horizons")->delimiter(',');
  ev->add_option("--eval-start", ev_start, "first forecast origin (YYYYQn)");
  ev->add_option("--warm-start-beta", ev_warm, "beta before any completed forecast");

  // select-beta
  auto* sb = app.add_subcommand("select-beta", "recursive beta selection schedule only");
  std::vector<double> sb_grid;
  std::vector<int> sb_horizons{1, 4, 8, 12};
  std::string sb_start = "1990Q1";
  double sb_warm = 0.5;
  add_common(sb, opts);
  sb->add_option("--beta-grid", sb_grid, "beta grid")->delimiter(',');
  sb->add_option("--horizons", sb_horizons, "optimizing horizons")->delimiter(',');
  sb->add_option("--eval-start", sb_start, "first origin (YYYYQn)");
  sb->add_option("--warm-start-beta", sb_warm, "beta before any completed forecast");

  try {
    // Pre-scan for --config so its values become defaults before the parse.
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string_view(argv[i]) == "--config") {
        std::ifstream in(argv[i + 1]);
        if (!in)
          rmd::throw_error(rmd::ErrorCode::io_error,
                           std::string("cannot open config ") + argv[i + 1]);
        json cfg = json::parse(in, nullptr, true, true);
        apply_config_defaults(app, cfg, argv[i + 1]);
      }
    }
    app.parse(argc, argv);

    if (sim->parsed())
      return cmd_simulate(opts, sim_T, sim_se, sim_so, sim_kappa, sim_mu, sim_rate, sim_mech,
                          sim_magnitude, sim_start);
    if (fit->parsed()) return cmd_fit(opts, fit_betas);
    if (fc->parsed()) return cmd_forecast(opts, fc_beta, fc_horizons);
    if (ev->parsed())
      return cmd_evaluate(opts, ev_grid, ev_horizons, ev_start, ev_warm, false);
    if (sb->parsed())
      return cmd_evaluate(opts, sb_grid, sb_horizons, sb_start, sb_warm, true);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  } catch (const rmd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
}
