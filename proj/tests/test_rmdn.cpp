#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "rmd/data_io.hpp"
#include "rmd/errors.hpp"
#include "rmd/rmdn.hpp"
#include "rmd/stats.hpp"

using rmd::ModelFamily;
using rmd::RmdnConfig;
using rmd::ThetaParticleSystem;

namespace {

rmd::data::SimulatedData simulate_uc(double se, double so, std::size_t T, std::uint64_t seed,
                                     double rate = 0.0, double magnitude = 10.0) {
  rmd::LinearGaussianModel m;
  m.state_sd = se;
  m.obs_sd = so;
  m.init_mean = 2.0;
  m.init_var = 1.0;
  return rmd::data::simulate_contaminated(
      m, T, {rate, rmd::data::Mechanism::additive_shift, magnitude, seed});
}

RmdnConfig point_mass_config(std::vector<double> theta, int cap = 64, std::uint64_t seed = 1) {
  RmdnConfig c;
  c.fixed_theta = std::move(theta);
  c.component_cap = cap;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("filtered inclusion probability collapses to beta under the endogenous choice") {
  rmd::Rng rng = rmd::Rng::stream(3, {1});
  for (int i = 0; i < 200; ++i) {
    const double beta = rng.uniform();
    const double dens = std::exp(6.0 * rng.normal());
    CHECK(rmd::filtered_inclusion_probability(beta, dens, dens) ==
          doctest::Approx(beta).epsilon(1e-14));
  }
  // and reacts in the right direction otherwise
  CHECK(rmd::filtered_inclusion_probability(0.5, 2.0, 1.0) > 0.5);
  CHECK(rmd::filtered_inclusion_probability(0.5, 1.0, 2.0) < 0.5);
}

TEST_CASE("single-component predictive density is the closed-form Gaussian") {
  const auto sim = simulate_uc(0.5, 1.0, 4, 11);
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 1.0,
                                          point_mass_config({0.5, 1.0}));
  // before any update: x0 prior (first obs, var 100); predict + measurement
  const double first = sim.observed.values[0];
  const double want_var = 100.0 + 0.25 + 1.0;
  CHECK(system.predictive_density(0.3) ==
        doctest::Approx(rmd::norm_pdf(0.3, first, want_var)).epsilon(1e-12));
  CHECK_THROWS_AS(system.predictive_density(std::nan("")), rmd::Error);
}

TEST_CASE("predictive density is the weighted mixture over particles and components") {
  // run a short real fit, then compare against a direct double loop
  const auto sim = simulate_uc(0.5, 1.0, 6, 12);
  RmdnConfig c;
  c.n_theta = 5;
  c.component_cap = 64;
  c.seed = 99;
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 0.5, c);
  for (int t = 0; t < 3; ++t) system.update(sim.observed.values[static_cast<std::size_t>(t)]);

  const double y = 1.234;
  const auto w = system.normalized_weights();
  double direct = 0.0;
  for (std::size_t j = 0; j < system.particles().size(); ++j) {
    const auto& p = system.particles()[j];
    for (std::size_t i = 0; i < p.n_components(); ++i) {
      const double pm = p.model.state_const + p.model.state_coef * p.comp_mean[i];
      const double pv = p.model.state_coef * p.model.state_coef * p.comp_var[i] +
                        p.model.state_sd * p.model.state_sd;
      direct += w[j] * p.comp_weight[i] *
                std::exp(rmd::norm_logpdf(y, pm, pv + p.model.obs_sd * p.model.obs_sd));
    }
  }
  CHECK(system.predictive_density(y) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("beta = 1 reduces to the exact Kalman filter") {
  const auto sim = simulate_uc(0.4, 0.9, 60, 13);
  const std::vector<double> theta{0.4, 0.9};
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 1.0,
                                          point_mass_config(theta));
  for (double y : sim.observed.values) {
    system.update(y);
    CHECK(system.particles()[0].n_components() == 1);  // no exclude branches survive
  }

  rmd::LinearGaussianModel m = rmd::instantiate(ModelFamily::uc(), theta).lgm;
  rmd::apply_default_init(m, sim.observed, rmd::InclusionPath::all(sim.observed.size()));
  const auto exact =
      rmd::filter_series(m, sim.observed, rmd::InclusionPath::all(sim.observed.size()));
  CHECK(system.log_evidence() == doctest::Approx(exact.loglik).epsilon(1e-10));
  CHECK(system.particles()[0].comp_mean[0] ==
        doctest::Approx(exact.filtered.back().mean).epsilon(1e-12));
  CHECK(system.particles()[0].comp_var[0] ==
        doctest::Approx(exact.filtered.back().var).epsilon(1e-12));
}

TEST_CASE("beta = 0 ignores the data entirely") {
  const auto sim = simulate_uc(0.4, 0.9, 20, 14);
  RmdnConfig c;
  c.n_theta = 64;
  c.seed = 4;
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 0.0, c);
  const auto w0 = system.normalized_weights();
  for (double y : sim.observed.values) system.update(y);

  CHECK(system.log_evidence() == 0.0);
  CHECK(system.normalized_weights() == w0);
  CHECK(system.rejuvenation_count() == 0);

  // beliefs are pure prior propagation
  const auto& p = system.particles()[0];
  REQUIRE(p.n_components() == 1);
  rmd::GaussianBelief b{p.model.init_mean, p.model.init_var};
  for (std::size_t t = 0; t < sim.observed.size(); ++t)
    b = rmd::kalman_step(b, p.model, std::nullopt).posterior;
  CHECK(p.comp_mean[0] == doctest::Approx(b.mean).epsilon(1e-12));
  CHECK(p.comp_var[0] == doctest::Approx(b.var).epsilon(1e-12));

  // posterior equals the prior: compare thetas against fresh prior draws
  std::vector<double> post_eps, fresh_eps;
  rmd::PriorSpec prior;
  for (std::size_t j = 0; j < system.particles().size(); ++j)
    post_eps.push_back(system.particles()[j].theta[0]);
  rmd::Rng rng = rmd::Rng::stream(777, {1});
  for (int j = 0; j < 4096; ++j) fresh_eps.push_back(prior.sample(ModelFamily::uc(), rng)[0]);
  CHECK(rmd::ks_two_sample_pvalue(post_eps, fresh_eps) > 0.01);
}

TEST_CASE("uncapped filter reproduces the exhaustive inclusion-path enumeration") {
  const auto sim = simulate_uc(0.5, 1.0, 4, 15);
  const std::vector<double> theta{0.5, 1.0};
  const double beta = 0.3;

  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, beta,
                                          point_mass_config(theta, 64));
  for (double y : sim.observed.values) system.update(y);

  rmd::LinearGaussianModel m = rmd::instantiate(ModelFamily::uc(), theta).lgm;
  rmd::apply_default_init(m, sim.observed, rmd::InclusionPath::all(4));
  const auto oracle_res = oracle::enumerate_inclusion_posterior(m, sim.observed.values, beta);
  REQUIRE(oracle_res.branches.size() == 16);

  // match branches by their inclusion history
  const auto& p = system.particles()[0];
  REQUIRE(p.n_components() == 16);
  std::map<std::vector<int>, std::size_t> lookup;
  for (std::size_t b = 0; b < oracle_res.branches.size(); ++b)
    lookup[oracle_res.branches[b].bits] = b;
  for (std::size_t i = 0; i < 16; ++i) {
    std::vector<int> bits(4);
    for (std::size_t t = 0; t < 4; ++t) bits[t] = p.comp_ancestry[i].included_at(t) ? 1 : 0;
    REQUIRE(lookup.count(bits) == 1);
    const auto& ob = oracle_res.branches[lookup[bits]];
    CHECK(p.comp_weight[i] == doctest::Approx(std::exp(ob.logw)).epsilon(1e-10));
    CHECK(p.comp_mean[i] == doctest::Approx(ob.mean).epsilon(1e-10));
    CHECK(p.comp_var[i] == doctest::Approx(ob.var).epsilon(1e-10));
  }

  // log evidence and predictive history agree with the enumeration
  CHECK(system.log_evidence() == doctest::Approx(oracle_res.log_evidence).epsilon(1e-10));
  for (std::size_t t = 0; t < 4; ++t)
    CHECK(system.log_predictive_history()[t] ==
          doctest::Approx(oracle_res.log_predictive[t]).epsilon(1e-10));

  // smoothed inclusion matches exactly in the uncapped case
  const auto sm = system.smoothed();
  for (std::size_t t = 0; t < 4; ++t)
    CHECK(sm.probs[t] == doctest::Approx(oracle_res.smoothed[t]).epsilon(1e-10));
}

TEST_CASE("capped filter approximates the enumeration across seeds") {
  const auto sim = simulate_uc(0.5, 1.0, 6, 16);
  const std::vector<double> theta{0.5, 1.0};
  const double beta = 0.4;

  rmd::LinearGaussianModel m = rmd::instantiate(ModelFamily::uc(), theta).lgm;
  rmd::apply_default_init(m, sim.observed, rmd::InclusionPath::all(6));
  const auto exact = oracle::enumerate_inclusion_posterior(m, sim.observed.values, beta);

  const int n_seeds = 30;
  std::vector<std::vector<double>> probs(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    auto system = ThetaParticleSystem::init(
        ModelFamily::uc(), sim.observed, beta,
        point_mass_config(theta, 12, static_cast<std::uint64_t>(s + 1)));
    for (double y : sim.observed.values) system.update(y);
    probs[static_cast<std::size_t>(s)] = system.smoothed().probs;
  }
  for (std::size_t t = 0; t < 6; ++t) {
    double mean = 0.0, var = 0.0;
    for (const auto& p : probs) mean += p[t];
    mean /= n_seeds;
    for (const auto& p : probs) var += (p[t] - mean) * (p[t] - mean);
    var /= (n_seeds - 1);
    const double se = std::sqrt(var / n_seeds) + 1e-9;
    CHECK(std::abs(mean - exact.smoothed[t]) < 3.0 * se + 0.02);
  }
}

TEST_CASE("weights stay normalized after every update") {
  const auto sim = simulate_uc(0.4, 1.0, 40, 17);
  RmdnConfig c;
  c.n_theta = 32;
  c.component_cap = 8;
  c.seed = 6;
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 0.3, c);
  for (double y : sim.observed.values) {
    system.update(y);
    const auto w = system.normalized_weights();
    double total = 0.0;
    for (double v : w) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    for (const auto& p : system.particles()) {
      double inner = 0.0;
      for (double v : p.comp_weight) inner += v;
      CHECK(inner == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("smoothed inclusion is all ones at beta = 1 and guarded mid-filter") {
  const auto sim = simulate_uc(0.4, 1.0, 10, 18);
  auto system = ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 1.0,
                                          point_mass_config({0.4, 1.0}));
  system.update(sim.observed.values[0]);
  CHECK_THROWS_AS(system.smoothed(), rmd::Error);
  for (std::size_t t = 1; t < sim.observed.size(); ++t) system.update(sim.observed.values[t]);
  for (double prob : system.smoothed().probs) CHECK(prob == 1.0);
}

TEST_CASE("smoothed inclusion is calibrated on clean data") {
  const auto sim = simulate_uc(0.35, 0.5, 300, 19);
  RmdnConfig c;
  c.n_theta = 128;
  c.component_cap = 32;
  c.seed = 7;
  const auto fit = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.5, c);
  double mean = 0.0;
  for (double p : fit.smoothed.probs) mean += p;
  mean /= static_cast<double>(fit.smoothed.probs.size());
  CHECK(std::abs(mean - 0.5) < 0.1);
}

TEST_CASE("contaminated points get lower smoothed inclusion") {
  const auto sim = simulate_uc(0.35, 0.5, 200, 20, 0.10, 10.0);
  RmdnConfig c;
  c.n_theta = 256;
  c.component_cap = 32;
  c.seed = 8;
  c.threads = 2;
  const auto fit = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.15, c);

  std::vector<double> clean, dirty;
  for (std::size_t t = 0; t < sim.observed.size(); ++t) {
    if (sim.true_inclusion[t])
      clean.push_back(fit.smoothed.probs[t]);
    else
      dirty.push_back(fit.smoothed.probs[t]);
  }
  REQUIRE(dirty.size() > 5);
  CHECK(rmd::rank_sum_pvalue_less(dirty, clean) < 0.01);
}

TEST_CASE("posterior credible intervals cover the truth at beta = 1") {
  const double true_eps = 0.35, true_eta = 0.8;
  const int reps = 100;
  int covered_eps = 0, covered_eta = 0;
  for (int r = 0; r < reps; ++r) {
    const auto sim = simulate_uc(true_eps, true_eta, 500, 3000 + static_cast<unsigned>(r));
    RmdnConfig c;
    c.n_theta = 256;
    c.component_cap = 4;
    c.seed = 5000 + static_cast<unsigned>(r);
    c.threads = 2;
    const auto fit = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 1.0, c);
    const double qs[] = {0.025, 0.975};
    const auto ci_eps = fit.system.posterior_quantiles(0, qs);
    const auto ci_eta = fit.system.posterior_quantiles(1, qs);
    covered_eps += ci_eps[0] <= true_eps && true_eps <= ci_eps[1];
    covered_eta += ci_eta[0] <= true_eta && true_eta <= ci_eta[1];
  }
  CHECK(covered_eps >= 90);
  CHECK(covered_eta >= 90);
}

TEST_CASE("results are bit-identical across thread counts") {
  const auto sim = simulate_uc(0.4, 1.0, 50, 21);
  RmdnConfig c1;
  c1.n_theta = 48;
  c1.component_cap = 16;
  c1.seed = 31;
  c1.threads = 1;
  auto c2 = c1;
  c2.threads = 2;
  const auto f1 = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.3, c1);
  const auto f2 = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.3, c2);
  CHECK(f1.system.log_evidence() == f2.system.log_evidence());
  CHECK(f1.smoothed.probs == f2.smoothed.probs);
  for (std::size_t j = 0; j < f1.system.particles().size(); ++j) {
    CHECK(f1.system.particles()[j].theta == f2.system.particles()[j].theta);
    CHECK(f1.system.particles()[j].log_weight == f2.system.particles()[j].log_weight);
  }
}

TEST_CASE("fixed-lag smoother agrees with the full smoother near the end") {
  const auto sim = simulate_uc(0.4, 1.0, 60, 22);
  RmdnConfig c;
  c.n_theta = 32;
  c.component_cap = 16;
  c.seed = 44;
  const auto plain = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.4, c);
  auto c2 = c;
  c2.fixed_lag = 10;
  const auto lagged = rmd::fit_rmd_n(ModelFamily::uc(), sim.observed, 0.4, c2);
  for (std::size_t t = 0; t < 60; ++t) {
    CHECK(lagged.smoothed.probs[t] >= 0.0);
    CHECK(lagged.smoothed.probs[t] <= 1.0);
  }
  // beyond the lag horizon the two coincide
  for (std::size_t t = 51; t < 60; ++t)
    CHECK(lagged.smoothed.probs[t] == doctest::Approx(plain.smoothed.probs[t]).epsilon(1e-12));
}

TEST_CASE("uc-t particles run through the scale-mixture measurement") {
  const auto sim = simulate_uc(0.4, 1.0, 40, 23);
  RmdnConfig c;
  c.n_theta = 24;
  c.component_cap = 24;
  c.seed = 51;
  const auto fit = rmd::fit_rmd_n(ModelFamily::uc_t(), sim.observed, 1.0, c);
  CHECK(std::isfinite(fit.system.log_evidence()));
  const double qs[] = {0.5};
  CHECK(fit.system.posterior_quantiles(2, qs)[0] > 2.0);  // nu stays in its support
  // at beta = 1 the include branch splits over 10 measurement components
  CHECK(fit.system.particles()[0].n_components() > 1);
}

TEST_CASE("invalid configurations are rejected") {
  const auto sim = simulate_uc(0.4, 1.0, 10, 24);
  RmdnConfig c;
  c.n_theta = 0;
  CHECK_THROWS_AS(ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 0.5, c),
                  rmd::Error);
  RmdnConfig c2;
  CHECK_THROWS_AS(ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 1.5, c2),
                  rmd::Error);
  RmdnConfig c3;
  c3.fixed_theta = std::vector<double>{0.4};
  CHECK_THROWS_AS(ThetaParticleSystem::init(ModelFamily::uc(), sim.observed, 0.5, c3),
                  rmd::Error);
}
