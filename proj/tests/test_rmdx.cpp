#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rmd/data_io.hpp"
#include "rmd/errors.hpp"
#include "rmd/rmdx.hpp"

using rmd::InclusionPath;
using rmd::ModelFamily;
using rmd::PathSampler;

namespace {

rmd::TimeSeries simulate_uc(double se, double so, std::size_t T, std::uint64_t seed) {
  rmd::LinearGaussianModel m;
  m.state_sd = se;
  m.obs_sd = so;
  m.init_mean = 2.0;
  m.init_var = 1.0;
  return rmd::data::simulate_contaminated(m, T, {0.0, rmd::data::Mechanism::additive_shift,
                                                 0.0, seed})
      .observed;
}

}  // namespace

TEST_CASE("rounding of beta*T is nearest with ties away from zero") {
  CHECK(rmd::fixed_inclusion_count(10, 0.5) == 5);
  CHECK(rmd::fixed_inclusion_count(10, 0.55) == 6);  // 5.5 rounds away from zero
  CHECK(rmd::fixed_inclusion_count(10, 0.54) == 5);
  CHECK(rmd::fixed_inclusion_count(4, 1.0) == 4);
  CHECK_THROWS_AS(rmd::fixed_inclusion_count(3, 0.15), rmd::Error);  // [0.45] = 0
  CHECK_THROWS_AS(rmd::fixed_inclusion_count(10, 0.0), rmd::Error);
}

TEST_CASE("beta = 1 yields only full paths") {
  const auto paths = rmd::sample_paths({4, 1.0, 5, 99});
  for (const auto& p : paths) {
    CHECK(p.count() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(p[t]);
  }
}

TEST_CASE("sampled paths have exact size and uniform position frequencies") {
  const int n = 1000;
  const auto paths = rmd::sample_paths({10, 0.5, n, 31337});
  std::vector<int> freq(10, 0);
  for (const auto& p : paths) {
    CHECK(p.count() == 5);
    for (std::size_t t = 0; t < 10; ++t) freq[t] += p[t] ? 1 : 0;
  }
  // position inclusion ~ Binomial(n, 0.5): 4 standard errors
  const double se = std::sqrt(0.25 / n);
  for (int t = 0; t < 10; ++t)
    CHECK(std::abs(freq[t] / static_cast<double>(n) - 0.5) < 4.0 * se);
}

TEST_CASE("relabeling time preserves the multiset of inclusion counts") {
  const auto a = rmd::sample_paths({17, 0.4, 64, 5});
  const auto b = rmd::sample_paths({17, 0.4, 64, 5});
  std::multiset<std::size_t> ca, cb;
  for (const auto& p : a) ca.insert(p.count());
  for (const auto& p : b) cb.insert(p.count());
  CHECK(ca == cb);
  for (auto c : ca) CHECK(c == rmd::fixed_inclusion_count(17, 0.4));
}

TEST_CASE("exhaustive fixed-size enumeration is complete and unique") {
  const auto paths = rmd::enumerate_fixed_size_paths(8, 4);
  CHECK(paths.size() == 70);
  std::set<std::vector<std::uint8_t>> unique;
  for (const auto& p : paths) {
    CHECK(p.count() == 4);
    unique.insert(p.flags);
  }
  CHECK(unique.size() == 70);
}

TEST_CASE("under-identified guard fires before sampling") {
  const auto series = simulate_uc(0.5, 1.0, 3, 1);
  rmd::RmdxConfig c;
  c.beta = 0.34;  // round(1.02) = 1 < floor 3
  c.seed = 1;
  try {
    rmd_x_estimate(ModelFamily::uc(), series, c);
    FAIL("expected under_identified");
  } catch (const rmd::Error& e) {
    CHECK(e.code() == rmd::ErrorCode::under_identified);
  }
}

TEST_CASE("aggregated filtered means reproduce the posterior mixture by enumeration") {
  // Fixed theta, every size-4 subset of T=8 equally weighted: the estimator's
  // average filtered mean must equal the direct Gaussian-conditioning mixture.
  const std::vector<double> theta{0.6, 0.9};
  const auto series = simulate_uc(0.6, 0.9, 8, 22);

  rmd::RmdxConfig c;
  c.beta = 0.5;
  c.seed = 3;
  c.fixed_theta = theta;
  c.explicit_paths = rmd::enumerate_fixed_size_paths(8, 4);
  c.horizon_max = 4;
  const auto res = rmd_x_estimate(ModelFamily::uc(), series, c);

  rmd::LinearGaussianModel model = rmd::instantiate(ModelFamily::uc(), theta).lgm;
  std::vector<double> want(8, 0.0);
  for (const auto& path : *c.explicit_paths) {
    std::vector<int> included;
    for (int t = 0; t < 8; ++t)
      if (path[static_cast<std::size_t>(t)]) included.push_back(t);
    rmd::LinearGaussianModel m = model;
    rmd::apply_default_init(m, series, path);
    const auto cond = oracle::filtered_conditional_means(m, series.values, included);
    for (std::size_t t = 0; t < 8; ++t) want[t] += cond[t] / 70.0;
  }
  for (std::size_t t = 0; t < 8; ++t)
    CHECK(res.filtered_mean_bar[t] == doctest::Approx(want[t]).epsilon(1e-10));
}

TEST_CASE("monte carlo sampling agrees with exhaustive enumeration") {
  const std::vector<double> theta{0.6, 0.9};
  const auto series = simulate_uc(0.6, 0.9, 8, 23);

  rmd::RmdxConfig exhaustive;
  exhaustive.beta = 0.5;
  exhaustive.seed = 3;
  exhaustive.fixed_theta = theta;
  exhaustive.explicit_paths = rmd::enumerate_fixed_size_paths(8, 4);
  const auto full = rmd_x_estimate(ModelFamily::uc(), series, exhaustive);

  rmd::RmdxConfig mc;
  mc.beta = 0.5;
  mc.seed = 911;
  mc.fixed_theta = theta;
  mc.n_paths = 500;
  mc.keep_per_path = true;
  const auto sampled = rmd_x_estimate(ModelFamily::uc(), series, mc);

  // spread of per-path filtered means bounds the Monte Carlo error
  for (std::size_t t = 0; t < 8; ++t) {
    const double diff = std::abs(sampled.filtered_mean_bar[t] - full.filtered_mean_bar[t]);
    // per-path values vary on the scale of the observation noise; 3 SE bound
    // with a conservative per-path sd estimate of 1.0
    CHECK(diff < 3.0 * 1.0 / std::sqrt(500.0));
  }
}

TEST_CASE("beta = 1 collapses to the full-data fit bit-exactly") {
  const auto series = simulate_uc(0.4, 1.1, 120, 77);
  rmd::RmdxConfig c;
  c.beta = 1.0;
  c.n_paths = 64;
  c.seed = 5;
  const auto res = rmd_x_estimate(ModelFamily::uc(), series, c);
  const auto direct =
      rmd::mle_fit(ModelFamily::uc(), series, InclusionPath::all(series.size()));
  CHECK(res.theta_bar[0] == direct.theta[0]);
  CHECK(res.theta_bar[1] == direct.theta[1]);
  CHECK(res.n_paths_used == 1);
}

TEST_CASE("results are bit-identical across thread counts") {
  const auto series = simulate_uc(0.4, 1.1, 60, 78);
  rmd::RmdxConfig c1;
  c1.beta = 0.4;
  c1.n_paths = 24;
  c1.seed = 12;
  c1.threads = 1;
  auto c2 = c1;
  c2.threads = 2;
  const auto r1 = rmd_x_estimate(ModelFamily::uc(), series, c1);
  const auto r2 = rmd_x_estimate(ModelFamily::uc(), series, c2);
  CHECK(r1.theta_bar == r2.theta_bar);
  CHECK(r1.filtered_mean_bar == r2.filtered_mean_bar);
  CHECK(r1.point_avg == r2.point_avg);
  for (std::size_t h = 0; h < r1.avg_mixture.size(); ++h) {
    CHECK(r1.avg_mixture[h].means == r2.avg_mixture[h].means);
    CHECK(r1.avg_mixture[h].vars == r2.avg_mixture[h].vars);
  }
}

TEST_CASE("aggregates equal the equal-weight averages of retained paths") {
  const auto series = simulate_uc(0.5, 1.0, 80, 79);
  rmd::RmdxConfig c;
  c.beta = 0.5;
  c.n_paths = 30;
  c.seed = 21;
  c.keep_per_path = true;
  c.horizon_max = 4;
  const auto res = rmd_x_estimate(ModelFamily::uc(), series, c);
  REQUIRE(static_cast<int>(res.per_path.size()) == res.n_paths_used);

  double log_eps = 0.0, log_eta = 0.0;
  for (const auto& p : res.per_path) {
    log_eps += std::log(p.theta[0]);
    log_eta += std::log(p.theta[1]);
  }
  const double n = static_cast<double>(res.per_path.size());
  CHECK(res.theta_bar[0] == doctest::Approx(std::exp(log_eps / n)).epsilon(1e-12));
  CHECK(res.theta_bar[1] == doctest::Approx(std::exp(log_eta / n)).epsilon(1e-12));

  // mixture mean equals the aggregated point forecast
  for (std::size_t h = 0; h < res.avg_mixture.size(); ++h)
    CHECK(res.avg_mixture[h].mean() == doctest::Approx(res.point_avg[h]).epsilon(1e-12));
}

TEST_CASE("natural-scale sigma aggregation is exposed") {
  const auto series = simulate_uc(0.5, 1.0, 80, 80);
  rmd::RmdxConfig c;
  c.beta = 0.5;
  c.n_paths = 16;
  c.seed = 22;
  c.keep_per_path = true;
  c.sigma_scale = rmd::SigmaScale::natural;
  const auto res = rmd_x_estimate(ModelFamily::uc(), series, c);
  double eps = 0.0;
  for (const auto& p : res.per_path) eps += p.theta[0];
  CHECK(res.theta_bar[0] ==
        doctest::Approx(eps / static_cast<double>(res.per_path.size())).epsilon(1e-12));
}

TEST_CASE("universal path failure raises estimation_failure") {
  const auto series = simulate_uc(0.5, 1.0, 60, 81);
  rmd::RmdxConfig c;
  c.beta = 0.5;
  c.n_paths = 10;
  c.seed = 23;
  c.optimizer.max_iterations = 1;  // every fit fails to converge
  try {
    rmd_x_estimate(ModelFamily::uc(), series, c);
    FAIL("expected estimation_failure");
  } catch (const rmd::Error& e) {
    CHECK(e.code() == rmd::ErrorCode::estimation_failure);
  }
}
