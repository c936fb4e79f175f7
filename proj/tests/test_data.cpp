#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rmd/data_io.hpp"
#include "rmd/errors.hpp"

using namespace rmd::data;

TEST_CASE("inflation transform basics") {
  PriceIndexSeries s;
  s.index = {{1960, 1}, {1960, 2}};
  s.level = {100.0, 100.0};
  CHECK(to_inflation(s).values[0] == 0.0);

  s.level = {100.0, 101.0};
  CHECK(to_inflation(s).values[0] == doctest::Approx(400.0 * std::log(1.01)).epsilon(1e-12));
  CHECK(to_inflation(s).values[0] == doctest::Approx(3.98026).epsilon(1e-4));
  CHECK(to_inflation(s, false).values[0] == doctest::Approx(std::log(1.01)).epsilon(1e-12));

  PriceIndexSeries single;
  single.index = {{1960, 1}};
  single.level = {100.0};
  CHECK_THROWS_AS(to_inflation(single), rmd::Error);

  PriceIndexSeries bad;
  bad.index = {{1960, 1}, {1960, 2}};
  bad.level = {100.0, -1.0};
  CHECK_THROWS_AS(to_inflation(bad), rmd::Error);

  PriceIndexSeries gap;
  gap.index = {{1960, 1}, {1960, 3}};
  gap.level = {100.0, 101.0};
  CHECK_THROWS_AS(to_inflation(gap), rmd::Error);
}

TEST_CASE("inflation transform inverts back to log levels") {
  PriceIndexSeries s;
  for (int t = 0; t < 30; ++t) {
    s.index.push_back(rmd::YearQuarter{1960, 1}.plus(t));
    s.level.push_back(100.0 * std::exp(0.01 * t + 0.002 * t * t / 30.0));
  }
  const auto infl = to_inflation(s);
  double log_level = std::log(s.level[0]);
  for (std::size_t t = 0; t < infl.size(); ++t) {
    log_level += infl.values[t] / 400.0;
    CHECK(log_level == doctest::Approx(std::log(s.level[t + 1])).epsilon(1e-12));
  }
}

TEST_CASE("clean simulation has all-ones inclusion and matches its seed") {
  rmd::LinearGaussianModel m;
  m.state_sd = 0.4;
  m.obs_sd = 1.0;
  const auto a = simulate_contaminated(m, 50, {0.0, Mechanism::additive_shift, 10.0, 42});
  const auto b = simulate_contaminated(m, 50, {0.0, Mechanism::additive_shift, 10.0, 42});
  CHECK(a.observed.values == b.observed.values);
  CHECK(a.true_inclusion.count() == 50);
  const auto c = simulate_contaminated(m, 50, {0.0, Mechanism::additive_shift, 10.0, 43});
  CHECK(a.observed.values != c.observed.values);
}

TEST_CASE("contamination fraction concentrates at the configured rate") {
  rmd::LinearGaussianModel m;
  m.state_sd = 0.4;
  m.obs_sd = 1.0;
  const std::size_t T = 10000;
  const auto sim = simulate_contaminated(m, T, {0.1, Mechanism::additive_shift, 10.0, 7});
  const double frac =
      1.0 - static_cast<double>(sim.true_inclusion.count()) / static_cast<double>(T);
  const double se = std::sqrt(0.1 * 0.9 / static_cast<double>(T));
  CHECK(std::abs(frac - 0.1) < 3.0 * se);

  // contaminated observations sit magnitude * obs_sd away from the clean value
  int checked = 0;
  for (std::size_t t = 0; t < T && checked < 50; ++t) {
    if (!sim.true_inclusion[t]) {
      const double clean_residual = std::abs(sim.observed.values[t] - sim.latent[t]);
      CHECK(clean_residual > 5.0);  // 10 sigma shift minus noise
      ++checked;
    }
  }
}

TEST_CASE("predictive replacement stays on the observation scale") {
  rmd::LinearGaussianModel m;
  m.state_sd = 0.4;
  m.obs_sd = 1.0;
  m.init_mean = 2.0;
  const auto sim =
      simulate_contaminated(m, 2000, {0.2, Mechanism::predictive_replacement, 3.0, 17});
  CHECK(sim.true_inclusion.count() < 1900);
  for (double v : sim.observed.values) CHECK(std::isfinite(v));
}

TEST_CASE("first differences match the moving-average implication") {
  // For the random-walk-plus-noise model, lag-1 autocovariance of the first
  // differences equals -obs_sd^2.
  rmd::LinearGaussianModel m;
  m.state_sd = 0.5;
  m.obs_sd = 1.0;
  const std::size_t T = 100000;
  const auto sim = simulate_contaminated(m, T, {0.0, Mechanism::additive_shift, 0.0, 99});
  std::vector<double> diff(T - 1);
  for (std::size_t t = 1; t < T; ++t) diff[t - 1] = sim.observed.values[t] -
                                                    sim.observed.values[t - 1];
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(diff.size());
  double gamma0 = 0.0, gamma1 = 0.0;
  for (std::size_t t = 0; t < diff.size(); ++t) {
    gamma0 += (diff[t] - mean) * (diff[t] - mean);
    if (t > 0) gamma1 += (diff[t] - mean) * (diff[t - 1] - mean);
  }
  gamma0 /= static_cast<double>(diff.size());
  gamma1 /= static_cast<double>(diff.size());

  const double want = -m.obs_sd * m.obs_sd;
  const double se = std::sqrt((gamma0 * gamma0 + 2.0 * gamma1 * gamma1) /
                              static_cast<double>(diff.size()));
  CHECK(std::abs(gamma1 - want) < 4.0 * se);
}

TEST_CASE("csv round trip and schema validation") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rmd_data_test";
  fs::create_directories(dir);

  rmd::LinearGaussianModel m;
  m.state_sd = 0.4;
  m.obs_sd = 1.0;
  const auto sim = simulate_contaminated(m, 25, {0.1, Mechanism::additive_shift, 10.0, 5});
  write_series_csv(dir / "series.csv", sim.observed);
  const auto back = read_series_csv(dir / "series.csv");
  CHECK(back.values == sim.observed.values);
  CHECK(back.index.front().str() == sim.observed.index.front().str());

  write_truth_json(dir / "truth.json", sim);
  CHECK(fs::file_size(dir / "truth.json") > 100);

  {
    std::FILE* f = std::fopen((dir / "bad.csv").string().c_str(), "w");
    std::fputs("time,value\n1960Q1,1.0\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_series_csv(dir / "bad.csv"), rmd::Error);
  CHECK_THROWS_AS(read_series_csv(dir / "missing.csv"), rmd::Error);

  {
    std::FILE* f = std::fopen((dir / "gap.csv").string().c_str(), "w");
    std::fputs("date,value\n1960Q1,1.0\n1960Q3,2.0\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_series_csv(dir / "gap.csv"), rmd::Error);
  fs::remove_all(dir);
}

TEST_CASE("quarter labels parse and advance") {
  const auto q = rmd::YearQuarter::parse("1990Q1");
  CHECK(q.year == 1990);
  CHECK(q.quarter == 1);
  CHECK(q.plus(5).str() == "1991Q2");
  CHECK(q.plus(-1).str() == "1989Q4");
  CHECK_THROWS_AS(rmd::YearQuarter::parse("1990"), rmd::Error);
  CHECK_THROWS_AS(rmd::YearQuarter::parse("1990Q5"), rmd::Error);
  CHECK_THROWS_AS(rmd::YearQuarter::parse("Q1"), rmd::Error);
}
