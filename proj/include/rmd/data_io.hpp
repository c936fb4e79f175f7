#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "rmd/model.hpp"
#include "rmd/time_series.hpp"

namespace rmd::data {

// Quarterly price-index levels (strictly positive, contiguous quarters).
struct PriceIndexSeries {
  std::vector<YearQuarter> index;
  std::vector<double> level;

  void validate() const;
};

// Log quarterly inflation from index levels: 400 * (ln P_t - ln P_{t-1}) by
// default (annualized percent), or the raw log difference. Output drops the
// first quarter.
TimeSeries to_inflation(const PriceIndexSeries& series, bool annualize = true);

enum class Mechanism { additive_shift, predictive_replacement };

Mechanism parse_mechanism(std::string_view name);
std::string mechanism_name(Mechanism m);

// Contamination process applied on top of a clean simulation: each time is
// corrupted independently with probability `rate`. additive_shift adds
// +-magnitude * obs_sd with a random sign; predictive_replacement redraws the
// observation from the model's one-step predictive with its standard
// deviation inflated by `magnitude`.
struct ContaminationSpec {
  double rate = 0.0;
  Mechanism mechanism = Mechanism::additive_shift;
  double magnitude = 10.0;
  std::uint64_t seed = 0;
};

struct SimulatedData {
  TimeSeries observed;
  std::vector<double> latent;      // true x path
  InclusionPath true_inclusion;    // C_t = 1 where the observation is clean
  LinearGaussianModel model;
  ContaminationSpec spec;
};

SimulatedData simulate_contaminated(const LinearGaussianModel& model, std::size_t length,
                                    const ContaminationSpec& spec,
                                    YearQuarter start = {1960, 2});

// CSV schema: header "date,value", dates as YYYYQn, contiguous quarters.
TimeSeries read_series_csv(const std::filesystem::path& path);
PriceIndexSeries read_levels_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series);

// Sidecar JSON with the simulation ground truth (latent path, true inclusion,
// parameters, seed).
void write_truth_json(const std::filesystem::path& path, const SimulatedData& sim);

}  // namespace rmd::data
