#include "rmd/data_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rmd/errors.hpp"
#include "rmd/kalman.hpp"
#include "rmd/rng.hpp"

namespace rmd::data {

namespace {
constexpr std::uint64_t kSimStream = 0x73696Dull;

void require_contiguous(const std::vector<YearQuarter>& index) {
  for (std::size_t t = 1; t < index.size(); ++t)
    if (index[t].serial() != index[t - 1].serial() + 1)
      throw_error(ErrorCode::invalid_input,
                  "quarters not contiguous at " + index[t - 1].str() + " -> " + index[t].str());
}
}  // namespace

void PriceIndexSeries::validate() const {
  if (level.empty() || level.size() != index.size())
    throw_error(ErrorCode::invalid_input, "empty or misaligned price-index series");
  for (double p : level)
    if (!(p > 0.0) || !std::isfinite(p))
      throw_error(ErrorCode::invalid_input, "price-index levels must be positive and finite");
  require_contiguous(index);
}

TimeSeries to_inflation(const PriceIndexSeries& series, bool annualize) {
  series.validate();
  if (series.level.size() < 2)
    throw_error(ErrorCode::invalid_input, "need at least two index levels");
  const double scale = annualize ? 400.0 : 1.0;
  TimeSeries out;
  out.index.assign(series.index.begin() + 1, series.index.end());
  out.values.reserve(series.level.size() - 1);
  for (std::size_t t = 1; t < series.level.size(); ++t)
    out.values.push_back(scale * (std::log(series.level[t]) - std::log(series.level[t - 1])));
  return out;
}

Mechanism parse_mechanism(std::string_view name) {
  if (name == "additive-shift" || name == "additive_shift") return Mechanism::additive_shift;
  if (name == "predictive-replacement" || name == "predictive_replacement")
    return Mechanism::predictive_replacement;
  throw_error(ErrorCode::invalid_input, "unknown contamination mechanism: " + std::string(name));
}

std::string mechanism_name(Mechanism m) {
  return m == Mechanism::additive_shift ? "additive_shift" : "predictive_replacement";
}

SimulatedData simulate_contaminated(const LinearGaussianModel& model, std::size_t length,
                                    const ContaminationSpec& spec, YearQuarter start) {
  model.validate();
  if (length < 2) throw_error(ErrorCode::invalid_input, "simulation length must be >= 2");
  if (!(spec.rate >= 0.0 && spec.rate < 1.0))
    throw_error(ErrorCode::invalid_input, "contamination rate must lie in [0, 1)");

  Rng rng = Rng::stream(spec.seed, {kSimStream});
  SimulatedData sim;
  sim.model = model;
  sim.spec = spec;
  sim.latent.reserve(length);
  sim.true_inclusion.flags.assign(length, 1);

  std::vector<double> y(length);
  double x = model.init_mean + std::sqrt(model.init_var) * rng.normal();
  for (std::size_t t = 0; t < length; ++t) {
    x = model.state_const + model.state_coef * x + model.state_sd * rng.normal();
    sim.latent.push_back(x);
    y[t] = x + model.obs_sd * rng.normal();
  }

  // Contamination runs as a second pass over the observed sequence so the
  // predictive-replacement mechanism can condition on what was actually
  // observed before t.
  GaussianBelief belief{model.init_mean, model.init_var};
  for (std::size_t t = 0; t < length; ++t) {
    const bool corrupt = spec.rate > 0.0 && rng.uniform() < spec.rate;
    if (corrupt) {
      sim.true_inclusion.flags[t] = 0;
      if (spec.mechanism == Mechanism::additive_shift) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        y[t] += sign * spec.magnitude * model.obs_sd;
      } else {
        const auto pred = kalman_step(belief, model, std::nullopt);
        const double sd =
            spec.magnitude * std::sqrt(pred.posterior.var + model.obs_sd * model.obs_sd);
        y[t] = pred.posterior.mean + sd * rng.normal();
      }
    }
    belief = kalman_step(belief, model, y[t]).posterior;
  }

  sim.observed = TimeSeries::from_values(std::move(y), start);
  return sim;
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::io_error, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("date,value", 0) != 0)
    throw_error(ErrorCode::invalid_input, "expected 'date,value' header in " + path.string());
  TimeSeries out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw_error(ErrorCode::invalid_input, "malformed row: " + line);
    out.index.push_back(YearQuarter::parse(std::string_view(line).substr(0, comma)));
    try {
      out.values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw_error(ErrorCode::invalid_input, "malformed value in row: " + line);
    }
  }
  out.validate();
  require_contiguous(out.index);
  return out;
}

PriceIndexSeries read_levels_csv(const std::filesystem::path& path) {
  const TimeSeries raw = read_series_csv(path);
  PriceIndexSeries out;
  out.index = raw.index;
  out.level = raw.values;
  out.validate();
  return out;
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path.string());
  out << "date,value\n";
  out.precision(17);
  for (std::size_t t = 0; t < series.size(); ++t)
    out << series.index[t].str() << ',' << series.values[t] << '\n';
  if (!out) throw_error(ErrorCode::io_error, "write failed for " + path.string());
}

void write_truth_json(const std::filesystem::path& path, const SimulatedData& sim) {
  nlohmann::json j;
  j["seed"] = sim.spec.seed;
  j["rate"] = sim.spec.rate;
  j["mechanism"] = mechanism_name(sim.spec.mechanism);
  j["magnitude"] = sim.spec.magnitude;
  j["model"] = {{"state_const", sim.model.state_const}, {"state_coef", sim.model.state_coef},
                {"state_sd", sim.model.state_sd},       {"obs_sd", sim.model.obs_sd},
                {"init_mean", sim.model.init_mean},     {"init_var", sim.model.init_var}};
  j["latent"] = sim.latent;
  std::vector<int> inclusion(sim.true_inclusion.flags.begin(), sim.true_inclusion.flags.end());
  j["true_inclusion"] = inclusion;
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw_error(ErrorCode::io_error, "write failed for " + path.string());
}

}  // namespace rmd::data
