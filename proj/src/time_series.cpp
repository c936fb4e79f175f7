#include "rmd/time_series.hpp"

#include <cmath>
#include <charconv>

#include "rmd/errors.hpp"

namespace rmd {

YearQuarter YearQuarter::parse(std::string_view text) {
  const auto qpos = text.find_first_of("Qq");
  if (qpos == std::string_view::npos || qpos == 0 || qpos + 1 >= text.size())
    throw_error(ErrorCode::invalid_input, "bad quarter label: " + std::string(text));
  int year = 0, quarter = 0;
  const auto* b = text.data();
  auto r1 = std::from_chars(b, b + qpos, year);
  auto r2 = std::from_chars(b + qpos + 1, b + text.size(), quarter);
  if (r1.ec != std::errc() || r1.ptr != b + qpos || r2.ec != std::errc() ||
      r2.ptr != b + text.size() || quarter < 1 || quarter > 4)
    throw_error(ErrorCode::invalid_input, "bad quarter label: " + std::string(text));
  return {year, quarter};
}

std::string YearQuarter::str() const {
  return std::to_string(year) + "Q" + std::to_string(quarter);
}

void TimeSeries::validate() const {
  if (values.empty()) throw_error(ErrorCode::invalid_input, "time series is empty");
  if (index.size() != values.size())
    throw_error(ErrorCode::invalid_input, "time series index/value length mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw_error(ErrorCode::invalid_input, "non-finite observation");
  for (std::size_t t = 1; t < index.size(); ++t)
    if (!(index[t - 1] < index[t]))
      throw_error(ErrorCode::invalid_input, "time series index not strictly increasing");
}

TimeSeries TimeSeries::prefix(std::size_t n) const {
  TimeSeries out;
  out.index.assign(index.begin(), index.begin() + std::min(n, index.size()));
  out.values.assign(values.begin(), values.begin() + std::min(n, values.size()));
  return out;
}

TimeSeries TimeSeries::from_values(std::vector<double> values, YearQuarter start) {
  TimeSeries out;
  out.index.reserve(values.size());
  for (std::size_t t = 0; t < values.size(); ++t)
    out.index.push_back(start.plus(static_cast<int>(t)));
  out.values = std::move(values);
  return out;
}

}  // namespace rmd
