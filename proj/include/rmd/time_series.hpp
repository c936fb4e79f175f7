#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rmd {

// Calendar quarter label, serialized as "YYYYQn".
struct YearQuarter {
  int year = 1960;
  int quarter = 1;  // 1..4

  static YearQuarter parse(std::string_view text);
  std::string str() const;

  int serial() const noexcept { return year * 4 + (quarter - 1); }
  YearQuarter plus(int quarters) const noexcept {
    const int s = serial() + quarters;
    int y = s / 4, q = s % 4;
    if (q < 0) {
      q += 4;
      y -= 1;
    }
    return {y, q + 1};
  }
  auto operator<=>(const YearQuarter&) const = default;
};

// Ordered scalar observations with a calendar index.
struct TimeSeries {
  std::vector<YearQuarter> index;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  // Requires: index strictly increasing, values finite, length >= 1,
  // index/values the same length. Throws invalid_input otherwise.
  void validate() const;

  // The first n observations.
  TimeSeries prefix(std::size_t n) const;

  static TimeSeries from_values(std::vector<double> values, YearQuarter start = {1960, 1});
};

// Boolean per-time inclusion flags: flags[t] = 1 means the observation at t
// is treated as informative, 0 means it is treated as missing.
struct InclusionPath {
  std::vector<std::uint8_t> flags;

  static InclusionPath all(std::size_t n, bool value = true) {
    return InclusionPath{std::vector<std::uint8_t>(n, value ? 1 : 0)};
  }
  std::size_t size() const noexcept { return flags.size(); }
  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto f : flags) c += f != 0;
    return c;
  }
  bool operator[](std::size_t t) const noexcept { return flags[t] != 0; }
};

}  // namespace rmd
