#include "rmd/rng.hpp"

#include "rmd/errors.hpp"
#include "rmd/stats.hpp"

namespace rmd {

double Rng::normal() noexcept { return norm_ppf(uniform_open()); }

std::vector<std::uint32_t> systematic_resample(const std::vector<double>& weights,
                                               std::size_t n_out, double offset01) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0))
    throw_error(ErrorCode::filter_degeneracy, "systematic_resample: zero total weight");

  std::vector<std::uint32_t> out;
  out.reserve(n_out);
  const double step = total / static_cast<double>(n_out);
  double pointer = offset01 * step;
  double cum = weights[0];
  std::size_t idx = 0;
  for (std::size_t k = 0; k < n_out; ++k) {
    while (pointer > cum && idx + 1 < weights.size()) cum += weights[++idx];
    out.push_back(static_cast<std::uint32_t>(idx));
    pointer += step;
  }
  return out;
}

}  // namespace rmd
