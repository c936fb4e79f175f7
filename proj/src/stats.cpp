#include "rmd/stats.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rmd/errors.hpp"

namespace rmd {

double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw_error(ErrorCode::invalid_input, "norm_ppf: p outside [0,1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

double scaled_t_logpdf(double x, double mean, double var, double dof) {
  if (!(dof > 2.0) || !(var > 0.0))
    throw_error(ErrorCode::invalid_input, "scaled_t_logpdf: need dof > 2 and var > 0");
  const double s2 = var * (dof - 2.0) / dof;
  const double z2 = (x - mean) * (x - mean) / s2;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(M_PI * dof * s2) - 0.5 * (dof + 1.0) * std::log1p(z2 / dof);
}

double gamma_quantile(double p, double shape, double scale) {
  if (!(p > 0.0 && p < 1.0) || !(shape > 0.0) || !(scale > 0.0))
    throw_error(ErrorCode::invalid_input, "gamma_quantile: bad arguments");
  return boost::math::gamma_p_inv(shape, p) * scale;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q) {
  if (values.empty() || values.size() != weights.size())
    throw_error(ErrorCode::invalid_input, "weighted_quantile: size mismatch or empty");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw_error(ErrorCode::invalid_input, "weighted_quantile: zero weight");

  // Midpoint positions of each sorted atom, linear interpolation between.
  double cum = 0.0;
  double prev_pos = 0.0;
  double prev_val = values[order.front()];
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double w = weights[order[k]];
    const double pos = (cum + 0.5 * w) / total;
    const double val = values[order[k]];
    if (q <= pos) {
      if (k == 0 || pos == prev_pos) return val;
      const double f = (q - prev_pos) / (pos - prev_pos);
      return prev_val + f * (val - prev_val);
    }
    cum += w;
    prev_pos = pos;
    prev_val = val;
  }
  return values[order.back()];
}

double ks_two_sample_pvalue(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw_error(ErrorCode::invalid_input, "ks_two_sample_pvalue: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * p, 0.0, 1.0);
}

double rank_sum_pvalue_less(std::span<const double> low, std::span<const double> high) {
  const std::size_t n1 = low.size(), n2 = high.size();
  if (n1 == 0 || n2 == 0)
    throw_error(ErrorCode::invalid_input, "rank_sum_pvalue_less: empty sample");
  struct Item { double v; bool from_low; };
  std::vector<Item> all;
  all.reserve(n1 + n2);
  for (double v : low) all.push_back({v, true});
  for (double v : high) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  const double n = static_cast<double>(n1 + n2);
  double w = 0.0;          // rank sum of `low`, average ranks for ties
  double tie_corr = 0.0;   // sum of t^3 - t over tie groups
  std::size_t k = 0;
  while (k < all.size()) {
    std::size_t k2 = k;
    while (k2 + 1 < all.size() && all[k2 + 1].v == all[k].v) ++k2;
    const double t = static_cast<double>(k2 - k + 1);
    const double avg_rank = 0.5 * (static_cast<double>(k + 1) + static_cast<double>(k2 + 1));
    for (std::size_t r = k; r <= k2; ++r)
      if (all[r].from_low) w += avg_rank;
    if (t > 1.0) tie_corr += t * t * t - t;
    k = k2 + 1;
  }
  const double mean = static_cast<double>(n1) * (n + 1.0) / 2.0;
  double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
               ((n + 1.0) - tie_corr / (n * (n - 1.0)));
  if (var <= 0.0) return 0.5;
  const double z = (w - mean + 0.5) / std::sqrt(var);
  return norm_cdf(z);
}

}  // namespace rmd
