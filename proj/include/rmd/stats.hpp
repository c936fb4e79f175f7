#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace rmd {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

inline double norm_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

inline double norm_pdf(double x, double mean, double var) {
  return std::exp(norm_logpdf(x, mean, var));
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Inverse standard normal CDF (Wichura's PPND16, AS 241).
double norm_ppf(double p);

// Log density of the scaled Student-t with `dof` degrees of freedom and
// total variance `var` (requires dof > 2).
double scaled_t_logpdf(double x, double mean, double var, double dof);

// Quantile of the Gamma(shape, scale) distribution.
double gamma_quantile(double p, double shape, double scale);

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double q);

// Two-sided two-sample Kolmogorov-Smirnov p-value (asymptotic).
double ks_two_sample_pvalue(std::span<const double> a, std::span<const double> b);

// One-sided Wilcoxon rank-sum p-value for H1: values in `low` tend to be
// smaller than values in `high` (normal approximation with tie correction).
double rank_sum_pvalue_less(std::span<const double> low, std::span<const double> high);

}  // namespace rmd
