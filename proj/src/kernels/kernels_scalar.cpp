#include <cmath>
#include <limits>

#include "rmd/kernels/kernels.hpp"
#include "scalar_core.hpp"

namespace rmd::kernels {

namespace {

void exp_batch(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::exp_core(x[i]);
}

void log_batch(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::log_core(x[i]);
}

void gauss_logpdf_batch(double y, const double* mean, const double* var, double* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::gauss_logpdf_core(y, mean[i], var[i]);
}

void predict_batch(double* mean, double* var, double state_const, double state_coef,
                   double state_var, std::size_t n) {
  const double a2 = state_coef * state_coef;
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = std::fma(state_coef, mean[i], state_const);
    var[i] = std::fma(a2, var[i], state_var);
  }
}

void add_scalar(const double* x, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + s;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double max(const double* x, std::size_t n) {
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > acc) acc = x[i];
  return acc;
}

void mixture_moments(const double* w, const double* mean, const double* var, std::size_t n,
                     double* out_mean, double* out_var) {
  double m1 = 0.0, second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m1 += w[i] * mean[i];
    second += w[i] * (var[i] + mean[i] * mean[i]);
  }
  *out_mean = m1;
  const double v = second - m1 * m1;
  *out_var = v > 0.0 ? v : 0.0;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      "scalar",    exp_batch, log_batch, gauss_logpdf_batch, predict_batch, add_scalar,
      sum,         dot,       sum_sq,    max,                mixture_moments,
  };
  return ops;
}

}  // namespace rmd::kernels
