#pragma once

#include <cmath>
#include <cstddef>
#include <string_view>

namespace rmd::kernels {

// Batched double-precision primitives behind the particle/mixture arithmetic.
// Every entry has a scalar reference implementation and (on x86-64) an AVX2
// variant selected at runtime; the two are equivalence-tested. Elementwise
// kernels (exp/log/logpdf/predict) produce bit-identical results across
// backends because both follow the same FMA evaluation scheme; reductions may
// differ in summation order and agree only to rounding.
struct Ops {
  const char* name;

  // out[i] = exp(x[i]); results below the normal range flush to zero.
  void (*exp_batch)(const double* x, double* out, std::size_t n);
  // out[i] = log(x[i]); x must be > 0 (0 -> -inf, negative -> NaN).
  void (*log_batch)(const double* x, double* out, std::size_t n);
  // out[i] = log N(y; mean[i], var[i]); var must be > 0.
  void (*gauss_logpdf_batch)(double y, const double* mean, const double* var, double* out,
                             std::size_t n);
  // In-place linear-Gaussian time update:
  //   mean[i] = state_const + state_coef * mean[i]
  //   var[i]  = state_coef^2 * var[i] + state_var
  void (*predict_batch)(double* mean, double* var, double state_const, double state_coef,
                        double state_var, std::size_t n);
  // out[i] = x[i] + s
  void (*add_scalar)(const double* x, double s, double* out, std::size_t n);

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);

  // Moments of the Gaussian mixture {w[i], mean[i], var[i]} (w normalized):
  //   out_mean = sum w*mean,  out_var = sum w*(var + mean^2) - out_mean^2
  void (*mixture_moments)(const double* w, const double* mean, const double* var, std::size_t n,
                          double* out_mean, double* out_var);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the build or CPU lacks AVX2+FMA

// Active backend. Defaults to the best supported one; the RMD_KERNELS
// environment variable ("auto", "scalar", "avx2") or set_backend() override.
const Ops& ops();
void set_backend(std::string_view name);
std::string_view active_backend();

inline double logsumexp(const double* x, double* scratch, std::size_t n) {
  const Ops& k = ops();
  const double m = k.max(x, n);
  if (!std::isfinite(m)) return m;  // all -inf (or a NaN/inf poisoned input)
  k.add_scalar(x, -m, scratch, n);
  k.exp_batch(scratch, scratch, n);
  return m + std::log(k.sum(scratch, n));
}

}  // namespace rmd::kernels
