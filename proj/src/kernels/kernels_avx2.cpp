// AVX2+FMA kernel variants. Vector lanes follow the exact operation sequence
// of scalar_core.hpp so elementwise results are bit-identical with the scalar
// backend; remainder lanes fall through to the scalar cores.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "rmd/kernels/kernels.hpp"
#include "scalar_core.hpp"

namespace rmd::kernels {

namespace {

using detail::exp_core;
using detail::gauss_logpdf_core;
using detail::log_core;

inline __m256d to_double(__m256i v64) {
  // Signed epi64 -> pd for |v| < 2^51 via the magic-constant trick.
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);
  const __m256d magic_d = _mm256_castsi256_pd(magic);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(v64, magic)), magic_d);
}

inline __m256d exp4(__m256d x0) {
  const __m256d lo = _mm256_set1_pd(detail::kExpLow);
  const __m256d hi = _mm256_set1_pd(detail::kExpHigh);
  __m256d x = _mm256_min_pd(_mm256_max_pd(x0, lo), hi);

  const __m256d px =
      _mm256_floor_pd(_mm256_fmadd_pd(_mm256_set1_pd(detail::kLog2E), x, _mm256_set1_pd(0.5)));
  x = _mm256_fnmadd_pd(px, _mm256_set1_pd(detail::kExpC1), x);
  x = _mm256_fnmadd_pd(px, _mm256_set1_pd(detail::kExpC2), x);
  const __m256d xx = _mm256_mul_pd(x, x);

  __m256d p = _mm256_set1_pd(detail::kExpP0);
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(detail::kExpP1));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(detail::kExpP2));
  p = _mm256_mul_pd(p, x);
  __m256d q = _mm256_set1_pd(detail::kExpQ0);
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(detail::kExpQ1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(detail::kExpQ2));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(detail::kExpQ3));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  const __m256i n64 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(px));
  const __m256i expo = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  __m256d r = _mm256_mul_pd(e, _mm256_castsi256_pd(expo));

  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), _mm256_cmp_pd(x0, lo, _CMP_LT_OQ));
  r = _mm256_blendv_pd(r, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                       _mm256_cmp_pd(x0, hi, _CMP_GT_OQ));
  r = _mm256_blendv_pd(r, x0, _mm256_cmp_pd(x0, x0, _CMP_UNORD_Q));
  return r;
}

inline __m256d log4(__m256d x0) {
  const __m256i bits = _mm256_castpd_si256(x0);
  const __m256i raw_e = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7FF));
  __m256d e = to_double(_mm256_sub_epi64(raw_e, _mm256_set1_epi64x(1022)));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                      _mm256_set1_epi64x(0x3FE0000000000000ll)));

  const __m256d small_m = _mm256_cmp_pd(m, _mm256_set1_pd(detail::kSqrtHalf), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small_m, _mm256_set1_pd(1.0)));
  const __m256d one = _mm256_set1_pd(1.0);
  m = _mm256_blendv_pd(_mm256_sub_pd(m, one), _mm256_sub_pd(_mm256_add_pd(m, m), one), small_m);
  const __m256d z = _mm256_mul_pd(m, m);

  __m256d p = _mm256_set1_pd(detail::kLogP0);
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(detail::kLogP1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(detail::kLogP2));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(detail::kLogP3));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(detail::kLogP4));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(detail::kLogP5));
  __m256d q = _mm256_add_pd(m, _mm256_set1_pd(detail::kLogQ0));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(detail::kLogQ1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(detail::kLogQ2));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(detail::kLogQ3));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(detail::kLogQ4));

  __m256d y = _mm256_mul_pd(m, _mm256_div_pd(_mm256_mul_pd(z, p), q));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(detail::kLogC2), y);
  y = _mm256_fnmadd_pd(z, _mm256_set1_pd(0.5), y);
  __m256d r = _mm256_add_pd(m, y);
  r = _mm256_fmadd_pd(e, _mm256_set1_pd(detail::kLogC1), r);

  const __m256d tiny = _mm256_set1_pd(std::numeric_limits<double>::min());
  const __m256d mask_small = _mm256_cmp_pd(x0, tiny, _CMP_LT_OQ);
  const __m256d small_val =
      _mm256_blendv_pd(_mm256_set1_pd(std::numeric_limits<double>::quiet_NaN()),
                       _mm256_set1_pd(-std::numeric_limits<double>::infinity()),
                       _mm256_cmp_pd(x0, _mm256_setzero_pd(), _CMP_GE_OQ));
  r = _mm256_blendv_pd(r, small_val, mask_small);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  r = _mm256_blendv_pd(r, inf, _mm256_cmp_pd(x0, inf, _CMP_EQ_OQ));
  r = _mm256_blendv_pd(r, x0, _mm256_cmp_pd(x0, x0, _CMP_UNORD_Q));
  return r;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void exp_batch(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = exp_core(x[i]);
}

void log_batch(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = log_core(x[i]);
}

void gauss_logpdf_batch(double y, const double* mean, const double* var, double* out,
                        std::size_t n) {
  const __m256d vy = _mm256_set1_pd(y);
  const __m256d c = _mm256_set1_pd(detail::kLogTwoPi);
  const __m256d neg_half = _mm256_set1_pd(-0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(var + i);
    const __m256d lv = log4(v);
    const __m256d d = _mm256_sub_pd(vy, _mm256_loadu_pd(mean + i));
    const __m256d s =
        _mm256_add_pd(_mm256_add_pd(c, lv), _mm256_div_pd(_mm256_mul_pd(d, d), v));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(neg_half, s));
  }
  for (; i < n; ++i) out[i] = gauss_logpdf_core(y, mean[i], var[i]);
}

void predict_batch(double* mean, double* var, double state_const, double state_coef,
                   double state_var, std::size_t n) {
  const double a2s = state_coef * state_coef;
  const __m256d a = _mm256_set1_pd(state_coef);
  const __m256d c = _mm256_set1_pd(state_const);
  const __m256d a2 = _mm256_set1_pd(a2s);
  const __m256d q = _mm256_set1_pd(state_var);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(mean + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(mean + i), c));
    _mm256_storeu_pd(var + i, _mm256_fmadd_pd(a2, _mm256_loadu_pd(var + i), q));
  }
  for (; i < n; ++i) {
    mean[i] = std::fma(state_coef, mean[i], state_const);
    var[i] = std::fma(a2s, var[i], state_var);
  }
}

void add_scalar(const double* x, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), vs));
  for (; i < n; ++i) out[i] = x[i] + s;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double sum_sq(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

double max(const double* x, std::size_t n) {
  double r = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_set1_pd(r);
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (double v : lanes)
      if (v > r) r = v;
  }
  for (; i < n; ++i)
    if (x[i] > r) r = x[i];
  return r;
}

void mixture_moments(const double* w, const double* mean, const double* var, std::size_t n,
                     double* out_mean, double* out_var) {
  __m256d acc_m = _mm256_setzero_pd();
  __m256d acc_s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vw = _mm256_loadu_pd(w + i);
    const __m256d vm = _mm256_loadu_pd(mean + i);
    const __m256d vv = _mm256_loadu_pd(var + i);
    acc_m = _mm256_fmadd_pd(vw, vm, acc_m);
    acc_s = _mm256_fmadd_pd(vw, _mm256_fmadd_pd(vm, vm, vv), acc_s);
  }
  double m1 = hsum(acc_m);
  double second = hsum(acc_s);
  for (; i < n; ++i) {
    m1 += w[i] * mean[i];
    second += w[i] * (var[i] + mean[i] * mean[i]);
  }
  *out_mean = m1;
  const double v = second - m1 * m1;
  *out_var = v > 0.0 ? v : 0.0;
}

}  // namespace

const Ops& avx2_ops_table() {
  static const Ops ops{
      "avx2",      exp_batch, log_batch, gauss_logpdf_batch, predict_batch, add_scalar,
      sum,         dot,       sum_sq,    max,                mixture_moments,
  };
  return ops;
}

}  // namespace rmd::kernels

#endif  // x86-64
