#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "rmd/errors.hpp"
#include "rmd/kernels/kernels.hpp"
#include "rmd/rng.hpp"
#include "rmd/stats.hpp"

using rmd::kernels::Ops;

namespace {

std::vector<double> random_values(double lo, double hi, std::size_t n, std::uint64_t seed) {
  rmd::Rng rng = rmd::Rng::stream(seed, {0xBEEF});
  std::vector<double> out(n);
  for (auto& v : out) v = lo + (hi - lo) * rng.uniform();
  return out;
}

}  // namespace

TEST_CASE("kernel exp matches std::exp to near machine precision") {
  const Ops& k = rmd::kernels::scalar_ops();
  const auto xs = random_values(-700.0, 700.0, 4096, 11);
  std::vector<double> out(xs.size());
  k.exp_batch(xs.data(), out.data(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ref = std::exp(xs[i]);
    CHECK(out[i] == doctest::Approx(ref).epsilon(5e-15));
  }
  // saturation behavior
  double specials[] = {-1000.0, 0.0, 710.0, std::numeric_limits<double>::quiet_NaN()};
  double res[4];
  k.exp_batch(specials, res, 4);
  CHECK(res[0] == 0.0);
  CHECK(res[1] == 1.0);
  CHECK(std::isinf(res[2]));
  CHECK(std::isnan(res[3]));
}

TEST_CASE("kernel log matches std::log to near machine precision") {
  const Ops& k = rmd::kernels::scalar_ops();
  std::vector<double> xs = random_values(1e-12, 1e12, 4096, 13);
  for (std::size_t i = 0; i < 64; ++i) xs[i] = 1e-300 * (i + 1);  // extreme small normals
  std::vector<double> out(xs.size());
  k.log_batch(xs.data(), out.data(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ref = std::log(xs[i]);
    CHECK(out[i] == doctest::Approx(ref).epsilon(1e-14));
  }
  double specials[] = {0.0, -1.0, std::numeric_limits<double>::infinity()};
  double res[3];
  k.log_batch(specials, res, 3);
  CHECK(res[0] == -std::numeric_limits<double>::infinity());
  CHECK(std::isnan(res[1]));
  CHECK(std::isinf(res[2]));
}

TEST_CASE("gauss_logpdf agrees with the scalar reference formula") {
  const Ops& k = rmd::kernels::scalar_ops();
  const auto means = random_values(-10.0, 10.0, 257, 17);
  auto vars = random_values(1e-8, 25.0, 257, 19);
  std::vector<double> out(means.size());
  k.gauss_logpdf_batch(1.234, means.data(), vars.data(), out.data(), means.size());
  for (std::size_t i = 0; i < means.size(); ++i)
    CHECK(out[i] == doctest::Approx(rmd::norm_logpdf(1.234, means[i], vars[i])).epsilon(1e-13));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const Ops* avx = rmd::kernels::avx2_ops();
  if (!avx) {
    MESSAGE("avx2 unavailable; skipping equivalence checks");
    return;
  }
  const Ops& ref = rmd::kernels::scalar_ops();
  const std::size_t n = 1025;  // odd size exercises the remainder lanes

  SUBCASE("elementwise kernels are bit-identical") {
    const auto xs = random_values(-650.0, 650.0, n, 23);
    std::vector<double> a(n), b(n);
    ref.exp_batch(xs.data(), a.data(), n);
    avx->exp_batch(xs.data(), b.data(), n);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

    const auto vs = random_values(1e-9, 1e9, n, 29);
    ref.log_batch(vs.data(), a.data(), n);
    avx->log_batch(vs.data(), b.data(), n);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

    const auto ms = random_values(-5.0, 5.0, n, 31);
    ref.gauss_logpdf_batch(0.7, ms.data(), vs.data(), a.data(), n);
    avx->gauss_logpdf_batch(0.7, ms.data(), vs.data(), b.data(), n);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

    auto m1 = random_values(-5.0, 5.0, n, 37);
    auto v1 = random_values(0.0, 3.0, n, 41);
    auto m2 = m1;
    auto v2 = v1;
    ref.predict_batch(m1.data(), v1.data(), 0.3, 0.95, 0.04, n);
    avx->predict_batch(m2.data(), v2.data(), 0.3, 0.95, 0.04, n);
    CHECK(std::memcmp(m1.data(), m2.data(), n * sizeof(double)) == 0);
    CHECK(std::memcmp(v1.data(), v2.data(), n * sizeof(double)) == 0);
  }

  SUBCASE("reductions agree to rounding") {
    const auto xs = random_values(-3.0, 3.0, n, 43);
    const auto ys = random_values(-3.0, 3.0, n, 47);
    CHECK(avx->sum(xs.data(), n) == doctest::Approx(ref.sum(xs.data(), n)).epsilon(1e-12));
    CHECK(avx->dot(xs.data(), ys.data(), n) ==
          doctest::Approx(ref.dot(xs.data(), ys.data(), n)).epsilon(1e-12));
    CHECK(avx->sum_sq(xs.data(), n) ==
          doctest::Approx(ref.sum_sq(xs.data(), n)).epsilon(1e-12));
    CHECK(avx->max(xs.data(), n) == ref.max(xs.data(), n));

    auto w = random_values(0.0, 1.0, n, 53);
    double total = ref.sum(w.data(), n);
    for (auto& v : w) v /= total;
    const auto vars = random_values(0.1, 2.0, n, 59);
    double ma, va, mb, vb;
    ref.mixture_moments(w.data(), xs.data(), vars.data(), n, &ma, &va);
    avx->mixture_moments(w.data(), xs.data(), vars.data(), n, &mb, &vb);
    CHECK(mb == doctest::Approx(ma).epsilon(1e-12));
    CHECK(vb == doctest::Approx(va).epsilon(1e-12));
  }
}

TEST_CASE("logsumexp matches brute force and handles -inf") {
  std::vector<double> xs{-1.0, -2.0, -3.0, -700.0, 0.5};
  std::vector<double> scratch(xs.size());
  double brute = 0.0;
  for (double x : xs) brute += std::exp(x);
  CHECK(rmd::kernels::logsumexp(xs.data(), scratch.data(), xs.size()) ==
        doctest::Approx(std::log(brute)).epsilon(1e-14));

  std::vector<double> ninf(4, -std::numeric_limits<double>::infinity());
  CHECK(rmd::kernels::logsumexp(ninf.data(), scratch.data(), 4) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("backend selection honors overrides") {
  const std::string_view before = rmd::kernels::active_backend();
  rmd::kernels::set_backend("scalar");
  CHECK(rmd::kernels::active_backend() == "scalar");
  CHECK_THROWS_AS(rmd::kernels::set_backend("sse4"), rmd::Error);
  rmd::kernels::set_backend("auto");
  if (rmd::kernels::avx2_ops()) CHECK(rmd::kernels::active_backend() == "avx2");
  rmd::kernels::set_backend(before);
}
