#pragma once

#include <cstdint>

#include "rmd/errors.hpp"
#include "rmd/families.hpp"
#include "rmd/kalman.hpp"

namespace rmd {

struct OptimizerSettings {
  int max_iterations = 500;
  double simplex_tol = 1e-8;
  std::uint64_t seed = 0;  // accepted for interface symmetry; the search is deterministic
};

struct MleFit {
  std::vector<double> theta;  // family-space parameters
  LinearGaussianModel model;
  double loglik = 0.0;
  int iterations = 0;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(MleFit best_so_far, const std::string& what)
      : Error(ErrorCode::convergence_failure, what), best(std::move(best_so_far)) {}
  MleFit best;
};

// Maximum-likelihood fit of a linear-Gaussian family over the included subset
// of the series. Nelder-Mead on log standard deviations (plus logit kappa and
// raw mu where applicable), multi-started from 3 fixed points scaled to the
// data; deterministic given settings. Throws under_identified when fewer than
// the family's floor of observations are included, ConvergenceFailure (with
// best-so-far) when no start converges, invalid_input for the uc-t family
// (fitted by the Bayesian path instead).
MleFit mle_fit(const ModelFamily& family, const TimeSeries& series, const InclusionPath& path,
               const OptimizerSettings& settings = {});

}  // namespace rmd
