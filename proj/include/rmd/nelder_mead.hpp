#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rmd {

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5). Deterministic: no randomness anywhere.
// Convergence is declared when the simplex diameter (max-norm distance of
// vertices from the best vertex) falls below size_tol.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, double initial_step, int max_iterations,
                             double size_tol);

}  // namespace rmd
