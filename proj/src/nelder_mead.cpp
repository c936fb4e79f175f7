#include "rmd/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rmd/errors.hpp"

namespace rmd {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, double initial_step, int max_iterations,
                             double size_tol) {
  const std::size_t d = start.size();
  if (d == 0) throw_error(ErrorCode::invalid_input, "nelder_mead: empty start point");

  std::vector<std::vector<double>> verts(d + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < d; ++i) verts[i + 1][i] += initial_step;
  std::vector<double> fvals(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fvals[i] = objective(verts[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), cand(d);
  NelderMeadResult result;

  auto sort_order = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
  };

  for (int iter = 0; iter < max_iterations; ++iter) {
    sort_order();
    const std::size_t best = order.front(), worst = order.back();

    double diameter = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        diameter = std::max(diameter, std::abs(verts[i][k] - verts[best][k]));
    if (diameter < size_tol) {
      result.converged = true;
      result.iterations = iter;
      break;
    }

    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i <= d; ++i)
        if (i != worst) s += verts[i][k];
      centroid[k] = s / static_cast<double>(d);
    }

    auto point_at = [&](double coef) {
      for (std::size_t k = 0; k < d; ++k)
        cand[k] = centroid[k] + coef * (verts[worst][k] - centroid[k]);
    };

    point_at(-1.0);  // reflection
    const double f_reflect = objective(cand);
    if (f_reflect < fvals[order[0]]) {
      std::vector<double> reflected = cand;
      point_at(-2.0);  // expansion
      const double f_expand = objective(cand);
      if (f_expand < f_reflect) {
        verts[worst] = cand;
        fvals[worst] = f_expand;
      } else {
        verts[worst] = std::move(reflected);
        fvals[worst] = f_reflect;
      }
    } else if (f_reflect < fvals[order[d - 1]]) {
      verts[worst] = cand;
      fvals[worst] = f_reflect;
    } else {
      const bool outside = f_reflect < fvals[worst];
      point_at(outside ? -0.5 : 0.5);  // contraction
      const double f_contract = objective(cand);
      if (f_contract < std::min(f_reflect, fvals[worst])) {
        verts[worst] = cand;
        fvals[worst] = f_contract;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= d; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < d; ++k)
            verts[i][k] = verts[best][k] + 0.5 * (verts[i][k] - verts[best][k]);
          fvals[i] = objective(verts[i]);
        }
      }
    }
    result.iterations = iter + 1;
  }

  sort_order();
  result.x = verts[order.front()];
  result.fmin = fvals[order.front()];
  return result;
}

}  // namespace rmd
