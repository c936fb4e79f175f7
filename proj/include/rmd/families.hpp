#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmd/model.hpp"
#include "rmd/time_series.hpp"

namespace rmd {

enum class FamilyTag { uc, ar, armf, uc_t };

// Concrete model families over the scalar state-space machinery:
//   uc    random-walk trend + Gaussian measurement, theta = (sigma_eps, sigma_eta)
//   ar    mean-reverting trend, theta = (sigma_eps, sigma_eta, kappa, mu)
//   armf  ar with mu fixed a priori (inflation target), theta = (sigma_eps, sigma_eta, kappa)
//   uc-t  uc with scaled Student-t measurement, theta = (sigma_eps, sigma_eta, nu)
struct ModelFamily {
  FamilyTag tag = FamilyTag::uc;
  std::optional<double> fixed_mu;  // required for armf
  std::optional<double> t_dof;     // default nu for uc-t when not estimated

  static ModelFamily uc() { return {FamilyTag::uc, std::nullopt, std::nullopt}; }
  static ModelFamily ar() { return {FamilyTag::ar, std::nullopt, std::nullopt}; }
  static ModelFamily armf(double mu = 2.0) { return {FamilyTag::armf, mu, std::nullopt}; }
  static ModelFamily uc_t(double dof = 8.0) { return {FamilyTag::uc_t, std::nullopt, dof}; }
  static ModelFamily parse(std::string_view name);  // "uc" | "ar" | "armf" | "uc-t"

  std::string name() const;
  int param_count() const;
  // Minimum number of included observations needed to attempt a fit
  // (parameter count plus one observation of slack).
  int identifiability_floor() const { return param_count() + 1; }
  std::vector<std::string> param_names() const;
  void validate() const;
};

// Instantiated model: linear-Gaussian core plus the measurement-noise mixture
// (single-component for Gaussian measurement families).
struct ModelSpec {
  LinearGaussianModel lgm;
  MeasurementMixture measurement;
};

// Maps a family parameter vector to a concrete model. Initial-state fields
// are left at their defaults; fitting entry points set them via
// apply_default_init. Throws invalid_input on dimension mismatch or
// kappa outside [0, 1).
ModelSpec instantiate(const ModelFamily& family, std::span<const double> theta);

// Inverse of instantiate for the linear-Gaussian families (recovers
// (sigma_eps, sigma_eta[, kappa[, mu]]) from the model).
std::vector<double> family_theta(const ModelFamily& family, const LinearGaussianModel& model);

// Diffuse initialization used by every fitting entry point: init_mean is the
// first included observation (first observation if none flagged), init_var
// is 100 on the annualized-percent scale.
void apply_default_init(LinearGaussianModel& model, const TimeSeries& series,
                        const InclusionPath& path);

inline double naive_two_percent(int /*horizon*/) { return 2.0; }

}  // namespace rmd
