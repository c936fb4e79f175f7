#include "rmd/families.hpp"

#include <cmath>

#include "rmd/errors.hpp"

namespace rmd {

ModelFamily ModelFamily::parse(std::string_view name) {
  if (name == "uc") return uc();
  if (name == "ar") return ar();
  if (name == "armf") return armf();
  if (name == "uc-t") return uc_t();
  throw_error(ErrorCode::invalid_input, "unknown model family: " + std::string(name));
}

std::string ModelFamily::name() const {
  switch (tag) {
    case FamilyTag::uc: return "uc";
    case FamilyTag::ar: return "ar";
    case FamilyTag::armf: return "armf";
    case FamilyTag::uc_t: return "uc-t";
  }
  return "?";
}

int ModelFamily::param_count() const {
  switch (tag) {
    case FamilyTag::uc: return 2;
    case FamilyTag::ar: return 4;
    case FamilyTag::armf: return 3;
    case FamilyTag::uc_t: return 3;
  }
  return 0;
}

std::vector<std::string> ModelFamily::param_names() const {
  switch (tag) {
    case FamilyTag::uc: return {"sigma_eps", "sigma_eta"};
    case FamilyTag::ar: return {"sigma_eps", "sigma_eta", "kappa", "mu"};
    case FamilyTag::armf: return {"sigma_eps", "sigma_eta", "kappa"};
    case FamilyTag::uc_t: return {"sigma_eps", "sigma_eta", "nu"};
  }
  return {};
}

void ModelFamily::validate() const {
  if (tag == FamilyTag::armf && !fixed_mu)
    throw_error(ErrorCode::invalid_input, "armf requires fixed_mu");
  if (tag == FamilyTag::uc_t && !t_dof)
    throw_error(ErrorCode::invalid_input, "uc-t requires t_dof");
}

ModelSpec instantiate(const ModelFamily& family, std::span<const double> theta) {
  family.validate();
  if (static_cast<int>(theta.size()) != family.param_count())
    throw_error(ErrorCode::invalid_input,
                "theta dimension mismatch for family " + family.name());
  for (double v : theta)
    if (!std::isfinite(v)) throw_error(ErrorCode::invalid_input, "non-finite theta");
  const double sigma_eps = theta[0];
  const double sigma_eta = theta[1];
  if (sigma_eps < 0.0 || sigma_eta < 0.0)
    throw_error(ErrorCode::invalid_input, "negative standard deviation in theta");

  ModelSpec spec;
  spec.lgm.state_sd = sigma_eps;
  spec.lgm.obs_sd = sigma_eta;
  switch (family.tag) {
    case FamilyTag::uc:
      spec.lgm.state_const = 0.0;
      spec.lgm.state_coef = 1.0;
      break;
    case FamilyTag::ar:
    case FamilyTag::armf: {
      const double kappa = theta[2];
      const double mu = family.tag == FamilyTag::ar ? theta[3] : *family.fixed_mu;
      if (!(kappa >= 0.0 && kappa < 1.0))
        throw_error(ErrorCode::invalid_input, "kappa must lie in [0, 1)");
      spec.lgm.state_const = mu * (1.0 - kappa);
      spec.lgm.state_coef = kappa;
      break;
    }
    case FamilyTag::uc_t: {
      const double dof = theta[2];
      if (!(dof > 2.0)) throw_error(ErrorCode::invalid_input, "uc-t requires nu > 2");
      spec.lgm.state_const = 0.0;
      spec.lgm.state_coef = 1.0;
      spec.measurement = MeasurementMixture::scaled_t(dof);
      break;
    }
  }
  return spec;
}

std::vector<double> family_theta(const ModelFamily& family, const LinearGaussianModel& model) {
  switch (family.tag) {
    case FamilyTag::uc:
      return {model.state_sd, model.obs_sd};
    case FamilyTag::ar: {
      const double kappa = model.state_coef;
      if (!(kappa < 1.0))
        throw_error(ErrorCode::invalid_input, "family_theta: kappa at the random-walk limit");
      return {model.state_sd, model.obs_sd, kappa, model.state_const / (1.0 - kappa)};
    }
    case FamilyTag::armf:
      return {model.state_sd, model.obs_sd, model.state_coef};
    case FamilyTag::uc_t:
      throw_error(ErrorCode::invalid_input, "family_theta: uc-t carries nu outside the model");
  }
  return {};
}

void apply_default_init(LinearGaussianModel& model, const TimeSeries& series,
                        const InclusionPath& path) {
  double first = series.values.front();
  for (std::size_t t = 0; t < series.size() && t < path.size(); ++t) {
    if (path[t]) {
      first = series.values[t];
      break;
    }
  }
  model.init_mean = first;
  model.init_var = 100.0;
}

}  // namespace rmd
