#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

#include "rmd/families.hpp"
#include "rmd/kalman.hpp"
#include "rmd/rng.hpp"

namespace rmd {

// Filtered inclusion probability: the posterior that the current observation
// is informative, given prior weight beta, the model predictive density at
// the observation, and the alternative (contamination) density there. With
// the endogenous choice alternative == predictive this returns beta exactly.
inline double filtered_inclusion_probability(double beta, double predictive_density,
                                             double alternative_density) {
  const double a = beta * predictive_density;
  const double b = (1.0 - beta) * alternative_density;
  return a / (a + b);
}

// Prior over family parameters: independent half-normals on the standard
// deviations, uniform(0,1) on kappa, normal on mu, lognormal on (nu - 2).
struct PriorSpec {
  double sigma_sd = 5.0;
  double mu_mean = 2.0;
  double mu_sd = 2.0;
  double log_dof_mean = 2.0794415416798357;  // log 8
  double log_dof_sd = 1.0;

  std::vector<double> sample(const ModelFamily& family, Rng& rng) const;
  double log_density(const ModelFamily& family, std::span<const double> theta) const;
};

struct RmdnConfig {
  int n_theta = 512;
  int component_cap = 64;          // inner mixture size before resampling
  double ess_threshold = 0.5;      // resample-move when ESS < threshold * n_theta
  int rejuvenation_moves = 3;      // random-walk Metropolis steps per particle
  double proposal_scale = 0.5;     // times the weighted particle covariance
  std::uint64_t seed = 0;
  int threads = 1;
  int fixed_lag = 0;               // > 0 switches the smoother to fixed-lag
  std::optional<std::vector<double>> fixed_theta;  // point-mass prior (single particle)
  PriorSpec prior;
};

// Inclusion history of one inner mixture component, one bit per time step.
class AncestryRecord {
 public:
  void push(bool included) {
    if (length_ % 64 == 0) words_.push_back(0);
    if (included) words_.back() |= (1ull << (length_ % 64));
    ++length_;
  }
  bool included_at(std::size_t t) const { return (words_[t / 64] >> (t % 64)) & 1u; }
  std::size_t size() const noexcept { return length_; }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t length_ = 0;
};

// One parameter particle: theta plus its Rao-Blackwellized conditional state
// filter, a weighted Gaussian mixture over sampled inclusion histories.
struct ThetaParticle {
  std::vector<double> theta;
  LinearGaussianModel model;
  MeasurementMixture measurement;
  double log_weight = 0.0;
  double log_prior = 0.0;
  double partial_loglik = 0.0;  // running sum of log(beta f/F + (1-beta))

  std::vector<double> comp_weight;  // normalized within the particle
  std::vector<double> comp_mean;
  std::vector<double> comp_var;
  std::vector<AncestryRecord> comp_ancestry;

  std::size_t n_components() const noexcept { return comp_weight.size(); }
};

struct SmoothedInclusion {
  std::vector<double> probs;  // per t, P(C_t = 1 | all data seen)
};

struct StepRecord {
  double pred_mean = 0.0;       // one-step predictive moments before the update
  double pred_var = 0.0;
  double log_predictive = 0.0;  // log F(y_t | y^{t-1}, beta)
  double filtered_mean = 0.0;   // posterior mixture moments after the update
  double filtered_var = 0.0;
};

class ThetaParticleSystem {
 public:
  // Draws n_theta particles from the prior (or a single point-mass particle)
  // and prepares the conditional filters. `series` supplies the diffuse
  // initialization and the expected length for the smoother guard.
  static ThetaParticleSystem init(const ModelFamily& family, const TimeSeries& series,
                                  double beta, const RmdnConfig& config);

  // One-step predictive density F(y | seen data, beta), weight-averaged over
  // particles and inner components. Throws invalid_input on non-finite y.
  double predictive_density(double y) const;

  // Absorbs one observation: every inner component branches into an include
  // branch (conditioned on y, weight beta * f / F) and an exclude branch
  // (predict-only, weight 1 - beta); outer weights multiply by the per-theta
  // increment; inner mixtures are resampled down to the component cap; the
  // log evidence gains log(beta * F + (1 - beta)). Resample-move rejuvenation
  // of theta runs when the outer ESS falls below its threshold.
  StepRecord update(double y);

  // Weighted ancestry frequencies P(C_t = 1 | y^T). Throws invalid_state
  // before filtering has reached the expected length.
  SmoothedInclusion smoothed() const;

  ForecastMixture forecast_mixture_step(int horizon) const;  // y_{T+horizon}
  ForecastMixture forecast_mixture_avg(int horizon) const;   // horizon-average

  std::vector<double> posterior_quantiles(std::size_t param_index,
                                          std::span<const double> qs) const;

  double beta() const noexcept { return beta_; }
  double log_evidence() const noexcept { return log_evidence_; }
  std::size_t time() const noexcept { return time_; }
  std::size_t expected_length() const noexcept { return expected_length_; }
  int rejuvenation_count() const noexcept { return n_rejuvenations_; }
  const std::vector<ThetaParticle>& particles() const noexcept { return particles_; }
  const std::vector<double>& log_predictive_history() const noexcept {
    return log_predictive_history_;
  }
  std::vector<double> normalized_weights() const;
  double effective_sample_size() const;

 private:
  ThetaParticleSystem() = default;
  void resample_move();
  double ancestry_frequency(std::size_t t) const;

  struct SlotBuffers {
    std::vector<double> pred_mean, pred_var, logf, logw, scratch;
    double logf_theta = 0.0;
    double pred_m = 0.0, pred_v = 0.0;
    double log_increment = 0.0;
  };

  ModelFamily family_;
  double beta_ = 1.0;
  RmdnConfig config_;
  std::vector<ThetaParticle> particles_;
  std::vector<double> observed_;
  std::vector<double> log_predictive_history_;
  std::vector<double> frozen_smoothed_;  // fixed-lag smoother storage
  std::vector<SlotBuffers> slots_;
  double init_mean_ = 0.0;
  double init_var_ = 100.0;
  double log_evidence_ = 0.0;
  std::size_t time_ = 0;
  std::size_t expected_length_ = 0;
  int n_rejuvenations_ = 0;
};

// Free-function forms of the sequential operations.
double predictive_density(const ThetaParticleSystem& system, double y);
StepRecord rmd_n_update(ThetaParticleSystem& system, double y);
SmoothedInclusion smoothed_inclusion(const ThetaParticleSystem& system);

struct RmdnFit {
  ThetaParticleSystem system;
  SmoothedInclusion smoothed;
  std::vector<StepRecord> steps;
};

// Full sequential Bayesian pass over the series at the given beta: iterated
// batch importance sampling over theta with resample-move rejuvenation, the
// Rao-Blackwellized inclusion filter inside each particle, and the ancestry
// smoother at the end. Deterministic for a given seed and config, independent
// of thread count.
RmdnFit fit_rmd_n(const ModelFamily& family, const TimeSeries& series, double beta,
                  const RmdnConfig& config);

}  // namespace rmd
