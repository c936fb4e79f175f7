#include "rmd/rmdn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rmd/errors.hpp"
#include "rmd/kernels/kernels.hpp"
#include "rmd/parallel.hpp"
#include "rmd/stats.hpp"

namespace rmd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kVarFloor = 1e-10;

// Stream labels for counter-based RNG derivation.
enum : std::uint64_t {
  kPriorStream = 0x5031,
  kInnerStream = 0x5032,
  kOuterStream = 0x5033,
  kMoveStream = 0x5034,
  kRerunStream = 0x5035,
};

// Mutable view over one particle's inner mixture.
struct CompsRef {
  std::vector<double>& weight;
  std::vector<double>& mean;
  std::vector<double>& var;
  std::vector<AncestryRecord>& ancestry;
};

struct PredictScratch {
  std::vector<double> pred_mean, pred_var, logf, logw, scratch;
};

// Predictive pass for one particle: fills predicted component moments and the
// per-(measurement k, component i) log densities; returns log f_theta(y) and
// the particle's one-step predictive moments of y.
struct PredictOut {
  double logf_theta;
  double pred_mean;
  double pred_var;
};

PredictOut compute_predictive(const LinearGaussianModel& model, const MeasurementMixture& meas,
                              const std::vector<double>& w, const std::vector<double>& mean,
                              const std::vector<double>& var, double y, PredictScratch& s) {
  const auto& k = kernels::ops();
  const std::size_t n = w.size();
  const std::size_t K = meas.size();
  const double r = model.obs_sd * model.obs_sd;

  s.pred_mean.assign(mean.begin(), mean.end());
  s.pred_var.assign(var.begin(), var.end());
  k.predict_batch(s.pred_mean.data(), s.pred_var.data(), model.state_const, model.state_coef,
                  model.state_sd * model.state_sd, n);

  s.logf.resize(n * K);
  s.scratch.resize(std::max<std::size_t>(n * K, 4));
  for (std::size_t kk = 0; kk < K; ++kk) {
    const double rk = meas.var_scales[kk] * r;
    k.add_scalar(s.pred_var.data(), rk, s.scratch.data(), n);
    k.gauss_logpdf_batch(y, s.pred_mean.data(), s.scratch.data(), s.logf.data() + kk * n, n);
    if (K > 1) {
      const double lwk = std::log(meas.weights[kk]);
      k.add_scalar(s.logf.data() + kk * n, lwk, s.logf.data() + kk * n, n);
    }
  }

  s.logw.resize(n);
  k.log_batch(w.data(), s.logw.data(), n);

  // log f_theta = LSE_i ( log w_i + LSE_k logf[k, i] )
  PredictOut out{};
  {
    std::vector<double>& acc = s.scratch;
    acc.resize(n);
    if (K == 1) {
      for (std::size_t i = 0; i < n; ++i) acc[i] = s.logw[i] + s.logf[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        double m = kNegInf;
        for (std::size_t kk = 0; kk < K; ++kk) m = std::max(m, s.logf[kk * n + i]);
        double sum = 0.0;
        if (m > kNegInf)
          for (std::size_t kk = 0; kk < K; ++kk) sum += std::exp(s.logf[kk * n + i] - m);
        acc[i] = s.logw[i] + (m > kNegInf ? m + std::log(sum) : kNegInf);
      }
    }
    std::vector<double> lse_scratch(n);
    out.logf_theta = kernels::logsumexp(acc.data(), lse_scratch.data(), n);
  }

  // Particle-level predictive moments of y (total measurement variance is
  // obs_sd^2; the scale mixture is normalized to unit total variance).
  {
    std::vector<double>& vy = s.scratch;
    vy.resize(n);
    k.add_scalar(s.pred_var.data(), r, vy.data(), n);
    k.mixture_moments(w.data(), s.pred_mean.data(), vy.data(), n, &out.pred_mean, &out.pred_var);
  }
  return out;
}

// Branch-and-resample update of one particle's inner mixture given the
// recorded log predictive log_f_all = log F(y | past, beta). Returns the log
// per-theta increment log(beta f_theta / F + (1 - beta)); -inf marks a dead
// particle (every branch at zero weight).
double branch_update(const LinearGaussianModel& model, const MeasurementMixture& meas,
                     CompsRef comps, double y, double beta, double log_f_all, int cap, Rng rng,
                     PredictScratch& s) {
  const std::size_t n = comps.weight.size();
  const std::size_t K = meas.size();
  const double r = model.obs_sd * model.obs_sd;
  const double log_beta = beta > 0.0 ? std::log(beta) : kNegInf;
  const double log_excl = beta < 1.0 ? std::log1p(-beta) : kNegInf;

  const std::size_t nb = n * K + n;
  std::vector<double> lw(nb);
  for (std::size_t kk = 0; kk < K; ++kk)
    for (std::size_t i = 0; i < n; ++i)
      lw[kk * n + i] = s.logw[i] + log_beta + s.logf[kk * n + i] - log_f_all;
  for (std::size_t i = 0; i < n; ++i) lw[K * n + i] = s.logw[i] + log_excl;

  std::vector<double> scratch(nb);
  const double log_total = kernels::logsumexp(lw.data(), scratch.data(), nb);
  if (log_total == kNegInf || std::isnan(log_total)) {
    // Dead particle: carry the predicted mixture forward so the state stays
    // well-formed; the outer weight goes to zero.
    comps.mean = s.pred_mean;
    comps.var = s.pred_var;
    for (auto& a : comps.ancestry) a.push(false);
    return kNegInf;
  }

  kernels::ops().add_scalar(lw.data(), -log_total, lw.data(), nb);
  std::vector<double>& bw = lw;  // reuse in place
  kernels::ops().exp_batch(lw.data(), bw.data(), nb);

  std::size_t n_alive = 0;
  for (double v : bw) n_alive += v > 0.0;

  std::vector<std::uint32_t> survivors;
  std::vector<double> new_w;
  if (n_alive <= static_cast<std::size_t>(cap)) {
    survivors.reserve(n_alive);
    new_w.reserve(n_alive);
    for (std::size_t b = 0; b < nb; ++b) {
      if (bw[b] > 0.0) {
        survivors.push_back(static_cast<std::uint32_t>(b));
        new_w.push_back(bw[b]);
      }
    }
  } else {
    survivors = systematic_resample(bw, static_cast<std::size_t>(cap), rng.uniform());
    new_w.assign(survivors.size(), 1.0 / static_cast<double>(cap));
  }

  std::vector<double> new_mean(survivors.size()), new_var(survivors.size());
  std::vector<AncestryRecord> new_anc(survivors.size());
  for (std::size_t idx = 0; idx < survivors.size(); ++idx) {
    const std::size_t b = survivors[idx];
    if (b < n * K) {
      const std::size_t kk = b / n, i = b % n;
      const double rk = meas.var_scales[kk] * r;
      double sv = s.pred_var[i] + rk;
      if (sv < kVarFloor) sv = kVarFloor;
      const double gain = s.pred_var[i] / sv;
      new_mean[idx] = s.pred_mean[i] + gain * (y - s.pred_mean[i]);
      new_var[idx] = std::max(s.pred_var[i] * (1.0 - gain), 0.0);
      new_anc[idx] = comps.ancestry[i];
      new_anc[idx].push(true);
    } else {
      const std::size_t i = b - n * K;
      new_mean[idx] = s.pred_mean[i];
      new_var[idx] = s.pred_var[i];
      new_anc[idx] = comps.ancestry[i];
      new_anc[idx].push(false);
    }
  }
  comps.weight = std::move(new_w);
  comps.mean = std::move(new_mean);
  comps.var = std::move(new_var);
  comps.ancestry = std::move(new_anc);
  return log_total;
}

struct RerunResult {
  double partial_loglik = 0.0;
  std::vector<double> w, mean, var;
  std::vector<AncestryRecord> anc;
  bool ok = false;
};

// Replays the inclusion filter for a proposed theta over the observed prefix,
// using the recorded predictive-density history as the shared contamination
// density sequence.
RerunResult rerun_filter(const LinearGaussianModel& model, const MeasurementMixture& meas,
                         double beta, const std::vector<double>& observed,
                         const std::vector<double>& log_pred_history, double init_mean,
                         double init_var, int cap, std::uint64_t seed, std::size_t now,
                         std::size_t slot, int move) {
  RerunResult res;
  res.w = {1.0};
  res.mean = {init_mean};
  res.var = {init_var};
  res.anc.resize(1);
  PredictScratch scratch;
  CompsRef comps{res.w, res.mean, res.var, res.anc};
  for (std::size_t tau = 0; tau < observed.size(); ++tau) {
    compute_predictive(model, meas, res.w, res.mean, res.var, observed[tau], scratch);
    Rng rng = Rng::stream(seed, {kRerunStream, now, slot, static_cast<std::uint64_t>(move), tau});
    const double inc = branch_update(model, meas, comps, observed[tau], beta,
                                     log_pred_history[tau], cap, rng, scratch);
    if (inc == kNegInf) return res;  // proposal with zero partial likelihood
    res.partial_loglik += inc;
  }
  res.ok = true;
  return res;
}

// Weighted mean/covariance of particle parameters; lower Cholesky factor of
// scale * cov with jitter escalation, diagonal fallback.
std::vector<double> proposal_cholesky(const std::vector<ThetaParticle>& particles,
                                      const std::vector<double>& w, double scale_factor) {
  const std::size_t d = particles.front().theta.size();
  std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
  for (std::size_t j = 0; j < particles.size(); ++j)
    for (std::size_t a = 0; a < d; ++a) mean[a] += w[j] * particles[j].theta[a];
  for (std::size_t j = 0; j < particles.size(); ++j)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov[a * d + b] +=
            w[j] * (particles[j].theta[a] - mean[a]) * (particles[j].theta[b] - mean[b]);
  for (auto& c : cov) c *= scale_factor;

  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += cov[a * d + a];
  const double base_jitter = std::max(trace / static_cast<double>(d), 1e-12);

  std::vector<double> chol(d * d, 0.0);
  for (double jitter : {1e-12, 1e-8, 1e-4}) {
    std::vector<double> m = cov;
    for (std::size_t a = 0; a < d; ++a) m[a * d + a] += jitter * base_jitter;
    bool ok = true;
    std::fill(chol.begin(), chol.end(), 0.0);
    for (std::size_t a = 0; a < d && ok; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        double sum = m[a * d + b];
        for (std::size_t c = 0; c < b; ++c) sum -= chol[a * d + c] * chol[b * d + c];
        if (a == b) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          chol[a * d + a] = std::sqrt(sum);
        } else {
          chol[a * d + b] = sum / chol[b * d + b];
        }
      }
    }
    if (ok) return chol;
  }
  // Diagonal fallback on the marginal standard deviations.
  std::fill(chol.begin(), chol.end(), 0.0);
  for (std::size_t a = 0; a < d; ++a)
    chol[a * d + a] = std::sqrt(std::max(cov[a * d + a], 1e-8 * base_jitter));
  return chol;
}

}  // namespace

std::vector<double> PriorSpec::sample(const ModelFamily& family, Rng& rng) const {
  std::vector<double> theta;
  theta.push_back(std::abs(sigma_sd * rng.normal()));
  theta.push_back(std::abs(sigma_sd * rng.normal()));
  switch (family.tag) {
    case FamilyTag::uc:
      break;
    case FamilyTag::ar:
      theta.push_back(rng.uniform_open());
      theta.push_back(mu_mean + mu_sd * rng.normal());
      break;
    case FamilyTag::armf:
      theta.push_back(rng.uniform_open());
      break;
    case FamilyTag::uc_t:
      theta.push_back(2.0 + std::exp(log_dof_mean + log_dof_sd * rng.normal()));
      break;
  }
  return theta;
}

double PriorSpec::log_density(const ModelFamily& family, std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != family.param_count()) return kNegInf;
  const double ln2 = 0.6931471805599453;
  double lp = 0.0;
  for (int i = 0; i < 2; ++i) {
    if (theta[static_cast<std::size_t>(i)] < 0.0) return kNegInf;
    lp += ln2 + norm_logpdf(theta[static_cast<std::size_t>(i)], 0.0, sigma_sd * sigma_sd);
  }
  switch (family.tag) {
    case FamilyTag::uc:
      break;
    case FamilyTag::ar:
      if (!(theta[2] > 0.0 && theta[2] < 1.0)) return kNegInf;
      lp += norm_logpdf(theta[3], mu_mean, mu_sd * mu_sd);
      break;
    case FamilyTag::armf:
      if (!(theta[2] > 0.0 && theta[2] < 1.0)) return kNegInf;
      break;
    case FamilyTag::uc_t: {
      if (!(theta[2] > 2.0)) return kNegInf;
      const double l = std::log(theta[2] - 2.0);
      lp += norm_logpdf(l, log_dof_mean, log_dof_sd * log_dof_sd) - l;
      break;
    }
  }
  return lp;
}

ThetaParticleSystem ThetaParticleSystem::init(const ModelFamily& family, const TimeSeries& series,
                                              double beta, const RmdnConfig& config) {
  family.validate();
  series.validate();
  if (!(beta >= 0.0 && beta <= 1.0))
    throw_error(ErrorCode::invalid_input, "beta must lie in [0, 1]");
  if (config.n_theta < 1 || config.component_cap < 1 || config.rejuvenation_moves < 0 ||
      !(config.ess_threshold > 0.0 && config.ess_threshold <= 1.0) ||
      !(config.proposal_scale > 0.0))
    throw_error(ErrorCode::invalid_input, "invalid rmd-n configuration");
  if (config.fixed_theta &&
      static_cast<int>(config.fixed_theta->size()) != family.param_count())
    throw_error(ErrorCode::invalid_input, "fixed_theta dimension mismatch");

  ThetaParticleSystem sys;
  sys.family_ = family;
  sys.beta_ = beta;
  sys.config_ = config;
  sys.expected_length_ = series.size();

  LinearGaussianModel init_probe;
  apply_default_init(init_probe, series, InclusionPath::all(series.size()));
  sys.init_mean_ = init_probe.init_mean;
  sys.init_var_ = init_probe.init_var;

  const std::size_t n = config.fixed_theta ? 1 : static_cast<std::size_t>(config.n_theta);
  sys.particles_.resize(n);
  sys.slots_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    ThetaParticle& p = sys.particles_[j];
    if (config.fixed_theta) {
      p.theta = *config.fixed_theta;
      p.log_prior = 0.0;  // point mass
    } else {
      Rng rng = Rng::stream(config.seed, {kPriorStream, j});
      p.theta = config.prior.sample(family, rng);
      p.log_prior = config.prior.log_density(family, p.theta);
    }
    ModelSpec spec = instantiate(family, p.theta);
    spec.lgm.init_mean = sys.init_mean_;
    spec.lgm.init_var = sys.init_var_;
    p.model = spec.lgm;
    p.measurement = spec.measurement;
    p.log_weight = -std::log(static_cast<double>(n));
    p.comp_weight = {1.0};
    p.comp_mean = {sys.init_mean_};
    p.comp_var = {sys.init_var_};
    p.comp_ancestry.resize(1);
  }
  return sys;
}

std::vector<double> ThetaParticleSystem::normalized_weights() const {
  std::vector<double> lw(particles_.size()), scratch(particles_.size());
  for (std::size_t j = 0; j < particles_.size(); ++j) lw[j] = particles_[j].log_weight;
  const double lse = kernels::logsumexp(lw.data(), scratch.data(), lw.size());
  std::vector<double> w(particles_.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(lw[j] - lse);
  return w;
}

double ThetaParticleSystem::effective_sample_size() const {
  const auto w = normalized_weights();
  const double ss = kernels::ops().sum_sq(w.data(), w.size());
  return ss > 0.0 ? 1.0 / ss : 0.0;
}

double ThetaParticleSystem::predictive_density(double y) const {
  if (!std::isfinite(y)) throw_error(ErrorCode::invalid_input, "non-finite observation");
  const auto w = normalized_weights();
  std::vector<double> terms(particles_.size());
  PredictScratch scratch;
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    const ThetaParticle& p = particles_[j];
    const auto out = compute_predictive(p.model, p.measurement, p.comp_weight, p.comp_mean,
                                        p.comp_var, y, scratch);
    terms[j] = w[j] > 0.0 ? std::log(w[j]) + out.logf_theta : kNegInf;
  }
  std::vector<double> scratch2(terms.size());
  return std::exp(kernels::logsumexp(terms.data(), scratch2.data(), terms.size()));
}

StepRecord ThetaParticleSystem::update(double y) {
  if (!std::isfinite(y)) throw_error(ErrorCode::invalid_input, "non-finite observation");
  const std::size_t n = particles_.size();
  const auto w_pre = normalized_weights();

  // Phase A: per-particle predictive quantities.
  parallel_for(n, config_.threads, [&](std::size_t j) {
    ThetaParticle& p = particles_[j];
    SlotBuffers& sb = slots_[j];
    PredictScratch scratch{std::move(sb.pred_mean), std::move(sb.pred_var), std::move(sb.logf),
                           std::move(sb.logw), std::move(sb.scratch)};
    const auto out =
        compute_predictive(p.model, p.measurement, p.comp_weight, p.comp_mean, p.comp_var, y,
                           scratch);
    sb.pred_mean = std::move(scratch.pred_mean);
    sb.pred_var = std::move(scratch.pred_var);
    sb.logf = std::move(scratch.logf);
    sb.logw = std::move(scratch.logw);
    sb.scratch = std::move(scratch.scratch);
    sb.logf_theta = out.logf_theta;
    sb.pred_m = out.pred_mean;
    sb.pred_v = out.pred_var;
  });

  // Serial: overall predictive F and the evidence increment.
  std::vector<double> terms(n), scratch(n);
  for (std::size_t j = 0; j < n; ++j)
    terms[j] = w_pre[j] > 0.0 ? std::log(w_pre[j]) + slots_[j].logf_theta : kNegInf;
  const double log_f_all = kernels::logsumexp(terms.data(), scratch.data(), n);

  StepRecord rec;
  rec.log_predictive = log_f_all;
  {
    double m = 0.0, second = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m += w_pre[j] * slots_[j].pred_m;
      second += w_pre[j] * (slots_[j].pred_v + slots_[j].pred_m * slots_[j].pred_m);
    }
    rec.pred_mean = m;
    rec.pred_var = std::max(second - m * m, 0.0);
  }

  const double log_beta = beta_ > 0.0 ? std::log(beta_) : kNegInf;
  const double log_excl = beta_ < 1.0 ? std::log1p(-beta_) : kNegInf;
  {
    const double a = log_beta + log_f_all;
    const double b = log_excl;
    const double hi = std::max(a, b);
    log_evidence_ += hi == kNegInf ? kNegInf
                                   : hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }

  // Phase B: branch, reweight, cap.
  parallel_for(n, config_.threads, [&](std::size_t j) {
    ThetaParticle& p = particles_[j];
    SlotBuffers& sb = slots_[j];
    PredictScratch scratch{std::move(sb.pred_mean), std::move(sb.pred_var), std::move(sb.logf),
                           std::move(sb.logw), std::move(sb.scratch)};
    CompsRef comps{p.comp_weight, p.comp_mean, p.comp_var, p.comp_ancestry};
    Rng rng = Rng::stream(config_.seed, {kInnerStream, time_, j});
    const double inc = branch_update(p.model, p.measurement, comps, y, beta_, log_f_all,
                                     config_.component_cap, rng, scratch);
    sb.pred_mean = std::move(scratch.pred_mean);
    sb.pred_var = std::move(scratch.pred_var);
    sb.logf = std::move(scratch.logf);
    sb.logw = std::move(scratch.logw);
    sb.scratch = std::move(scratch.scratch);
    sb.log_increment = inc;
    p.partial_loglik += inc;
    p.log_weight += inc;
  });

  // Serial: renormalize outer weights.
  std::vector<double> lw(n);
  for (std::size_t j = 0; j < n; ++j) lw[j] = particles_[j].log_weight;
  const double lse = kernels::logsumexp(lw.data(), scratch.data(), n);
  if (lse == kNegInf || std::isnan(lse))
    throw_error(ErrorCode::filter_degeneracy,
                "rmd-n update: total particle weight is numerically zero");
  for (auto& p : particles_) p.log_weight -= lse;

  observed_.push_back(y);
  log_predictive_history_.push_back(log_f_all);
  ++time_;

  // Filtered mixture moments for the step record.
  {
    const auto w_post = normalized_weights();
    double m = 0.0, second = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const ThetaParticle& p = particles_[j];
      double pm, pv;
      kernels::ops().mixture_moments(p.comp_weight.data(), p.comp_mean.data(), p.comp_var.data(),
                                     p.n_components(), &pm, &pv);
      m += w_post[j] * pm;
      second += w_post[j] * (pv + pm * pm);
    }
    rec.filtered_mean = m;
    rec.filtered_var = std::max(second - m * m, 0.0);
  }

  if (config_.fixed_lag > 0) {
    frozen_smoothed_.resize(time_, -1.0);
    if (time_ > static_cast<std::size_t>(config_.fixed_lag)) {
      const std::size_t idx = time_ - 1 - static_cast<std::size_t>(config_.fixed_lag);
      frozen_smoothed_[idx] = ancestry_frequency(idx);
    }
  }

  if (n > 1) {
    const double ess = effective_sample_size();
    if (ess < config_.ess_threshold * static_cast<double>(n)) resample_move();
  }
  return rec;
}

void ThetaParticleSystem::resample_move() {
  const std::size_t n = particles_.size();
  const auto w = normalized_weights();
  const std::size_t d = particles_.front().theta.size();
  const auto chol = proposal_cholesky(particles_, w, config_.proposal_scale);

  Rng outer_rng = Rng::stream(config_.seed, {kOuterStream, time_});
  const auto ancestors = systematic_resample(w, n, outer_rng.uniform());
  std::vector<ThetaParticle> next;
  next.reserve(n);
  for (std::uint32_t a : ancestors) next.push_back(particles_[a]);
  particles_ = std::move(next);
  const double uniform_lw = -std::log(static_cast<double>(n));
  for (auto& p : particles_) p.log_weight = uniform_lw;
  ++n_rejuvenations_;

  if (config_.fixed_theta || config_.rejuvenation_moves == 0) return;

  parallel_for(n, config_.threads, [&](std::size_t j) {
    ThetaParticle& p = particles_[j];
    Rng rng = Rng::stream(config_.seed, {kMoveStream, time_, j});
    std::vector<double> z(d), proposal(d);
    for (int move = 0; move < config_.rejuvenation_moves; ++move) {
      for (auto& v : z) v = rng.normal();
      const double log_u = std::log(rng.uniform_open());
      for (std::size_t a = 0; a < d; ++a) {
        double step = 0.0;
        for (std::size_t b = 0; b <= a; ++b) step += chol[a * d + b] * z[b];
        proposal[a] = p.theta[a] + step;
      }
      const double lp = config_.prior.log_density(family_, proposal);
      if (lp == kNegInf) continue;
      ModelSpec spec;
      try {
        spec = instantiate(family_, proposal);
      } catch (const Error&) {
        continue;
      }
      spec.lgm.init_mean = init_mean_;
      spec.lgm.init_var = init_var_;
      auto rerun = rerun_filter(spec.lgm, spec.measurement, beta_, observed_,
                                log_predictive_history_, init_mean_, init_var_,
                                config_.component_cap, config_.seed, time_, j, move);
      const double log_alpha = (lp + rerun.partial_loglik) - (p.log_prior + p.partial_loglik);
      if (rerun.ok && log_u < log_alpha) {
        p.theta = proposal;
        p.model = spec.lgm;
        p.measurement = std::move(spec.measurement);
        p.log_prior = lp;
        p.partial_loglik = rerun.partial_loglik;
        p.comp_weight = std::move(rerun.w);
        p.comp_mean = std::move(rerun.mean);
        p.comp_var = std::move(rerun.var);
        p.comp_ancestry = std::move(rerun.anc);
      }
    }
  });

  const double ess = effective_sample_size();
  if (!(ess >= 1.0))
    throw_error(ErrorCode::estimation_failure,
                "rmd-n: effective sample size collapsed after rejuvenation");
}

double ThetaParticleSystem::ancestry_frequency(std::size_t t) const {
  const auto w = normalized_weights();
  double prob = 0.0;
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    const ThetaParticle& p = particles_[j];
    double inner = 0.0;
    for (std::size_t i = 0; i < p.n_components(); ++i)
      if (p.comp_ancestry[i].included_at(t)) inner += p.comp_weight[i];
    prob += w[j] * inner;
  }
  return prob;
}

SmoothedInclusion ThetaParticleSystem::smoothed() const {
  if (time_ < expected_length_)
    throw_error(ErrorCode::invalid_state,
                "smoothed inclusion requested before filtering reached the full sample");
  SmoothedInclusion out;
  out.probs.resize(time_);
  for (std::size_t t = 0; t < time_; ++t) {
    if (config_.fixed_lag > 0 && t < frozen_smoothed_.size() && frozen_smoothed_[t] >= 0.0)
      out.probs[t] = frozen_smoothed_[t];
    else
      out.probs[t] = ancestry_frequency(t);
  }
  return out;
}

ForecastMixture ThetaParticleSystem::forecast_mixture_step(int horizon) const {
  const auto w = normalized_weights();
  ForecastMixture mix;
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    const ThetaParticle& p = particles_[j];
    for (std::size_t i = 0; i < p.n_components(); ++i) {
      const double wt = w[j] * p.comp_weight[i];
      if (wt <= 0.0) continue;
      const Forecast f = forecast(p.model, {p.comp_mean[i], p.comp_var[i]}, horizon);
      mix.weights.push_back(wt);
      mix.means.push_back(f.step_means.back());
      mix.vars.push_back(f.step_vars.back());
    }
  }
  return mix;
}

ForecastMixture ThetaParticleSystem::forecast_mixture_avg(int horizon) const {
  const auto w = normalized_weights();
  ForecastMixture mix;
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    const ThetaParticle& p = particles_[j];
    for (std::size_t i = 0; i < p.n_components(); ++i) {
      const double wt = w[j] * p.comp_weight[i];
      if (wt <= 0.0) continue;
      const Forecast f = forecast(p.model, {p.comp_mean[i], p.comp_var[i]}, horizon);
      mix.weights.push_back(wt);
      mix.means.push_back(f.avg_mean);
      mix.vars.push_back(f.avg_var);
    }
  }
  return mix;
}

std::vector<double> ThetaParticleSystem::posterior_quantiles(std::size_t param_index,
                                                             std::span<const double> qs) const {
  if (param_index >= particles_.front().theta.size())
    throw_error(ErrorCode::invalid_input, "posterior_quantiles: parameter index out of range");
  const auto w = normalized_weights();
  std::vector<double> values(particles_.size());
  for (std::size_t j = 0; j < particles_.size(); ++j) values[j] = particles_[j].theta[param_index];
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(weighted_quantile(values, w, q));
  return out;
}

double predictive_density(const ThetaParticleSystem& system, double y) {
  return system.predictive_density(y);
}

StepRecord rmd_n_update(ThetaParticleSystem& system, double y) { return system.update(y); }

SmoothedInclusion smoothed_inclusion(const ThetaParticleSystem& system) {
  return system.smoothed();
}

RmdnFit fit_rmd_n(const ModelFamily& family, const TimeSeries& series, double beta,
                  const RmdnConfig& config) {
  RmdnFit fit{ThetaParticleSystem::init(family, series, beta, config), {}, {}};
  fit.steps.reserve(series.size());
  for (double y : series.values) fit.steps.push_back(fit.system.update(y));
  fit.smoothed = fit.system.smoothed();
  return fit;
}

}  // namespace rmd
