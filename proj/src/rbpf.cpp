#include "pdlm/rbpf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdlm/errors.hpp"
#include "pdlm/parallel.hpp"
#include "pdlm/simd/kernels.hpp"

namespace pdlm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Substream coordinates inside one period.
std::uint64_t correction_key(std::size_t m) { return 2 * static_cast<std::uint64_t>(m); }
std::uint64_t mutation_key(std::size_t m) { return 2 * static_cast<std::uint64_t>(m) + 1; }
constexpr std::uint64_t kSelectionKey = std::numeric_limits<std::uint64_t>::max();

// Subtracts the log-sum-exp; returns it.
double normalize_log_weights(std::vector<Particle>& ps) {
  std::vector<double> lw(ps.size());
  for (std::size_t m = 0; m < ps.size(); ++m) lw[m] = ps[m].log_weight;
  const double top = simd::max_value(lw);
  if (top == kNegInf) throw NumericalError("all particle log-weights are -inf");
  std::vector<double> scratch(ps.size());
  const double log_sum = top + std::log(simd::exp_shifted(lw, top, scratch));
  for (auto& p : ps) p.log_weight -= log_sum;
  return log_sum;
}

}  // namespace

void SwarmConfig::validate() const {
  if (M < 1) throw ConfigError("M must be >= 1");
  const double th = threshold();
  if (!(th >= 1.0 || M == 1) || th > static_cast<double>(M)) throw ConfigError("tau must lie in [1, M]");
  if (!(sigma_g > 0.0)) throw ConfigError("sigma_g must be positive");
  if (L < 0) throw ConfigError("L must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::vector<double> Swarm::log_weights() const {
  std::vector<double> lw(particles.size());
  for (std::size_t m = 0; m < particles.size(); ++m) lw[m] = particles[m].log_weight;
  return lw;
}

std::vector<double> Swarm::weights() const {
  const std::vector<double> lw = log_weights();
  std::vector<double> w(lw.size());
  const double top = simd::max_value(lw);
  const double sum = simd::exp_shifted(lw, top, w);
  for (double& x : w) x /= sum;
  return w;
}

Swarm bootstrap_swarm(const StateSpaceParams& params, const SwarmConfig& config) {
  config.validate();
  params.validate();
  Swarm s;
  const KalmanStats k0 = KalmanStats::initial(params);
  s.cov = k0.cov;
  s.particles.assign(config.M, Particle{k0, 1.0, -std::log(static_cast<double>(config.M))});
  return s;
}

double log_proposal_density(double r, double r_prev, double sigma) {
  const double z = (std::log(r) - std::log(r_prev)) / sigma;
  return -std::log(r) - std::log(sigma) - 0.5 * std::log(kTwoPi) - 0.5 * z * z;
}

void correction(Particle& particle, const UnitObservation& u, const Matrix& F,
                const std::shared_ptr<const KalmanCovariances>& cov, const StateSpaceParams& params,
                const SwarmConfig& config, Rng& rng) {
  const double r_prev = particle.length;
  const double r = std::exp(std::log(r_prev) + config.sigma_g * rng.normal());
  KalmanStats k = predict_mean(particle.stats.s_filt, cov, F, params);
  const Vector y = r * u.vector();
  const double n = static_cast<double>(u.dim());
  const double inc = (n - 1.0) * std::log(r) + log_predictive(k, y) - log_proposal_density(r, r_prev, config.sigma_g);
  update_mean(k, r, u);
  particle.stats = std::move(k);
  particle.length = r;
  const double lw = particle.log_weight + inc;
  particle.log_weight = std::isfinite(lw) && r > 0.0 ? lw : kNegInf;
}

Swarm init_swarm(const StateSpaceParams& params, const SwarmConfig& config, const UnitObservation& first_obs,
                 const Rng& rng) {
  Swarm s = bootstrap_swarm(params, config);
  const Matrix& F = params.F.at(1);
  s.cov = predict_covariances(*s.cov, F, params);
  s.t = 1;
  parallel_for(s.particles.size(), config.threads, [&](std::size_t m) {
    Rng r = rng.substream(1, correction_key(m));
    correction(s.particles[m], first_obs, F, s.cov, params, config, r);
  });
  for (const auto& p : s.particles) s.nonfinite += p.log_weight == kNegInf;
  normalize_log_weights(s.particles);
  return s;
}

double effective_sample_size(std::span<const double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("weights must be nonnegative");
  }
  const simd::SumSq s = simd::sum_and_sum_sq(weights);
  if (!(s.sum > 0.0)) throw DomainError("effective_sample_size: all weights are zero");
  return s.sum * s.sum / s.sum_sq;
}

std::vector<std::size_t> resample_indices(std::span<const double> w, std::size_t count, bool systematic, Rng& rng) {
  std::vector<double> cum(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cum[i] = acc += w[i];
  std::vector<std::size_t> idx(count);
  auto locate = [&](double x) {
    const auto it = std::upper_bound(cum.begin(), cum.end(), x * acc);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), w.size() - 1);
  };
  if (systematic) {
    const double u0 = rng.uniform();
    for (std::size_t j = 0; j < count; ++j) idx[j] = locate((static_cast<double>(j) + u0) / static_cast<double>(count));
  } else {
    for (std::size_t j = 0; j < count; ++j) idx[j] = locate(rng.uniform());
  }
  return idx;
}

bool selection(Swarm& swarm, const SwarmConfig& config, Rng& rng) {
  const std::vector<double> w = swarm.weights();
  if (effective_sample_size(w) >= config.threshold()) return false;
  const std::vector<std::size_t> idx = resample_indices(w, swarm.particles.size(), config.systematic, rng);
  std::vector<Particle> next;
  next.reserve(idx.size());
  const double lw = -std::log(static_cast<double>(idx.size()));
  for (std::size_t j : idx) {
    next.push_back(swarm.particles[j]);
    next.back().log_weight = lw;
  }
  swarm.particles = std::move(next);
  return true;
}

void mutation(Particle& particle, const UnitObservation& u, const SwarmConfig& config, Rng& rng) {
  if (config.L == 0) return;
  const LengthConditional lc = LengthConditional::from(u, particle.stats.y_pred, particle.stats.cov->omega_chol);
  double r = particle.length;
  for (int i = 0; i < config.L; ++i) r = lc.step(r, rng);
  particle.length = r;
  update_mean(particle.stats, r, u);
}

StepRecord rbpf_step(Swarm& swarm, const UnitObservation& u, const StateSpaceParams& params,
                     const SwarmConfig& config, const Rng& rng) {
  StepRecord rec;
  rec.t = swarm.t + 1;
  const Matrix& F = params.F.at(rec.t);
  swarm.cov = predict_covariances(*swarm.cov, F, params);

  const std::size_t M = swarm.particles.size();
  parallel_for(M, config.threads, [&](std::size_t m) {
    Rng r = rng.substream(rec.t, correction_key(m));
    correction(swarm.particles[m], u, F, swarm.cov, params, config, r);
  });
  for (const auto& p : swarm.particles) rec.nonfinite += p.log_weight == kNegInf;
  swarm.nonfinite += rec.nonfinite;
  // Previous weights were normalized, so the log-sum-exp is the evidence increment.
  rec.log_evidence = normalize_log_weights(swarm.particles);
  rec.ess = effective_sample_size(swarm.weights());

  Rng sel = rng.substream(rec.t, kSelectionKey);
  rec.resampled = selection(swarm, config, sel);

  parallel_for(M, config.threads, [&](std::size_t m) {
    Rng r = rng.substream(rec.t, mutation_key(m));
    mutation(swarm.particles[m], u, config, r);
  });
  swarm.t = rec.t;
  return rec;
}

std::vector<UnitObservation> predictive_sample(const Swarm& swarm, const Matrix& F_next,
                                               const StateSpaceParams& params, std::size_t n_draws, Rng& rng) {
  const std::vector<double> w = swarm.weights();
  const std::vector<std::size_t> idx = resample_indices(w, n_draws, false, rng);
  const Matrix p_factor = psd_factor(swarm.cov->P_filt);
  const Matrix w_factor = psd_factor(params.W);
  const Matrix sigma_factor = spd_cholesky(params.Sigma, "Sigma").matrixL();
  std::vector<UnitObservation> out;
  out.reserve(n_draws);
  for (std::size_t j : idx) {
    const Vector s = sample_mvn(swarm.particles[j].stats.s_filt, p_factor, rng);
    const Vector s_next = sample_mvn(params.G * s, w_factor, rng);
    out.push_back(sample_projected_normal_factor(F_next * s_next, sigma_factor, rng));
  }
  return out;
}

}  // namespace pdlm
