#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pdlm/directional.hpp"
#include "pdlm/kalman.hpp"
#include "pdlm/rng.hpp"

// Rao-Blackwellized particle filter over the latent lengths: each particle
// carries r_t, a log importance weight and the exact Kalman statistics of
// p(s_t | r_{1:t}, u_{1:t}). Static parameters are fixed and known.

namespace pdlm {

struct SwarmConfig {
  std::size_t M = 1000;
  double tau = 0.0;      // ESS threshold (absolute); 0 means M / 2
  double sigma_g = 0.25; // log-scale sd of the random-walk proposal
  int L = 2;             // mutation slice steps
  bool systematic = false;
  int threads = 1;

  double threshold() const { return tau > 0.0 ? tau : 0.5 * static_cast<double>(M); }
  void validate() const;
};

struct Particle {
  KalmanStats stats;
  double length = 1.0;
  double log_weight = 0.0;
};

struct Swarm {
  std::vector<Particle> particles;
  std::shared_ptr<const KalmanCovariances> cov;  // shared by every particle
  std::size_t t = 0;
  std::size_t nonfinite = 0;  // particles dropped for a non-finite weight

  std::vector<double> log_weights() const;
  // Normalized weights (sum to 1).
  std::vector<double> weights() const;
};

// All particles at K_0 with r = 1 and equal weights.
Swarm bootstrap_swarm(const StateSpaceParams& params, const SwarmConfig& config);

// Bootstrap followed by the t = 1 correction: r_1 ~ LogNormal(0, sigma_g^2),
// weights normalized.
Swarm init_swarm(const StateSpaceParams& params, const SwarmConfig& config, const UnitObservation& first_obs,
                 const Rng& rng);

// log g(r) for r ~ LogNormal(log r_prev, sigma^2), including the 1/r Jacobian.
double log_proposal_density(double r, double r_prev, double sigma);

// Proposes r_t, advances K, and adds the incremental log weight. `cov` is the
// period-t covariance block shared by the swarm.
void correction(Particle& particle, const UnitObservation& u, const Matrix& F,
                const std::shared_ptr<const KalmanCovariances>& cov, const StateSpaceParams& params,
                const SwarmConfig& config, Rng& rng);

// (sum w)^2 / sum w^2. Throws DomainError when all weights are zero.
double effective_sample_size(std::span<const double> weights);

// Resamples when ESS < tau and resets weights to 1/M; returns whether it did.
bool selection(Swarm& swarm, const SwarmConfig& config, Rng& rng);

// L slice steps on r_t against r^{n-1} N(r u; y_pred, Omega_pred), then the
// filtered mean is recomputed from the final r_t. The weight is unchanged.
void mutation(Particle& particle, const UnitObservation& u, const SwarmConfig& config, Rng& rng);

struct StepRecord {
  std::size_t t = 0;
  double ess = 0.0;           // before selection
  bool resampled = false;
  double log_evidence = 0.0;  // log p(u_t | u_{1:t-1}) estimate, up to the q(u) constant
  std::size_t nonfinite = 0;
};

// Correction, selection, mutation for period swarm.t + 1. Substreams are keyed
// by (t, particle) so the output does not depend on config.threads.
StepRecord rbpf_step(Swarm& swarm, const UnitObservation& u, const StateSpaceParams& params,
                     const SwarmConfig& config, const Rng& rng);

// s_t ~ N(s_filt, P_filt) from a particle chosen by weight, s_{t+1} = G s_t + eta,
// u ~ PN(F_next s_{t+1}, Sigma).
std::vector<UnitObservation> predictive_sample(const Swarm& swarm, const Matrix& F_next,
                                               const StateSpaceParams& params, std::size_t n_draws, Rng& rng);

// Returns the indices chosen by multinomial (or systematic) resampling.
std::vector<std::size_t> resample_indices(std::span<const double> normalized_weights, std::size_t count,
                                          bool systematic, Rng& rng);

}  // namespace pdlm
