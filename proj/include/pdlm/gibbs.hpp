#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdlm/directional.hpp"
#include "pdlm/kalman.hpp"
#include "pdlm/linalg.hpp"
#include "pdlm/rng.hpp"

// Slice-within-Gibbs sampler for p(s_{0:T}, r_{1:T}, Gamma, gamma, G, W | u_{1:T}).

namespace pdlm {

struct Priors {
  // (G, W) ~ MNIW(nu0, Psi0, Gbar0, Omega0^{-1}): W ~ IW_p(nu0, Psi0) and,
  // given W, G^T ~ MN(Gbar0^T, Omega0^{-1}, W). Gbar0 is the prior mean of G
  // itself; Omega0 is the precision matrix of the regression rows.
  double nu0 = 0.0;
  Matrix Psi0;
  Matrix Gbar0;
  Matrix Omega0;
  // Gamma ~ IW_{n-1}(d0, Phi0), gamma ~ N_{n-1}(gammabar0, Lambda0).
  double d0 = 0.0;
  Matrix Phi0;
  Vector gammabar0;
  Matrix Lambda0;
  // s_0 ~ N(s0_mean, P0).
  Vector s0_mean;
  Matrix P0;

  // s0 = 0, P0 = I, nu0 = p + 2, Psi0 = I, Gbar0 = 0, Omega0 = I,
  // d0 = n + 1, Phi0 = I, gammabar0 = 0, Lambda0 = I.
  static Priors defaults(Eigen::Index n, Eigen::Index p);
  void validate(Eigen::Index n, Eigen::Index p) const;
};

struct ThetaDraw {
  SigmaStructured sigma_parts;
  Matrix G;
  Matrix W;
  Matrix Sigma;

  static ThetaDraw make(SigmaStructured parts, Matrix G, Matrix W);
  // Prior means (prior matrices themselves where a mean does not exist).
  static ThetaDraw prior_mean(const Priors& priors);
};

// Blocks flagged here keep their current value during a sweep.
struct FixedMask {
  bool Gamma = false;
  bool gamma = false;
  bool G = false;
  bool W = false;

  static FixedMask none() { return {}; }
  static FixedMask sigma_only() { return {true, true, false, false}; }
  static FixedMask all_theta() { return {true, true, true, true}; }
  bool sigma_fixed() const { return Gamma && gamma; }
};

// Deliberate bugs for mutation-testing the Geweke harness. Never set in production.
struct Faults {
  bool skip_lengths = false;
  bool wrong_dT = false;      // d_T = d0 instead of d0 + T
  bool transposed_G = false;  // G = B instead of B^T
};

struct GibbsState {
  ThetaDraw theta;
  std::vector<Vector> states;  // s_0..s_T
  std::vector<double> lengths;  // r_1..r_T
  std::size_t iteration = 0;
  std::size_t gw_stalls = 0;  // consecutive sweeps where (G, W) could not move

  static GibbsState initial(const ThetaDraw& theta, std::size_t T, Eigen::Index p);
  void check_invariants() const;
};

struct ModelSpec {
  Design F;
  Priors priors;
  FixedMask fixed;
  bool truncate = true;  // stationarity truncation of G
};

StateSpaceParams state_space(const ModelSpec& spec, const ThetaDraw& theta);

// z_t = r_t u_t - F_t s_t, t = 1..T.
std::vector<Vector> measurement_residuals(const GibbsState& state, const std::vector<UnitObservation>& obs,
                                          const Design& F);

std::vector<Vector> draw_states(const GibbsState& state, const std::vector<UnitObservation>& obs,
                                const ModelSpec& spec, Rng& rng);

struct GammaPosterior {
  double dof;
  Matrix scale;
};
GammaPosterior Gamma_posterior(const std::vector<Vector>& z, const Vector& gamma, const Priors& priors,
                               bool wrong_dT = false);
Matrix draw_Gamma(const GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec, Rng& rng,
                  bool wrong_dT = false);

struct GaussianPosterior {
  Vector mean;
  Matrix cov;
};
// Collapsed form: Lambda_T^{-1} = Lambda0^{-1} + (sum z_n^2) Gamma^{-1}.
GaussianPosterior gamma_posterior(const std::vector<Vector>& z, const Matrix& Gamma, const Priors& priors);
Vector draw_gamma(const GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec, Rng& rng);

// Posterior of the VAR(1) regression Y = X B + E with B = G^T, rows of E ~ N(0, W).
struct MniwPosterior {
  double nu;
  Matrix Psi;
  Matrix B;        // Gbar_T in regression orientation (p x p)
  Matrix Omega;    // X^T X + Omega0
};
MniwPosterior mniw_posterior(const std::vector<Vector>& states, const Priors& priors);

struct GWDraw {
  Matrix G;
  Matrix W;
  std::size_t attempts = 0;
  bool kept = false;  // every proposal was rejected; (G, W) is the current value
};
// Joint rejection until spectral radius(G) < 1 when `truncate` is set.
// After 10^4 consecutive rejections this throws NumericalError, or with
// `keep_on_exhaustion` returns the current (G, W). Keeping the current value
// is an independence Metropolis step against the untruncated posterior, so
// the truncated conditional stays invariant.
GWDraw draw_G_W(const std::vector<Vector>& states, const Priors& priors, bool truncate, const FixedMask& fixed,
                const Matrix& G_current, const Matrix& W_current, Rng& rng, bool transposed_G = false,
                bool keep_on_exhaustion = false);

// One slice step per r_t (or `steps`), with RNG substream (iteration, t) for
// period t so results do not depend on `threads`.
std::vector<double> draw_lengths(const GibbsState& state, const std::vector<UnitObservation>& obs, const Design& F,
                                 const Rng& stream_root, int steps = 1, int threads = 1);

struct GibbsConfig {
  std::size_t iterations = 5000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  int slice_steps = 1;
  int threads = 1;
  bool store_states_T = true;
  bool store_paths = false;
  bool store_lengths = false;
  Faults faults;

  void validate() const;
};

// One full scan: states, Gamma, gamma, (G, W), lengths. `rng` is the root
// of the run; every block draws from a substream keyed by the iteration.
void gibbs_sweep(GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec,
                 const GibbsConfig& config, const Rng& rng);

struct PosteriorDraws {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> iteration;
  std::vector<ThetaDraw> theta;
  std::vector<Vector> s_T;                       // when stored
  std::vector<std::vector<Vector>> paths;        // when stored
  std::vector<std::vector<double>> lengths;      // when stored
  std::size_t size() const { return theta.size(); }
};

// Starts from r_t = 1, s = 0 and theta at the prior means unless `start` is
// given (fixed blocks take their values from `start`).
PosteriorDraws run_gibbs(const std::vector<UnitObservation>& obs, const ModelSpec& spec, const GibbsConfig& config,
                         const std::optional<ThetaDraw>& start = std::nullopt);

}  // namespace pdlm
