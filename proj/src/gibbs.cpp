#include "pdlm/gibbs.hpp"

#include <string>

#include "pdlm/errors.hpp"
#include "pdlm/matrix_distributions.hpp"
#include "pdlm/parallel.hpp"

namespace pdlm {

namespace {

// Stream tags under the run's root generator.
constexpr std::uint64_t kSweepStream = 1;
constexpr std::uint64_t kLengthStream = 2;

void require_spd(const Matrix& m, Eigen::Index dim, const std::string& what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError(what + " must be " + std::to_string(dim) + " x " + std::to_string(dim));
  }
  if (!is_spd(m)) throw ConfigError(what + " is not positive definite");
}

}  // namespace

Priors Priors::defaults(Eigen::Index n, Eigen::Index p) {
  Priors pr;
  pr.nu0 = static_cast<double>(p) + 2.0;
  pr.Psi0 = Matrix::Identity(p, p);
  pr.Gbar0 = Matrix::Zero(p, p);
  pr.Omega0 = Matrix::Identity(p, p);
  pr.d0 = static_cast<double>(n) + 1.0;
  pr.Phi0 = Matrix::Identity(n - 1, n - 1);
  pr.gammabar0 = Vector::Zero(n - 1);
  pr.Lambda0 = Matrix::Identity(n - 1, n - 1);
  pr.s0_mean = Vector::Zero(p);
  pr.P0 = Matrix::Identity(p, p);
  return pr;
}

void Priors::validate(Eigen::Index n, Eigen::Index p) const {
  if (!(nu0 > static_cast<double>(p) + 1.0)) throw ConfigError("nu0 must exceed p + 1");
  if (!(d0 > static_cast<double>(n))) throw ConfigError("d0 must exceed n");
  require_spd(Psi0, p, "Psi0");
  require_spd(Omega0, p, "Omega0");
  require_spd(Phi0, n - 1, "Phi0");
  require_spd(Lambda0, n - 1, "Lambda0");
  if (Gbar0.rows() != p || Gbar0.cols() != p) throw DimensionError("Gbar0 must be p x p");
  if (gammabar0.size() != n - 1) throw DimensionError("gammabar0 must have length n - 1");
  if (s0_mean.size() != p || P0.rows() != p || P0.cols() != p) throw DimensionError("s0_mean/P0 must match p");
}

ThetaDraw ThetaDraw::make(SigmaStructured parts, Matrix G, Matrix W) {
  ThetaDraw th;
  th.Sigma = assemble_sigma(parts);
  th.sigma_parts = std::move(parts);
  th.G = std::move(G);
  th.W = std::move(W);
  return th;
}

ThetaDraw ThetaDraw::prior_mean(const Priors& pr) {
  const double p = static_cast<double>(pr.Psi0.rows());
  const double k = static_cast<double>(pr.Phi0.rows());
  const Matrix W = pr.nu0 - p - 1.0 > 0.0 ? Matrix(pr.Psi0 / (pr.nu0 - p - 1.0)) : pr.Psi0;
  const Matrix Gamma = pr.d0 - k - 1.0 > 0.0 ? Matrix(pr.Phi0 / (pr.d0 - k - 1.0)) : pr.Phi0;
  return make({Gamma, pr.gammabar0}, pr.Gbar0, W);
}

GibbsState GibbsState::initial(const ThetaDraw& theta, std::size_t T, Eigen::Index p) {
  GibbsState s;
  s.theta = theta;
  s.states.assign(T + 1, Vector::Zero(p));
  s.lengths.assign(T, 1.0);
  return s;
}

void GibbsState::check_invariants() const {
  if (states.size() != lengths.size() + 1) throw DimensionError("states must have length T + 1");
  for (double r : lengths) {
    if (!(r > 0.0) || !std::isfinite(r)) throw NumericalError("latent length left (0, inf)");
  }
  if (!is_spd(theta.W) && theta.W.squaredNorm() != 0.0) throw NumericalError("W lost positive definiteness");
  if (!is_spd(theta.Sigma)) throw NumericalError("Sigma lost positive definiteness");
}

StateSpaceParams state_space(const ModelSpec& spec, const ThetaDraw& theta) {
  StateSpaceParams ss;
  ss.F = spec.F;
  ss.G = theta.G;
  ss.W = theta.W;
  ss.Sigma = theta.Sigma;
  ss.s0_mean = spec.priors.s0_mean;
  ss.P0 = spec.priors.P0;
  return ss;
}

std::vector<Vector> measurement_residuals(const GibbsState& state, const std::vector<UnitObservation>& obs,
                                          const Design& F) {
  std::vector<Vector> z(obs.size());
  for (std::size_t t = 1; t <= obs.size(); ++t) {
    z[t - 1] = state.lengths[t - 1] * obs[t - 1].vector() - F.at(t) * state.states[t];
  }
  return z;
}

std::vector<Vector> draw_states(const GibbsState& state, const std::vector<UnitObservation>& obs,
                                const ModelSpec& spec, Rng& rng) {
  return simulation_smoother(state.lengths, obs, state_space(spec, state.theta), rng);
}

GammaPosterior Gamma_posterior(const std::vector<Vector>& z, const Vector& gamma, const Priors& priors,
                               bool wrong_dT) {
  GammaPosterior post;
  post.dof = priors.d0 + (wrong_dT ? 0.0 : static_cast<double>(z.size()));
  post.scale = priors.Phi0;
  const Eigen::Index k = priors.Phi0.rows();
  for (const Vector& zt : z) {
    const Vector e = zt.head(k) - gamma * zt[k];
    post.scale.noalias() += e * e.transpose();
  }
  symmetrize(post.scale);
  if (!is_spd(post.scale)) throw NumericalError("Phi_T is not positive definite");
  return post;
}

Matrix draw_Gamma(const GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec, Rng& rng,
                  bool wrong_dT) {
  const auto z = measurement_residuals(state, obs, spec.F);
  const GammaPosterior post = Gamma_posterior(z, state.theta.sigma_parts.gamma, spec.priors, wrong_dT);
  return sample_inverse_wishart(post.dof, post.scale, rng);
}

GaussianPosterior gamma_posterior(const std::vector<Vector>& z, const Matrix& Gamma, const Priors& priors) {
  const Eigen::Index k = Gamma.rows();
  double zn2 = 0.0;
  Vector cross = Vector::Zero(k);
  for (const Vector& zt : z) {
    zn2 += zt[k] * zt[k];
    cross += zt[k] * zt.head(k);
  }
  const Eigen::LLT<Matrix> gamma_chol = spd_cholesky(Gamma, "Gamma");
  const Eigen::LLT<Matrix> lambda0_chol = spd_cholesky(priors.Lambda0, "Lambda0");
  const Matrix I = Matrix::Identity(k, k);
  Matrix precision = lambda0_chol.solve(I) + zn2 * gamma_chol.solve(I);
  symmetrize(precision);
  const Eigen::LLT<Matrix> prec_chol = spd_cholesky(precision, "Lambda_T^{-1}");
  GaussianPosterior post;
  post.cov = prec_chol.solve(I);
  symmetrize(post.cov);
  post.mean = prec_chol.solve(lambda0_chol.solve(priors.gammabar0) + gamma_chol.solve(cross));
  return post;
}

Vector draw_gamma(const GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec, Rng& rng) {
  const auto z = measurement_residuals(state, obs, spec.F);
  const GaussianPosterior post = gamma_posterior(z, state.theta.sigma_parts.Gamma, spec.priors);
  return sample_mvn(post.mean, spd_cholesky(post.cov, "Lambda_T").matrixL(), rng);
}

namespace {

struct Moments {
  Matrix XtX;
  Matrix XtY;
  Matrix YtY;
};

Moments var_moments(const std::vector<Vector>& states) {
  const Eigen::Index p = states.front().size();
  Moments m{Matrix::Zero(p, p), Matrix::Zero(p, p), Matrix::Zero(p, p)};
  for (std::size_t t = 1; t < states.size(); ++t) {
    m.XtX.noalias() += states[t - 1] * states[t - 1].transpose();
    m.XtY.noalias() += states[t - 1] * states[t].transpose();
    m.YtY.noalias() += states[t] * states[t].transpose();
  }
  return m;
}

// (Y - X B)^T (Y - X B)
Matrix residual_cross(const Moments& m, const Matrix& B) {
  Matrix r = m.YtY - B.transpose() * m.XtY - m.XtY.transpose() * B + B.transpose() * m.XtX * B;
  symmetrize(r);
  return r;
}

// Row factor A with A A^T = Omega^{-1}.
Matrix inverse_factor(const Matrix& omega) {
  const Eigen::LLT<Matrix> chol = spd_cholesky(omega, "Omega_T");
  const Matrix I = Matrix::Identity(omega.rows(), omega.cols());
  return chol.matrixU().solve(I);
}

}  // namespace

MniwPosterior mniw_posterior(const std::vector<Vector>& states, const Priors& priors) {
  if (states.size() < 2) throw DimensionError("need s_0..s_T with T >= 1");
  const Moments m = var_moments(states);
  const Matrix B0 = priors.Gbar0.transpose();
  MniwPosterior post;
  post.nu = priors.nu0 + static_cast<double>(states.size() - 1);
  post.Omega = m.XtX + priors.Omega0;
  symmetrize(post.Omega);
  post.B = spd_cholesky(post.Omega, "Omega_T").solve(m.XtY + priors.Omega0 * B0);
  const Matrix dB = post.B - B0;
  post.Psi = priors.Psi0 + residual_cross(m, post.B) + dB.transpose() * priors.Omega0 * dB;
  symmetrize(post.Psi);
  return post;
}

GWDraw draw_G_W(const std::vector<Vector>& states, const Priors& priors, bool truncate, const FixedMask& fixed,
                const Matrix& G_current, const Matrix& W_current, Rng& rng, bool transposed_G,
                bool keep_on_exhaustion) {
  GWDraw out{G_current, W_current, 0};
  if (fixed.G && fixed.W) return out;
  const MniwPosterior post = mniw_posterior(states, priors);

  if (fixed.G) {
    const Moments m = var_moments(states);
    const Matrix B = G_current.transpose();
    const Matrix dB = B - priors.Gbar0.transpose();
    Matrix scale = priors.Psi0 + residual_cross(m, B) + dB.transpose() * priors.Omega0 * dB;
    symmetrize(scale);
    out.W = sample_inverse_wishart(post.nu + static_cast<double>(priors.Psi0.rows()), scale, rng);
    out.attempts = 1;
    return out;
  }

  const Matrix row_factor = inverse_factor(post.Omega);
  const std::size_t cap = 10'000;
  for (std::size_t attempt = 1; attempt <= cap; ++attempt) {
    const Matrix W = fixed.W ? W_current : sample_inverse_wishart(post.nu, post.Psi, rng);
    const Matrix col_factor = psd_factor(W);
    const Matrix B = sample_matrix_normal(post.B, row_factor, col_factor, rng);
    Matrix G = transposed_G ? B : Matrix(B.transpose());
    if (!truncate || spectral_radius(G) < 1.0) {
      out.G = std::move(G);
      out.W = W;
      out.attempts = attempt;
      return out;
    }
  }
  if (keep_on_exhaustion) {
    out.attempts = cap;
    out.kept = true;
    return out;
  }
  throw NumericalError("draw_G_W: 10^4 consecutive non-stationary draws of G (prior-data conflict?)");
}

std::vector<double> draw_lengths(const GibbsState& state, const std::vector<UnitObservation>& obs, const Design& F,
                                 const Rng& stream_root, int steps, int threads) {
  const std::size_t T = obs.size();
  std::vector<double> r = state.lengths;
  const Eigen::LLT<Matrix> sigma_chol = spd_cholesky(state.theta.Sigma, "Sigma");
  parallel_for(T, threads, [&](std::size_t t) {
    Rng rng = stream_root.substream(t + 1);
    const Vector m = F.at(t + 1) * state.states[t + 1];
    const LengthConditional lc = LengthConditional::from(obs[t], m, sigma_chol);
    for (int i = 0; i < steps; ++i) r[t] = lc.step(r[t], rng);
  });
  return r;
}

void GibbsConfig::validate() const {
  if (iterations <= burn_in) throw ConfigError("iterations must exceed burn_in");
  if (thin == 0) throw ConfigError("thin must be >= 1");
  if (slice_steps < 1) throw ConfigError("slice_steps must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

constexpr std::size_t kMaxStalls = 50;

void gibbs_sweep(GibbsState& state, const std::vector<UnitObservation>& obs, const ModelSpec& spec,
                 const GibbsConfig& config, const Rng& rng) {
  const std::size_t it = state.iteration + 1;
  Rng sweep = rng.substream(kSweepStream, it);

  state.states = draw_states(state, obs, spec, sweep);

  SigmaStructured parts = state.theta.sigma_parts;
  if (!spec.fixed.Gamma) {
    parts.Gamma = draw_Gamma(state, obs, spec, sweep, config.faults.wrong_dT);
    state.theta.sigma_parts.Gamma = parts.Gamma;
  }
  if (!spec.fixed.gamma) {
    parts.gamma = draw_gamma(state, obs, spec, sweep);
  }
  if (!spec.fixed.sigma_fixed()) state.theta = ThetaDraw::make(parts, state.theta.G, state.theta.W);

  const GWDraw gw = draw_G_W(state.states, spec.priors, spec.truncate, spec.fixed, state.theta.G, state.theta.W,
                             sweep, config.faults.transposed_G, true);
  state.gw_stalls = gw.kept ? state.gw_stalls + 1 : 0;
  if (state.gw_stalls >= kMaxStalls) {
    throw NumericalError("gibbs: (G, W) stuck for " + std::to_string(kMaxStalls) +
                         " sweeps; no stationary G in 10^4 proposals (prior-data conflict?)");
  }
  state.theta.G = gw.G;
  state.theta.W = gw.W;

  if (!config.faults.skip_lengths) {
    state.lengths =
        draw_lengths(state, obs, spec.F, rng.substream(kLengthStream, it), config.slice_steps, config.threads);
  }
  state.iteration = it;
}

PosteriorDraws run_gibbs(const std::vector<UnitObservation>& obs, const ModelSpec& spec, const GibbsConfig& config,
                         const std::optional<ThetaDraw>& start) {
  config.validate();
  if (obs.empty()) throw DataError("no observations");
  const Eigen::Index n = obs.front().dim();
  const Eigen::Index p = spec.F.p();
  if (spec.F.n() != n) throw DimensionError("design rows do not match the observation dimension");
  if (!spec.F.is_constant() && spec.F.periods() < obs.size()) throw DimensionError("design shorter than the series");
  spec.priors.validate(n, p);

  GibbsState state = GibbsState::initial(start ? *start : ThetaDraw::prior_mean(spec.priors), obs.size(), p);
  const Rng root(config.seed);

  PosteriorDraws out;
  out.n = n;
  out.p = p;
  out.seed = config.seed;
  const std::size_t kept = (config.iterations - config.burn_in) / config.thin;
  out.theta.reserve(kept);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    gibbs_sweep(state, obs, spec, config, root);
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0) continue;
    out.iteration.push_back(it);
    out.theta.push_back(state.theta);
    if (config.store_states_T) out.s_T.push_back(state.states.back());
    if (config.store_paths) out.paths.push_back(state.states);
    if (config.store_lengths) out.lengths.push_back(state.lengths);
  }
  return out;
}

}  // namespace pdlm
