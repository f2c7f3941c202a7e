#include "pdlm/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "pdlm/errors.hpp"
#include "pdlm/forecast.hpp"
#include "pdlm/matrix_distributions.hpp"
#include "pdlm/parallel.hpp"

namespace pdlm {

namespace {

constexpr std::size_t kRejectionCap = 10'000;

Matrix inverse_row_factor(const Matrix& omega) {
  const Eigen::LLT<Matrix> chol = spd_cholesky(omega, "Omega0");
  return chol.matrixU().solve(Matrix::Identity(omega.rows(), omega.cols()));
}

std::string idx(const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }
std::string idx(const char* base, std::size_t i, std::size_t j) {
  return std::string(base) + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

}  // namespace

ThetaDraw sample_theta_prior(const Priors& priors, Eigen::Index n, bool sigma_fixed, bool truncate, Rng& rng) {
  SigmaStructured parts;
  if (sigma_fixed) {
    parts.Gamma = Matrix::Identity(n - 1, n - 1);
    parts.gamma = Vector::Zero(n - 1);
  } else {
    parts.Gamma = sample_inverse_wishart(priors.d0, priors.Phi0, rng);
    parts.gamma = sample_mvn(priors.gammabar0, spd_cholesky(priors.Lambda0, "Lambda0").matrixL(), rng);
  }
  const Matrix row_factor = inverse_row_factor(priors.Omega0);
  const Matrix B0 = priors.Gbar0.transpose();
  for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
    Matrix W = sample_inverse_wishart(priors.nu0, priors.Psi0, rng);
    const Matrix B = sample_matrix_normal(B0, row_factor, spd_cholesky(W, "W").matrixL(), rng);
    Matrix G = B.transpose();
    if (!truncate || spectral_radius(G) < 1.0) return ThetaDraw::make(std::move(parts), std::move(G), std::move(W));
  }
  throw NumericalError("sample_theta_prior: 10^4 non-stationary prior draws");
}

JointDraw simulate_series(const ThetaDraw& theta, const Design& F, const Priors& priors, std::size_t T, Rng& rng) {
  JointDraw d;
  d.theta = theta;
  const Matrix w_factor = psd_factor(theta.W);
  const Matrix sigma_factor = spd_cholesky(theta.Sigma, "Sigma").matrixL();
  d.states.reserve(T + 1);
  d.states.push_back(sample_mvn(priors.s0_mean, psd_factor(priors.P0), rng));
  for (std::size_t t = 1; t <= T; ++t) {
    d.states.push_back(sample_mvn(theta.G * d.states.back(), w_factor, rng));
    Vector y;
    do {
      y = sample_mvn(F.at(t) * d.states.back(), sigma_factor, rng);
    } while (!(y.norm() >= 1e-300));
    const double r = y.norm();
    d.lengths.push_back(r);
    d.obs.emplace_back(y / r);
  }
  return d;
}

Priors GewekeConfig::resolved_priors() const {
  return priors.Psi0.size() == 0 ? Priors::defaults(n, p) : priors;
}

Design GewekeConfig::design() const {
  Rng rng = Rng(seed).substream(0xF);
  std::vector<Matrix> fs;
  for (std::size_t t = 0; t < T; ++t) {
    Matrix f(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < n; ++i) f(i, j) = rng.normal();
    fs.push_back(std::move(f));
  }
  return Design::per_period(std::move(fs));
}

JointDraw marginal_conditional_sample(const GewekeConfig& cfg, const Design& F, Rng& rng) {
  const Priors pr = cfg.resolved_priors();
  return simulate_series(sample_theta_prior(pr, cfg.n, cfg.sigma_identity, cfg.truncate, rng), F, pr, cfg.T, rng);
}

void successive_conditional_step(JointDraw& state, std::size_t& iteration, const GewekeConfig& cfg,
                                 const Design& F, const Rng& root) {
  if (cfg.n != 2) throw DimensionError("the data redraw is implemented for n = 2");
  ModelSpec spec{F, cfg.resolved_priors(), cfg.sigma_identity ? FixedMask::sigma_only() : FixedMask::none(),
                 cfg.truncate};
  GibbsConfig gc;
  gc.iterations = 1;
  gc.burn_in = 0;
  gc.faults = cfg.faults;

  GibbsState gs;
  gs.theta = state.theta;
  gs.states = std::move(state.states);
  gs.lengths = std::move(state.lengths);
  gs.iteration = iteration;
  gibbs_sweep(gs, state.obs, spec, gc, root);
  iteration = gs.iteration;

  Rng rng = root.substream(3, iteration);
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    const Vector mu = F.at(t) * gs.states[t];
    const double r = gs.lengths[t - 1];
    const Angle a = cfg.sigma_identity ? accept_reject_angle(r, mu, rng)
                                       : accept_reject_angle_general(r, mu, gs.theta.Sigma, rng);
    state.obs[t - 1] = angle_to_unit(a);
  }
  state.theta = std::move(gs.theta);
  state.states = std::move(gs.states);
  state.lengths = std::move(gs.lengths);
}

std::vector<std::string> monitored_names(const GewekeConfig& cfg) {
  std::vector<std::string> names;
  for (std::size_t t = 1; t <= cfg.T; ++t)
    for (Eigen::Index i = 0; i < cfg.n; ++i) names.push_back(idx("u", t, i));
  for (std::size_t t = 1; t <= cfg.T; ++t) names.push_back(idx("r", t));
  for (std::size_t t = 1; t <= cfg.T; ++t)
    for (Eigen::Index i = 0; i < cfg.p; ++i) names.push_back(idx("s", t, i));
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = 0; j < cfg.p; ++j) names.push_back(idx("G", i, j));
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = i; j < cfg.p; ++j) names.push_back(idx("W", i, j));
  if (!cfg.sigma_identity) {
    for (Eigen::Index i = 0; i < cfg.n - 1; ++i)
      for (Eigen::Index j = i; j < cfg.n - 1; ++j) names.push_back(idx("Gamma", i, j));
    for (Eigen::Index i = 0; i < cfg.n - 1; ++i) names.push_back(idx("gamma", i));
  }
  return names;
}

std::vector<double> monitored_values(const JointDraw& d, const GewekeConfig& cfg) {
  std::vector<double> v;
  for (const auto& u : d.obs)
    for (Eigen::Index i = 0; i < cfg.n; ++i) v.push_back(u[i]);
  for (double r : d.lengths) v.push_back(r);
  for (std::size_t t = 1; t <= cfg.T; ++t)
    for (Eigen::Index i = 0; i < cfg.p; ++i) v.push_back(d.states[t][i]);
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = 0; j < cfg.p; ++j) v.push_back(d.theta.G(i, j));
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = i; j < cfg.p; ++j) v.push_back(d.theta.W(i, j));
  if (!cfg.sigma_identity) {
    const auto& sp = d.theta.sigma_parts;
    for (Eigen::Index i = 0; i < cfg.n - 1; ++i)
      for (Eigen::Index j = i; j < cfg.n - 1; ++j) v.push_back(sp.Gamma(i, j));
    for (Eigen::Index i = 0; i < cfg.n - 1; ++i) v.push_back(sp.gamma[i]);
  }
  return v;
}

namespace {

void append_row(std::vector<std::vector<double>>& cols, const std::vector<double>& row) {
  if (cols.empty()) cols.resize(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) cols[k].push_back(row[k]);
}

}  // namespace

std::vector<std::vector<double>> marginal_conditional_columns(const GewekeConfig& cfg, std::size_t draws,
                                                               std::uint64_t seed) {
  const Design F = cfg.design();
  const Rng root(seed);
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < draws; ++i) {
    Rng rng = root.substream(i);
    append_row(cols, monitored_values(marginal_conditional_sample(cfg, F, rng), cfg));
  }
  return cols;
}

std::vector<std::vector<double>> successive_conditional_columns(const GewekeConfig& cfg, std::size_t draws,
                                                                 std::uint64_t seed) {
  const Design F = cfg.design();
  const Rng root(seed);
  Rng start = root.substream(0xA11CE);
  JointDraw state = marginal_conditional_sample(cfg, F, start);
  std::size_t iteration = 0;
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < draws; ++i) {
    for (std::size_t k = 0; k < cfg.thin; ++k) successive_conditional_step(state, iteration, cfg, F, root);
    append_row(cols, monitored_values(state, cfg));
  }
  return cols;
}

GewekeReport compare_columns(const std::vector<std::string>& names, std::vector<std::vector<double>> a,
                             std::vector<std::vector<double>> b) {
  if (a.size() != names.size() || b.size() != names.size()) throw DimensionError("column count mismatch");
  GewekeReport rep;
  std::size_t pass = 0;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const stats::TestResult ks = stats::ks_two_sample(a[k], b[k]);
    rep.scalars.push_back({names[k], ks.statistic, ks.p_value});
    pass += ks.p_value > 0.01;
    rep.min_p = std::min(rep.min_p, ks.p_value);
  }
  rep.pass_fraction = static_cast<double>(pass) / static_cast<double>(names.size());
  rep.passed = rep.pass_fraction >= 0.95;
  rep.marginal = std::move(a);
  rep.successive = std::move(b);
  return rep;
}

GewekeReport geweke_compare(const GewekeConfig& cfg) {
  const Rng root(cfg.seed);
  return compare_columns(monitored_names(cfg), marginal_conditional_columns(cfg, cfg.marginal_draws, root.substream(1).key()),
                         successive_conditional_columns(cfg, cfg.successive_draws, root.substream(2).key()));
}

GewekeReport geweke_null(const GewekeConfig& cfg) {
  const Rng root(cfg.seed);
  return compare_columns(monitored_names(cfg), marginal_conditional_columns(cfg, cfg.marginal_draws, root.substream(3).key()),
                         marginal_conditional_columns(cfg, cfg.marginal_draws, root.substream(4).key()));
}

ThetaDraw recovery_truth(Eigen::Index n, Eigen::Index p, Rng& rng) {
  SigmaStructured parts;
  parts.Gamma = sample_inverse_wishart(static_cast<double>(n) + 1.0, Matrix::Identity(n - 1, n - 1), rng);
  parts.gamma = standard_normal(n - 1, rng);
  const Matrix W = sample_inverse_wishart(static_cast<double>(p) + 2.0, Matrix::Identity(p, p), rng);
  for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
    Matrix G = 0.5 * Matrix::Identity(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < p; ++i) G(i, j) += rng.normal();
    if (spectral_radius(G) < 1.0) return ThetaDraw::make(std::move(parts), std::move(G), W);
  }
  throw NumericalError("recovery_truth: no stationary G in 10^4 draws");
}

RecoveryReplication recover_once(const RecoveryConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  RecoveryReplication rep;
  rep.seed = seed;
  rep.truth = recovery_truth(cfg.n, cfg.p, rng);
  const Priors priors = Priors::defaults(cfg.n, cfg.p);
  std::vector<Matrix> fs;
  for (std::size_t t = 0; t < cfg.T_max; ++t) {
    Matrix f(cfg.n, cfg.p);
    for (Eigen::Index j = 0; j < cfg.p; ++j)
      for (Eigen::Index i = 0; i < cfg.n; ++i) f(i, j) = rng.normal();
    fs.push_back(std::move(f));
  }
  const Design F = Design::per_period(std::move(fs));
  const JointDraw series = simulate_series(rep.truth, F, priors, cfg.T_max, rng);

  // Element accessors: all of G, then the free entries of Sigma.
  struct Accessor {
    std::string name;
    Eigen::Index i, j;
    bool sigma;
  };
  std::vector<Accessor> acc;
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = 0; j < cfg.p; ++j) acc.push_back({idx("G", i, j), i, j, false});
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    for (Eigen::Index j = i; j < cfg.n; ++j)
      if (!(i == cfg.n - 1 && j == cfg.n - 1)) acc.push_back({idx("Sigma", i, j), i, j, true});
  for (const auto& a : acc) {
    rep.elements.push_back({a.name, a.sigma ? rep.truth.Sigma(a.i, a.j) : rep.truth.G(a.i, a.j), {}, {}, {}, {}});
  }

  for (std::size_t w : cfg.windows) {
    if (w > cfg.T_max) throw ConfigError("recovery window longer than T_max");
    const std::vector<UnitObservation> obs(series.obs.begin(), series.obs.begin() + static_cast<std::ptrdiff_t>(w));
    ModelSpec spec{F.prefix(w), priors, FixedMask::none(), true};
    GibbsConfig gc = cfg.gibbs;
    gc.seed = Rng(seed).substream(0x51, w).key();
    gc.store_states_T = false;
    const PosteriorDraws post = run_gibbs(obs, spec, gc);
    for (std::size_t k = 0; k < acc.size(); ++k) {
      std::vector<double> v;
      v.reserve(post.size());
      for (const auto& th : post.theta) v.push_back(acc[k].sigma ? th.Sigma(acc[k].i, acc[k].j) : th.G(acc[k].i, acc[k].j));
      auto& e = rep.elements[k];
      e.sd.push_back(std::sqrt(stats::variance(v)));
      e.lower.push_back(stats::quantile_type7(v, 0.05));
      e.upper.push_back(stats::quantile_type7(v, 0.95));
      e.median.push_back(stats::quantile_type7(v, 0.5));
    }
  }
  return rep;
}

RecoveryReport parameter_recovery(const RecoveryConfig& cfg) {
  RecoveryReport out;
  out.windows = cfg.windows;
  out.replications.resize(cfg.replications);
  const Rng root(cfg.seed);
  parallel_for(
      cfg.replications, cfg.threads,
      [&](std::size_t r) { out.replications[r] = recover_once(cfg, root.substream(r).key()); }, 1);
  std::size_t total = 0;
  std::size_t decreased = 0;
  std::size_t covered = 0;
  for (const auto& rep : out.replications) {
    for (const auto& e : rep.elements) {
      ++total;
      decreased += e.sd.back() < e.sd.front();
      covered += e.truth >= e.lower.back() && e.truth <= e.upper.back();
    }
  }
  out.sd_decrease_fraction = total ? static_cast<double>(decreased) / static_cast<double>(total) : 0.0;
  out.coverage_fraction = total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
  return out;
}

AgreementReport gibbs_rbpf_agreement(const std::vector<UnitObservation>& obs, const AgreementConfig& cfg) {
  AgreementReport rep;
  const std::size_t T = obs.size();
  ModelSpec spec{cfg.F, cfg.priors, FixedMask::all_theta(), true};
  GibbsConfig gc;
  gc.burn_in = cfg.gibbs_burn_in;
  gc.thin = cfg.gibbs_thin;
  gc.iterations = cfg.gibbs_burn_in + cfg.draws * cfg.gibbs_thin;
  gc.seed = Rng(cfg.seed).substream(1).key();
  const PosteriorDraws post = run_gibbs(obs, spec, gc, cfg.theta);
  Rng g_rng = Rng(cfg.seed).substream(2);
  rep.gibbs_angles =
      ForecastEnsemble::from_units(posterior_predictive(post, cfg.F.at(T + 1), cfg.draws, g_rng)).draws;

  const StateSpaceParams params = state_space(spec, cfg.theta);
  Swarm swarm = bootstrap_swarm(params, cfg.swarm);
  const Rng f_root = Rng(cfg.seed).substream(3);
  for (const auto& u : obs) rbpf_step(swarm, u, params, cfg.swarm, f_root);
  Rng p_rng = Rng(cfg.seed).substream(4);
  rep.rbpf_angles = ForecastEnsemble::from_units(predictive_sample(swarm, cfg.F.at(T + 1), params, cfg.draws, p_rng)).draws;
  rep.ks = stats::ks_two_sample(rep.gibbs_angles, rep.rbpf_angles);
  return rep;
}

TimingReport timing_benchmark(const std::vector<UnitObservation>& series, const ThetaDraw& theta, const Design& F,
                              const Priors& priors, const TimingConfig& cfg) {
  if (series.size() < 100 || series.size() < cfg.periods) throw ConfigError("timing benchmark needs >= 100 periods");
  using Clock = std::chrono::steady_clock;
  const std::size_t T = cfg.periods;
  ModelSpec spec{F, priors, FixedMask::all_theta(), true};
  const StateSpaceParams params = state_space(spec, theta);

  std::vector<std::size_t> gibbs_periods;
  for (std::size_t t = cfg.gibbs_every; t <= T; t += cfg.gibbs_every) gibbs_periods.push_back(t);
  // Swarms are snapshotted before each period and the periods are timed in a
  // fresh random order per repetition, so drift and bursts in host load are
  // not aligned with t. Per-period medians over repetitions.
  std::vector<Swarm> before;
  before.reserve(T);
  std::vector<double> last_rbpf;
  std::vector<double> last_gibbs;
  {
    const Rng root = Rng(cfg.seed);
    Swarm swarm = bootstrap_swarm(params, cfg.swarm);
    for (std::size_t t = 1; t <= T; ++t) {
      before.push_back(swarm);
      rbpf_step(swarm, series[t - 1], params, cfg.swarm, root);
    }
  }
  auto shuffled = [](std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    return order;
  };
  std::vector<std::vector<double>> rbpf_times(T);
  std::vector<std::vector<double>> gibbs_times(gibbs_periods.size());

  // Repetition 0 warms caches and the allocator and is not recorded.
  for (std::size_t rep = 0; rep <= cfg.repetitions; ++rep) {
    const Rng root = Rng(cfg.seed).substream(rep);
    Rng order_rng = root.substream(4);
    for (std::size_t i : shuffled(T, order_rng)) {
      const std::size_t t = i + 1;
      Swarm swarm = before[i];
      Rng pr = root.substream(1, t);
      const auto t0 = Clock::now();
      rbpf_step(swarm, series[t - 1], params, cfg.swarm, root);
      auto draws = predictive_sample(swarm, F.at(t + 1), params, cfg.predictive_draws, pr);
      const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
      if (rep > 0) rbpf_times[i].push_back(dt);
      if (t == T) last_rbpf = ForecastEnsemble::from_units(draws).draws;
    }
    for (std::size_t k : shuffled(gibbs_periods.size(), order_rng)) {
      const std::size_t t = gibbs_periods[k];
      GibbsConfig gc = cfg.gibbs;
      gc.seed = root.substream(2, t).key();
      Rng pr = root.substream(3, t);
      const std::vector<UnitObservation> train(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(t));
      const auto t0 = Clock::now();
      const PosteriorDraws post = run_gibbs(train, spec, gc, theta);
      auto draws = posterior_predictive(post, F.at(t + 1), cfg.predictive_draws, pr);
      const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
      if (rep > 0) gibbs_times[k].push_back(dt);
      if (t == T) last_gibbs = ForecastEnsemble::from_units(draws).draws;
    }
  }

  TimingReport out;
  for (std::size_t t = 1; t <= T; ++t) {
    out.rbpf_t.push_back(static_cast<double>(t));
    out.rbpf_seconds.push_back(stats::quantile_type7(rbpf_times[t - 1], 0.5));
  }
  for (std::size_t k = 0; k < gibbs_periods.size(); ++k) {
    out.gibbs_t.push_back(static_cast<double>(gibbs_periods[k]));
    out.gibbs_seconds.push_back(stats::quantile_type7(gibbs_times[k], 0.5));
  }
  out.rbpf_slope = stats::linear_trend(out.rbpf_t, out.rbpf_seconds, -1);
  out.gibbs_slope = stats::linear_trend(out.gibbs_t, out.gibbs_seconds, -1);
  out.rbpf_flat = std::abs(out.rbpf_slope.slope) < 2.0 * out.rbpf_slope.slope_se;
  out.gibbs_increasing = out.gibbs_slope.slope > 1.645 * out.gibbs_slope.slope_se;
  if (!last_rbpf.empty() && !last_gibbs.empty()) out.final_ks = stats::ks_two_sample(last_gibbs, last_rbpf);
  return out;
}

}  // namespace pdlm
