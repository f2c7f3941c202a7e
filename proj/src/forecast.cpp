#include "pdlm/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pdlm/errors.hpp"
#include "pdlm/simd/kernels.hpp"
#include "pdlm/stat_tests.hpp"

namespace pdlm {

Angle circular_median(std::span<const double> sample) {
  if (sample.empty()) throw DomainError("circular_median of an empty sample");
  std::vector<double> cand;
  cand.reserve(2 * sample.size());
  for (double x : sample) {
    cand.push_back(wrap_angle(x));
    cand.push_back(wrap_angle(x + std::numbers::pi));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<double> wrapped(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) wrapped[i] = wrap_angle(sample[i]);
  const std::size_t K = cand.size();
  std::vector<double> f(K);
  for (std::size_t k = 0; k < K; ++k) f[k] = simd::arc_distance_sum(wrapped, cand[k]);
  const double best = *std::min_element(f.begin(), f.end());
  const double tol = 1e-12 * static_cast<double>(sample.size()) * std::numbers::pi;
  std::vector<char> minimal(K);
  std::size_t count = 0;
  for (std::size_t k = 0; k < K; ++k) count += (minimal[k] = f[k] <= best + tol);
  if (count == K) return Angle(cand.front());

  // Runs of consecutive minimal candidates, walked cyclically from a
  // non-minimal one so no run is split at the origin.
  std::size_t start = 0;
  while (minimal[start]) ++start;
  double answer = kTwoPi;
  for (std::size_t step = 1; step <= K; ++step) {
    const std::size_t k = (start + step) % K;
    if (!minimal[k] || minimal[(k + K - 1) % K]) continue;
    std::size_t end = k;
    while (minimal[(end + 1) % K]) end = (end + 1) % K;
    double span = cand[end] - cand[k];
    if (span < 0.0) span += kTwoPi;
    answer = std::min(answer, wrap_angle(cand[k] + 0.5 * span));
  }
  return Angle(answer);
}

Angle circular_quantile(std::span<const double> sample, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double m = circular_median(sample).radians();
  std::vector<double> y(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double v = wrap_angle(sample[i] - m);
    if (v > std::numbers::pi) v -= kTwoPi;
    y[i] = v;
  }
  return Angle(stats::quantile_type7(std::move(y), alpha) + m);
}

ForecastEnsemble ForecastEnsemble::from_units(const std::vector<UnitObservation>& us, std::size_t origin) {
  ForecastEnsemble e;
  e.origin = origin;
  e.draws.reserve(us.size());
  for (const auto& u : us) e.draws.push_back(unit_to_angle(u).radians());
  return e;
}

ForecastInterval ForecastInterval::from_quantiles(Angle lower, Angle upper) {
  return {lower, upper, upper.radians() < lower.radians()};
}

double ForecastInterval::length() const {
  const double lo = lower.radians();
  const double hi = upper.radians();
  return wraps ? kTwoPi - (lo - hi) : hi - lo;
}

bool ForecastInterval::contains(Angle a) const {
  const double x = a.radians();
  if (wraps) return x <= upper.radians() || x >= lower.radians();
  return x >= lower.radians() && x <= upper.radians();
}

ForecastInterval forecast_interval(const ForecastEnsemble& ens, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  return ForecastInterval::from_quantiles(circular_quantile(ens.draws, alpha / 2.0),
                                          circular_quantile(ens.draws, 1.0 - alpha / 2.0));
}

double mce(std::span<const double> forecasts, std::span<const double> realizations) {
  if (forecasts.size() != realizations.size() || forecasts.empty()) {
    throw DimensionError("mce: forecasts and realizations must have equal nonzero length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) s += circular_distance(realizations[i], forecasts[i]);
  return s / static_cast<double>(forecasts.size());
}

IntervalScores mil_and_coverage(const std::vector<ForecastInterval>& intervals, std::span<const double> realizations) {
  if (intervals.size() != realizations.size() || intervals.empty()) {
    throw DimensionError("mil_and_coverage: intervals and realizations must have equal nonzero length");
  }
  IntervalScores s;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    s.mil += intervals[i].length();
    s.ec += intervals[i].contains(Angle(realizations[i])) ? 1.0 : 0.0;
  }
  s.mil /= static_cast<double>(intervals.size());
  s.ec /= static_cast<double>(intervals.size());
  return s;
}

double crps(std::span<const double> draws, double realization) {
  if (draws.empty()) throw DomainError("crps of an empty ensemble");
  const double J = static_cast<double>(draws.size());
  const simd::SinCosSums sc = simd::sincos_sums(draws);
  const double first = 1.0 - (std::cos(realization) * sc.cos_sum + std::sin(realization) * sc.sin_sum) / J;
  const double pair = (J * J - sc.cos_sum * sc.cos_sum - sc.sin_sum * sc.sin_sum) / (J * J);
  return first - 0.5 * pair;
}

double mcrps(std::span<const double> scores) {
  if (scores.empty()) throw DomainError("mcrps of no scores");
  return stats::mean(scores);
}

MeanDirection mean_direction(const Vector& mu, const Matrix& sigma, std::size_t L, Rng& rng) {
  if (L < 1) throw DomainError("mean_direction needs L >= 1");
  const Matrix factor = spd_cholesky(sigma, "Sigma").matrixL();
  MeanDirection out;
  out.resultant = Vector::Zero(mu.size());
  for (std::size_t l = 0; l < L; ++l) out.resultant += sample_projected_normal_factor(mu, factor, rng).vector();
  out.resultant /= static_cast<double>(L);
  out.norm = out.resultant.norm();
  out.degenerate = out.norm < 1e-8;
  if (!out.degenerate) {
    out.direction = UnitObservation(out.resultant);
    if (mu.size() == 2) out.angle = unit_to_angle(*out.direction);
  }
  return out;
}

std::vector<UnitObservation> posterior_predictive(const PosteriorDraws& draws, const Matrix& F_next,
                                                  std::size_t n_draws, Rng& rng) {
  if (draws.size() == 0 || draws.s_T.size() != draws.size()) {
    throw ConfigError("posterior_predictive needs stored s_T for every draw");
  }
  std::vector<UnitObservation> out;
  out.reserve(n_draws);
  for (std::size_t j = 0; j < n_draws; ++j) {
    const std::size_t i = j % draws.size();
    const ThetaDraw& th = draws.theta[i];
    const Vector s_next = sample_mvn(th.G * draws.s_T[i], psd_factor(th.W), rng);
    const Matrix sigma_factor = spd_cholesky(th.Sigma, "Sigma").matrixL();
    out.push_back(sample_projected_normal_factor(F_next * s_next, sigma_factor, rng));
  }
  return out;
}

RollingReport rolling_evaluation(std::span<const double> angles, std::size_t t0, double alpha,
                                 const Forecaster& forecaster) {
  const std::size_t T = angles.size();
  if (t0 < 1 || t0 >= T) throw ConfigError("rolling evaluation needs 1 <= t0 < T");
  RollingReport rep;
  for (std::size_t t = t0; t < T; ++t) {
    ForecastEnsemble ens;
    ens.origin = t;
    ens.draws = forecaster(t);
    if (ens.draws.size() < 2) throw ConfigError("forecaster returned fewer than two draws");
    const double a = wrap_angle(angles[t]);
    rep.periods.push_back(t + 1);
    rep.realizations.push_back(a);
    rep.point.push_back(circular_median(ens.draws).radians());
    rep.intervals.push_back(forecast_interval(ens, alpha));
    rep.crps.push_back(crps(ens.draws, a));
  }
  rep.mce = mce(rep.point, rep.realizations);
  const IntervalScores is = mil_and_coverage(rep.intervals, rep.realizations);
  rep.mil = is.mil;
  rep.ec = is.ec;
  rep.mcrps = mcrps(rep.crps);
  return rep;
}

std::vector<double> gibbs_one_step(const std::vector<UnitObservation>& obs, std::size_t t, const ModelSpec& spec,
                                   const GibbsConfig& config, std::size_t n_draws) {
  if (t < 1 || t > obs.size()) throw DomainError("gibbs_one_step: training length out of range");
  const std::vector<UnitObservation> train(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(t));
  ModelSpec sub = spec;
  sub.F = spec.F.is_constant() ? spec.F : spec.F.prefix(t);
  GibbsConfig cfg = config;
  const Rng period = Rng(config.seed).substream(t);
  cfg.seed = period.key();
  cfg.store_states_T = true;
  const PosteriorDraws post = run_gibbs(train, sub, cfg);
  Rng rng = period.substream(1);
  return ForecastEnsemble::from_units(posterior_predictive(post, spec.F.at(t + 1), n_draws, rng), t).draws;
}

std::vector<TrendPoint> trend_path(const PosteriorDraws& draws, const Design& F, std::size_t L, double alpha,
                                   Rng& rng) {
  if (draws.paths.size() != draws.size() || draws.size() == 0) throw ConfigError("trend_path needs stored paths");
  if (draws.n != 2) throw DimensionError("trend_path summarizes angles (n = 2)");
  const std::size_t T = draws.paths.front().size() - 1;
  std::vector<TrendPoint> out;
  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<double> angles;
    angles.reserve(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const MeanDirection md = mean_direction(F.at(t) * draws.paths[i][t], draws.theta[i].Sigma, L, rng);
      if (md.angle) angles.push_back(md.angle->radians());
    }
    if (angles.empty()) continue;
    out.push_back({t, circular_median(angles).radians(), circular_quantile(angles, alpha / 2.0).radians(),
                   circular_quantile(angles, 1.0 - alpha / 2.0).radians()});
  }
  return out;
}

}  // namespace pdlm
