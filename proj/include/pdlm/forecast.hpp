#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pdlm/directional.hpp"
#include "pdlm/gibbs.hpp"
#include "pdlm/rng.hpp"

// Point, interval and density forecasts from Monte Carlo predictive draws of
// an angle, their scores, and the mean-direction trend functional.

namespace pdlm {

// Minimizer of sum_j (pi - |pi - |x_j - a||), the total arc distance.
// The objective is piecewise linear with breakpoints at the data and their
// antipodes; a flat minimizing arc resolves to its midpoint, and between
// separate minimizing arcs the smallest angle wins.
Angle circular_median(std::span<const double> sample);

// Quantile of the sample linearized about its circular median (type 7 inside).
Angle circular_quantile(std::span<const double> sample, double alpha);

struct ForecastEnsemble {
  std::vector<double> draws;  // angles in [0, 2 pi)
  std::size_t origin = 0;

  static ForecastEnsemble from_units(const std::vector<UnitObservation>& us, std::size_t origin = 0);
};

struct ForecastInterval {
  Angle lower;
  Angle upper;
  bool wraps = false;

  static ForecastInterval from_quantiles(Angle lower, Angle upper);
  double length() const;
  // Endpoint-inclusive; the union [0, upper] ∪ [lower, 2 pi] when wrapping.
  bool contains(Angle a) const;
};

ForecastInterval forecast_interval(const ForecastEnsemble& ens, double alpha);

double mce(std::span<const double> forecasts, std::span<const double> realizations);

struct IntervalScores {
  double mil = 0.0;
  double ec = 0.0;
};
IntervalScores mil_and_coverage(const std::vector<ForecastInterval>& intervals, std::span<const double> realizations);

// Sample circular CRPS with d = 1 - cos, in O(J).
double crps(std::span<const double> draws, double realization);
double mcrps(std::span<const double> scores);

struct MeanDirection {
  Vector resultant;  // average of the L draws
  double norm = 0.0;
  bool degenerate = false;  // norm below 1e-8: no well-defined direction
  // Set when not degenerate.
  std::optional<UnitObservation> direction;
  std::optional<Angle> angle;  // n = 2 only
};

MeanDirection mean_direction(const Vector& mu, const Matrix& sigma, std::size_t L, Rng& rng);

// One predictive draw per retained posterior draw (cycling when n_draws
// exceeds the store): s_{T+1} = G s_T + eta, u ~ PN(F_next s_{T+1}, Sigma).
std::vector<UnitObservation> posterior_predictive(const PosteriorDraws& draws, const Matrix& F_next,
                                                  std::size_t n_draws, Rng& rng);

// Rolling one-step-ahead exercise: for t = t0..T-1, `forecaster(t)` returns
// predictive draws of the angle at t + 1 built from data through t only.
struct RollingReport {
  std::vector<std::size_t> periods;  // t + 1, the forecast target
  std::vector<double> realizations;
  std::vector<double> point;
  std::vector<ForecastInterval> intervals;
  std::vector<double> crps;
  double mce = 0.0;
  double mil = 0.0;
  double ec = 0.0;
  double mcrps = 0.0;
};

using Forecaster = std::function<std::vector<double>(std::size_t t)>;

RollingReport rolling_evaluation(std::span<const double> angles, std::size_t t0, double alpha,
                                 const Forecaster& forecaster);

// Predictive draws for period t + 1 from a Gibbs fit to u_{1:t}; the run seed
// is derived from (seed, t).
std::vector<double> gibbs_one_step(const std::vector<UnitObservation>& obs, std::size_t t, const ModelSpec& spec,
                                   const GibbsConfig& config, std::size_t n_draws);

struct TrendPoint {
  std::size_t t = 0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Posterior of the mean direction m_t = E(u_t | s_t, Sigma) / |.| along the
// stored paths (n = 2), summarized by circular median and quantiles.
std::vector<TrendPoint> trend_path(const PosteriorDraws& draws, const Design& F, std::size_t L, double alpha,
                                   Rng& rng);

}  // namespace pdlm
