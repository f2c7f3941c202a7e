#include "pdlm/stat_tests.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "pdlm/errors.hpp"

namespace pdlm::stats {

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form: sqrt(2 pi)/lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
    const double pi2 = M_PI * M_PI;
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8.0 * lambda * lambda));
      sum += term;
      if (term < 1e-18) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS test needs nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS test needs a nonempty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double en = std::sqrt(n);
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                          int fitted_parameters) {
  if (observed.size() != expected.size()) throw DimensionError("chi-square: bin count mismatch");
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (!(expected[k] > 0.0)) throw DomainError("chi-square: expected counts must be positive");
    const double diff = observed[k] - expected[k];
    stat += diff * diff / expected[k];
  }
  const double dof = static_cast<double>(observed.size()) - 1.0 - fitted_parameters;
  if (dof < 1.0) throw DomainError("chi-square: not enough bins");
  return {stat, boost::math::gamma_q(0.5 * dof, 0.5 * stat)};
}

SlopeEstimate linear_trend(std::span<const double> x, std::span<const double> y, int hac_lags) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw DomainError("linear_trend needs >= 3 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - intercept - slope * x[i];

  if (hac_lags < 0) {
    hac_lags = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
  }
  double se;
  if (hac_lags == 0) {
    double ssr = 0.0;
    for (double r : resid) ssr += r * r;
    se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  } else {
    // Var(slope) = sum_{i,j} k(|i-j|) g_i g_j / sxx^2 with g_i = (x_i - mx) e_i.
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (x[i] - mx) * resid[i];
    double s = 0.0;
    for (double gi : g) s += gi * gi;
    for (int lag = 1; lag <= hac_lags; ++lag) {
      const double w = 1.0 - lag / (hac_lags + 1.0);
      double c = 0.0;
      for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i) c += g[i] * g[i - lag];
      s += 2.0 * w * c;
    }
    // Small-sample scaling n/(n-2), as in the classical estimator.
    s *= static_cast<double>(n) / static_cast<double>(n - 2);
    se = std::sqrt(std::max(s, 0.0)) / sxx;
  }
  return {intercept, slope, se};
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile_type7(std::vector<double> x, double prob) {
  if (x.empty()) throw DomainError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace pdlm::stats
