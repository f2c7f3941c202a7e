#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdlm/errors.hpp"
#include "pdlm/rng.hpp"
#include "pdlm/stat_tests.hpp"

using namespace pdlm;

TEST_CASE("Kolmogorov survival function") {
  CHECK(stats::kolmogorov_survival(0.3) == doctest::Approx(0.9999906941986655).epsilon(1e-10));
  CHECK(stats::kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(stats::kolmogorov_survival(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(stats::kolmogorov_survival(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-10));
  CHECK(stats::kolmogorov_survival(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-10));
}

TEST_CASE("two-sample KS") {
  const std::vector<double> a{0.1, 0.5, 0.9, 1.3, 2.0, 2.2};
  const std::vector<double> b{0.4, 0.45, 1.5, 2.5, 2.6, 3.0, 3.3};
  const auto r = stats::ks_two_sample(a, b);
  CHECK(r.statistic == doctest::Approx(0.5714285714285714).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.15504417912365295).epsilon(1e-9));
  CHECK(stats::ks_two_sample(a, a).statistic == 0.0);
}

TEST_CASE("one-sample KS is calibrated under the null") {
  Rng rng(4);
  int rejections = 0;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> x;
    for (int i = 0; i < 200; ++i) x.push_back(rng.uniform());
    rejections += stats::ks_one_sample(x, [](double v) { return std::clamp(v, 0.0, 1.0); }).p_value < 0.05;
  }
  CHECK(rejections > 8);
  CHECK(rejections < 35);
}

TEST_CASE("chi-square goodness of fit") {
  // statistic 12.5 on 7 degrees of freedom
  const std::vector<double> expected(8, 10.0);
  std::vector<double> observed{10, 10, 10, 10, 10, 10, 10 + std::sqrt(62.5), 10 - std::sqrt(62.5)};
  const auto r = stats::chi_square_gof(observed, expected);
  CHECK(r.statistic == doctest::Approx(12.5).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.08526927515826925).epsilon(1e-9));
}

TEST_CASE("linear trend with OLS and HAC standard errors") {
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(0.3 * i + 2.0 * std::sin(1.7 * i) + 0.4 * ((7 * i) % 5));
  }
  const auto ols = stats::linear_trend(x, y);
  CHECK(ols.slope == doctest::Approx(0.29301163774846867).epsilon(1e-12));
  CHECK(ols.slope_se == doctest::Approx(0.06154606861380012).epsilon(1e-10));
  const auto hac = stats::linear_trend(x, y, 2);
  CHECK(hac.slope == doctest::Approx(ols.slope));
  CHECK(hac.slope_se == doctest::Approx(0.03447189192956218).epsilon(1e-10));
}

TEST_CASE("summaries") {
  const std::vector<double> v{3, 1, 2, 4};
  CHECK(stats::mean(v) == doctest::Approx(2.5));
  CHECK(stats::variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(stats::quantile_type7(v, 0.0) == 1.0);
  CHECK(stats::quantile_type7(v, 1.0) == 4.0);
  CHECK(stats::quantile_type7(v, 0.5) == doctest::Approx(2.5));
  CHECK(stats::quantile_type7(v, 0.1) == doctest::Approx(1.3));
}
