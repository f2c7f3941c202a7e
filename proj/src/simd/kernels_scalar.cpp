#include <cmath>
#include <limits>
#include <numbers>

#include "pdlm/simd/kernels.hpp"

namespace pdlm::simd::scalar {

SumSq sum_and_sum_sq(std::span<const double> x) {
  double s = 0.0;
  double s2 = 0.0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  return {s, s2};
}

double max_value(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = v > m ? v : m;
  return m;
}

double exp_shifted(std::span<const double> in, double shift, std::span<double> out) {
  double s = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - shift);
    s += out[i];
  }
  return s;
}

SinCosSums sincos_sums(std::span<const double> angles) {
  double c = 0.0;
  double s = 0.0;
  for (double a : angles) {
    c += std::cos(a);
    s += std::sin(a);
  }
  return {c, s};
}

double arc_distance_sum(std::span<const double> x, double a) {
  constexpr double pi = std::numbers::pi;
  double s = 0.0;
  for (double v : x) s += pi - std::abs(pi - std::abs(v - a));
  return s;
}

}  // namespace pdlm::simd::scalar
