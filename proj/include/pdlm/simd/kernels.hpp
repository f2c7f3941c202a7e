#pragma once

#include <span>
#include <string_view>

// Data-parallel inner loops shared by the particle filter (weight
// normalization, ESS) and the forecast scorers (circular median objective,
// trigonometric sums behind CRPS). Each kernel has a scalar reference in
// pdlm::simd::scalar and, on x86-64, an AVX2+FMA variant in pdlm::simd::avx2.
// The unqualified entry points dispatch once at first use.
//
// Set PDLM_SIMD=scalar in the environment to force the reference kernels.

namespace pdlm::simd {

enum class Isa { scalar, avx2 };

struct SumSq {
  double sum;
  double sum_sq;
};

struct SinCosSums {
  double cos_sum;
  double sin_sum;
};

struct KernelTable {
  SumSq (*sum_and_sum_sq)(std::span<const double>);
  double (*max_value)(std::span<const double>);
  double (*exp_shifted)(std::span<const double>, double, std::span<double>);
  SinCosSums (*sincos_sums)(std::span<const double>);
  double (*arc_distance_sum)(std::span<const double>, double);
};

bool isa_supported(Isa isa);
Isa active_isa();
std::string_view isa_name(Isa isa);
// Overrides the dispatch decision (tests, benchmarks). Throws if unsupported.
void set_active_isa(Isa isa);
const KernelTable& kernels(Isa isa);

SumSq sum_and_sum_sq(std::span<const double> x);
// -inf for an empty span.
double max_value(std::span<const double> x);
// out[i] = exp(in[i] - shift); returns the sum of out. Inputs of -inf give 0.
double exp_shifted(std::span<const double> in, double shift, std::span<double> out);
SinCosSums sincos_sums(std::span<const double> angles);
// sum_i (pi - |pi - |x_i - a||): total arc distance from a to angles in [0, 2pi).
double arc_distance_sum(std::span<const double> x, double a);

namespace scalar {
SumSq sum_and_sum_sq(std::span<const double> x);
double max_value(std::span<const double> x);
double exp_shifted(std::span<const double> in, double shift, std::span<double> out);
SinCosSums sincos_sums(std::span<const double> angles);
double arc_distance_sum(std::span<const double> x, double a);
}  // namespace scalar

#if defined(PDLM_HAVE_AVX2_KERNELS)
namespace avx2 {
SumSq sum_and_sum_sq(std::span<const double> x);
double max_value(std::span<const double> x);
double exp_shifted(std::span<const double> in, double shift, std::span<double> out);
SinCosSums sincos_sums(std::span<const double> angles);
double arc_distance_sum(std::span<const double> x, double a);
}  // namespace avx2
#endif

}  // namespace pdlm::simd
