#include <atomic>
#include <cstdlib>
#include <string>

#include "pdlm/errors.hpp"
#include "pdlm/simd/kernels.hpp"

namespace pdlm::simd {
namespace {

constexpr KernelTable kScalarTable{scalar::sum_and_sum_sq, scalar::max_value, scalar::exp_shifted,
                                   scalar::sincos_sums, scalar::arc_distance_sum};
#if defined(PDLM_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{avx2::sum_and_sum_sq, avx2::max_value, avx2::exp_shifted,
                                 avx2::sincos_sums, avx2::arc_distance_sum};
#endif

Isa detect() {
  if (const char* env = std::getenv("PDLM_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels(detect())};
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(PDLM_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
#if defined(PDLM_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

Isa active_isa() { return active_table().load() == &kScalarTable ? Isa::scalar : Isa::avx2; }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw Error("SIMD instruction set not supported: " + std::string(isa_name(isa)));
  active_table().store(&kernels(isa));
}

SumSq sum_and_sum_sq(std::span<const double> x) { return active_table().load()->sum_and_sum_sq(x); }
double max_value(std::span<const double> x) { return active_table().load()->max_value(x); }
double exp_shifted(std::span<const double> in, double shift, std::span<double> out) {
  return active_table().load()->exp_shifted(in, shift, out);
}
SinCosSums sincos_sums(std::span<const double> angles) { return active_table().load()->sincos_sums(angles); }
double arc_distance_sum(std::span<const double> x, double a) {
  return active_table().load()->arc_distance_sum(x, a);
}

}  // namespace pdlm::simd
