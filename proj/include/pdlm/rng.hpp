#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace pdlm {

// xoshiro256** generator with counter-style substreams.
//
// A substream is derived from the *key* of its parent (seed plus stream
// coordinates), never from the parent's running state, so substream(i, j)
// yields the same sequence no matter how many draws the parent has made or
// which worker thread asks for it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  Rng substream(std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t key() const noexcept { return key_; }

  result_type operator()() noexcept;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal();
  double gamma(double shape, double scale = 1.0);
  double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }
  // Integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  void reseed(std::uint64_t key) noexcept;

  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pdlm
