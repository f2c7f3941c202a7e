#pragma once

#include <cstddef>
#include <numbers>

#include "pdlm/linalg.hpp"
#include "pdlm/rng.hpp"

// Geometry of the circle and sphere, the projected normal family, and the
// one-dimensional samplers used by the Gibbs sampler, the particle filter
// and the validation harness.

namespace pdlm {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reduces any finite real to [0, 2 pi).
double wrap_angle(double radians);

// An angle on the circle, stored reduced to [0, 2 pi).
class Angle {
 public:
  Angle() = default;
  explicit Angle(double radians) : value_(wrap_angle(radians)) {}
  double radians() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

// A point on S^{n-1}, n >= 2. The constructor renormalizes its input.
class UnitObservation {
 public:
  explicit UnitObservation(Vector v);
  const Vector& vector() const noexcept { return u_; }
  Eigen::Index dim() const noexcept { return u_.size(); }
  double operator[](Eigen::Index i) const { return u_[i]; }

 private:
  Vector u_;
};

UnitObservation angle_to_unit(Angle a);
// Throws DimensionError unless n = 2.
Angle unit_to_angle(const UnitObservation& u);

// 1 - cos(a - b), in [0, 2].
double circular_distance(Angle a, Angle b);
double circular_distance(double a, double b);

// Identifiable parametrization of the projected-normal covariance:
// Sigma = [[Gamma + gamma gamma^T, gamma], [gamma^T, 1]].
struct SigmaStructured {
  Matrix Gamma;  // (n-1) x (n-1), SPD
  Vector gamma;  // n-1
};

Matrix assemble_sigma(const SigmaStructured& s);
// Inverse of assemble_sigma for a matrix that is divided by its bottom-right entry first.
SigmaStructured decompose_sigma(const Matrix& sigma);

// x ~ N(mu, Sigma), returns x / |x|. `sigma_factor` is any L with L L^T = Sigma.
UnitObservation sample_projected_normal_factor(const Vector& mu, const Matrix& sigma_factor, Rng& rng);
UnitObservation sample_projected_normal(const Vector& mu, const Matrix& sigma, Rng& rng);

// (n-1) log r + log N_n(r u; m, S): the r-dependent part of the polar-coordinate
// density of x = r u. Throws DomainError for r <= 0.
double polar_log_kernel(double r, const UnitObservation& u, const Vector& m, const Matrix& s);

// Projected normal density of an angle (n = 2), by adaptive Gauss-Kronrod
// quadrature of r -> r N_2(r u(a); mu, Sigma) over (0, |mu| + 10 sqrt(lambda_max)).
double pn_density_angle(Angle a, const Vector& mu, const Matrix& sigma);

// Full conditional of the latent length, p(r | u, m, S) ∝ r^{n-1} exp(-a/2 (r - b/a)^2)
// with a = u^T S^{-1} u and b = u^T S^{-1} m.
struct LengthConditional {
  double a = 1.0;
  double b = 0.0;
  int n = 2;

  static LengthConditional from(const UnitObservation& u, const Vector& m, const Eigen::LLT<Matrix>& s_chol);
  static LengthConditional from(const UnitObservation& u, const Vector& m, const Matrix& s);

  // Log density up to an additive constant.
  double log_kernel(double r) const;
  // One slice-sampling transition from r_old (two uniforms from rng).
  double step(double r_old, Rng& rng) const;
  // The transition with its randomness supplied: the slice height v enters as
  // log v, and w is the inverse-CDF uniform.
  double step_with(double log_v, double w) const;
};

double slice_step_length(double r_old, const UnitObservation& u, const Vector& m, const Matrix& s, Rng& rng);

// log I_0(x) for x >= 0: log-scaled power series below 15, asymptotic expansion above.
double log_bessel_i0(double x);

// Density of the angle a given length r when r u(a) ~ N_2(mu, I_2):
// exp(r mu . u(a)) / (2 pi I_0(r |mu|)).
double angle_given_length_log_density(double a, double r, const Vector& mu);

struct AcceptRejectStats {
  std::size_t proposals = 0;
};

// Exact draw from angle_given_length_log_density by uniform-envelope accept-reject.
// Throws NumericalError after 10^6 rejections.
Angle accept_reject_angle(double r, const Vector& mu, Rng& rng, AcceptRejectStats* stats = nullptr);

// Same target structure for a general 2x2 covariance:
// p(a | r) ∝ exp(-1/2 (r u(a) - mu)^T Sigma^{-1} (r u(a) - mu)), under an envelope
// bound on the exponent. Reduces to accept_reject_angle's target when Sigma = I.
Angle accept_reject_angle_general(double r, const Vector& mu, const Matrix& sigma, Rng& rng);

}  // namespace pdlm
