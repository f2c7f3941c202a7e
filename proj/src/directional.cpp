#include "pdlm/directional.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdlm/errors.hpp"

namespace pdlm {

double wrap_angle(double radians) {
  if (!std::isfinite(radians)) throw DomainError("angle is not finite");
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2 pi.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

UnitObservation::UnitObservation(Vector v) : u_(std::move(v)) {
  if (u_.size() < 2) throw DimensionError("unit observations need n >= 2");
  const double norm = u_.norm();
  if (!std::isfinite(norm) || norm == 0.0) throw DomainError("cannot normalize a zero or non-finite vector");
  u_ /= norm;
}

UnitObservation angle_to_unit(Angle a) {
  Vector v(2);
  v << std::cos(a.radians()), std::sin(a.radians());
  return UnitObservation(std::move(v));
}

Angle unit_to_angle(const UnitObservation& u) {
  if (u.dim() != 2) throw DimensionError("unit_to_angle requires n = 2, got n = " + std::to_string(u.dim()));
  return Angle(std::atan2(u[1], u[0]));
}

double circular_distance(double a, double b) { return 1.0 - std::cos(a - b); }
double circular_distance(Angle a, Angle b) { return circular_distance(a.radians(), b.radians()); }

Matrix assemble_sigma(const SigmaStructured& s) {
  const Eigen::Index k = s.Gamma.rows();
  if (s.Gamma.cols() != k || s.gamma.size() != k) throw DimensionError("Gamma/gamma dimension mismatch");
  if (!is_spd(s.Gamma)) throw NumericalError("Gamma is not positive definite");
  Matrix sigma(k + 1, k + 1);
  sigma.topLeftCorner(k, k) = s.Gamma + s.gamma * s.gamma.transpose();
  sigma.topRightCorner(k, 1) = s.gamma;
  sigma.bottomLeftCorner(1, k) = s.gamma.transpose();
  sigma(k, k) = 1.0;
  symmetrize(sigma);
  if (!is_spd(sigma)) throw NumericalError("assembled Sigma is not positive definite");
  return sigma;
}

SigmaStructured decompose_sigma(const Matrix& sigma) {
  const Eigen::Index n = sigma.rows();
  if (n < 2 || sigma.cols() != n) throw DimensionError("Sigma must be square with n >= 2");
  const Matrix s = sigma / sigma(n - 1, n - 1);
  SigmaStructured out;
  out.gamma = s.topRightCorner(n - 1, 1);
  out.Gamma = s.topLeftCorner(n - 1, n - 1) - out.gamma * out.gamma.transpose();
  symmetrize(out.Gamma);
  return out;
}

UnitObservation sample_projected_normal_factor(const Vector& mu, const Matrix& sigma_factor, Rng& rng) {
  for (;;) {
    Vector x = sample_mvn(mu, sigma_factor, rng);
    if (x.norm() >= 1e-300) return UnitObservation(std::move(x));
  }
}

UnitObservation sample_projected_normal(const Vector& mu, const Matrix& sigma, Rng& rng) {
  if (mu.size() != sigma.rows()) throw DimensionError("mu/Sigma dimension mismatch");
  const Matrix l = spd_cholesky(sigma, "Sigma").matrixL();
  return sample_projected_normal_factor(mu, l, rng);
}

double polar_log_kernel(double r, const UnitObservation& u, const Vector& m, const Matrix& s) {
  if (!(r > 0.0)) throw DomainError("polar_log_kernel requires r > 0");
  if (m.size() != u.dim() || s.rows() != u.dim()) throw DimensionError("polar_log_kernel dimension mismatch");
  const double n = static_cast<double>(u.dim());
  return (n - 1.0) * std::log(r) + log_mvn_pdf(r * u.vector(), m, s);
}

double pn_density_angle(Angle a, const Vector& mu, const Matrix& sigma) {
  if (mu.size() != 2 || sigma.rows() != 2 || sigma.cols() != 2) {
    throw DimensionError("pn_density_angle requires n = 2");
  }
  const Eigen::LLT<Matrix> chol = spd_cholesky(sigma, "Sigma");
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double r_max = mu.norm() + 10.0 * std::sqrt(lambda_max);
  const Vector u = angle_to_unit(a).vector();
  const Vector p_mu = chol.solve(mu);
  const Vector p_u = chol.solve(u);
  const double uu = u.dot(p_u);
  const double um = u.dot(p_mu);
  const double mm = mu.dot(p_mu);
  const double log_norm = -std::log(kTwoPi) - 0.5 * log_det(chol);
  auto integrand = [&](double r) {
    return r * std::exp(log_norm - 0.5 * (r * r * uu - 2.0 * r * um + mm));
  };
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, r_max, 15, 1e-10, &error);
  if (!(error <= std::max(1e-9 * value, 1e-15))) {
    throw NumericalError("pn_density_angle: quadrature did not converge (achieved error " +
                         std::to_string(error) + ")");
  }
  return value;
}

LengthConditional LengthConditional::from(const UnitObservation& u, const Vector& m,
                                          const Eigen::LLT<Matrix>& s_chol) {
  const Vector su = s_chol.solve(u.vector());
  LengthConditional lc;
  lc.a = u.vector().dot(su);
  lc.b = m.dot(su);
  lc.n = static_cast<int>(u.dim());
  return lc;
}

LengthConditional LengthConditional::from(const UnitObservation& u, const Vector& m, const Matrix& s) {
  if (m.size() != u.dim() || s.rows() != u.dim()) throw DimensionError("length conditional dimension mismatch");
  return from(u, m, spd_cholesky(s, "S"));
}

double LengthConditional::log_kernel(double r) const {
  const double dev = r - b / a;
  return (n - 1) * std::log(r) - 0.5 * a * dev * dev;
}

namespace {

// Upper end d and lower end c of the slice {r >= 0 : exp(-a/2 (r - mu)^2) > v},
// then the inverse-CDF draw from r^{n-1} restricted to [c, d].
// `excess` is half^2 - mu^2, passed separately so callers can supply it
// without cancellation.
double finish_slice(double mu, double half, double excess, int n, double w) {
  double c;
  double d;
  if (mu >= 0.0) {
    d = mu + half;
    c = std::max(0.0, mu - half);
  } else {
    d = excess / (half - mu);
    c = 0.0;
  }
  const double rho_n = std::pow(c / d, n);
  return d * std::pow((1.0 - rho_n) * w + rho_n, 1.0 / n);
}

}  // namespace

double LengthConditional::step_with(double log_v, double w) const {
  const double mu = b / a;
  const double half_sq = -2.0 * log_v / a;
  return finish_slice(mu, std::sqrt(half_sq), half_sq - mu * mu, n, w);
}

double LengthConditional::step(double r_old, Rng& rng) const {
  if (!(r_old > 0.0)) throw DomainError("slice step requires r_old > 0");
  const double log_u = std::log(rng.uniform());
  const double w = rng.uniform();
  const double mu = b / a;
  const double dev = r_old - mu;
  const double half_sq = dev * dev - 2.0 * log_u / a;
  // half^2 - mu^2 = r_old^2 - 2 r_old mu - 2 log(u) / a; every term is
  // nonnegative when mu < 0.
  const double excess = r_old * r_old - 2.0 * r_old * mu - 2.0 * log_u / a;
  const double r = finish_slice(mu, std::sqrt(half_sq), excess, n, w);
  return r > 0.0 ? r : r_old;
}

double slice_step_length(double r_old, const UnitObservation& u, const Vector& m, const Matrix& s, Rng& rng) {
  return LengthConditional::from(u, m, s).step(r_old, rng);
}

double log_bessel_i0(double x) {
  if (!(x >= 0.0)) throw DomainError("log_bessel_i0 requires x >= 0");
  if (x < 15.0) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::log(sum);
  }
  // I0(x) ~ e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * x);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return x - 0.5 * std::log(kTwoPi * x) + std::log(sum);
}

double angle_given_length_log_density(double a, double r, const Vector& mu) {
  const double kappa = r * mu.norm();
  return r * (mu[0] * std::cos(a) + mu[1] * std::sin(a)) - std::log(kTwoPi) - log_bessel_i0(kappa);
}

Angle accept_reject_angle(double r, const Vector& mu, Rng& rng, AcceptRejectStats* stats) {
  if (mu.size() != 2) throw DimensionError("accept_reject_angle requires a length-2 mean");
  if (!(r > 0.0)) throw DomainError("accept_reject_angle requires r > 0");
  // log of the acceptance ratio 2 pi p(V) / M = r mu . u(V) - r |mu|.
  const double kappa = r * mu.norm();
  for (std::size_t i = 1; i <= 1'000'000; ++i) {
    const double log_u = std::log(rng.uniform());
    const double v = kTwoPi * rng.uniform();
    if (log_u < r * (mu[0] * std::cos(v) + mu[1] * std::sin(v)) - kappa) {
      if (stats) stats->proposals += i;
      return Angle(v);
    }
  }
  throw NumericalError("accept_reject_angle: 10^6 consecutive rejections");
}

Angle accept_reject_angle_general(double r, const Vector& mu, const Matrix& sigma, Rng& rng) {
  if (mu.size() != 2 || sigma.rows() != 2) throw DimensionError("accept_reject_angle_general requires n = 2");
  const Eigen::LLT<Matrix> chol = spd_cholesky(sigma, "Sigma");
  const Matrix prec = chol.solve(Matrix::Identity(2, 2));
  const Vector q = prec * mu;
  auto h = [&](double a) {
    const double c = std::cos(a);
    const double s = std::sin(a);
    const double quad = prec(0, 0) * c * c + 2.0 * prec(0, 1) * c * s + prec(1, 1) * s * s;
    return -0.5 * r * r * quad + r * (q[0] * c + q[1] * s);
  };
  // Piecewise-constant envelope: on each cell, the larger endpoint value plus
  // a Lipschitz margin bounds h. Cells are fine enough that the margin stays
  // below 1/2, so acceptance is at least about e^-1.
  const double lipschitz = r * r * prec.norm() + r * q.norm();
  const int K = static_cast<int>(std::clamp(std::ceil(lipschitz * kTwoPi), 64.0, 1048576.0));
  const double width = kTwoPi / K;
  const double margin = 0.5 * lipschitz * width;
  std::vector<double> bound(static_cast<std::size_t>(K));
  double prev = h(0.0);
  const double first = prev;
  for (int k = 0; k < K; ++k) {
    const double next = k + 1 == K ? first : h(width * (k + 1));
    bound[static_cast<std::size_t>(k)] = std::max(prev, next) + margin;
    prev = next;
  }
  const double top = *std::max_element(bound.begin(), bound.end());
  std::vector<double> cum(static_cast<std::size_t>(K));
  double total = 0.0;
  for (int k = 0; k < K; ++k) cum[static_cast<std::size_t>(k)] = total += std::exp(bound[static_cast<std::size_t>(k)] - top);
  for (std::size_t i = 0; i < 1'000'000; ++i) {
    const double pick = total * rng.uniform();
    const auto k = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cum.begin(), cum.end(), pick) - cum.begin(), K - 1));
    const double v = width * (static_cast<double>(k) + rng.uniform());
    if (std::log(rng.uniform()) < h(v) - bound[k]) return Angle(v);
  }
  throw NumericalError("accept_reject_angle_general: 10^6 consecutive rejections");
}

}  // namespace pdlm
