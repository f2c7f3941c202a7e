#include "pdlm/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pdlm/errors.hpp"

namespace pdlm {

void symmetrize(Matrix& m) {
  const Matrix t = m.transpose();
  m = 0.5 * (m + t);
}

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

Eigen::LLT<Matrix> spd_cholesky(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " is not square");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  return llt;
}

Matrix psd_factor(const Matrix& cov) {
  const Eigen::Index n = cov.rows();
  if (n != cov.cols()) throw DimensionError("covariance is not square");
  if (n == 0) return Matrix(0, 0);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  Eigen::LDLT<Matrix> ldlt(cov);
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  Vector d = ldlt.vectorD();
  if (d.minCoeff() < -1e-8 * scale) {
    throw NumericalError("covariance is indefinite (pivot " + std::to_string(d.minCoeff()) + ")");
  }
  d = d.cwiseMax(0.0).cwiseSqrt();
  Matrix l = ldlt.matrixL();
  Matrix factor = l * d.asDiagonal();
  // cov = P^T L D L^T P
  return ldlt.transpositionsP().transpose() * factor;
}

double log_det(const Eigen::LLT<Matrix>& chol) {
  return 2.0 * chol.matrixLLT().diagonal().array().log().sum();
}

double log_mvn_pdf(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& chol) {
  const Vector z = chol.matrixL().solve(x - mean);
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det(chol) + z.squaredNorm());
}

double log_mvn_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  return log_mvn_pdf(x, mean, spd_cholesky(cov, "covariance"));
}

Vector standard_normal(Eigen::Index n, Rng& rng) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

Vector sample_mvn(const Vector& mean, const Matrix& factor, Rng& rng) {
  return mean + factor * standard_normal(factor.cols(), rng);
}

double spectral_radius(const Matrix& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue_symmetric(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace pdlm
