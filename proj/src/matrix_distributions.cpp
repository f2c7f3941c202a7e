#include "pdlm/matrix_distributions.hpp"

#include <cmath>

#include "pdlm/errors.hpp"

namespace pdlm {
namespace {

// Lower-triangular Bartlett factor A with A A^T ~ W_d(dof, I).
Matrix bartlett_factor(double dof, Eigen::Index d, Rng& rng) {
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  return a;
}

}  // namespace

Matrix sample_wishart(double dof, const Matrix& scale, Rng& rng) {
  const Eigen::Index d = scale.rows();
  if (!(dof > static_cast<double>(d) - 1.0)) throw DomainError("Wishart dof must exceed dim - 1");
  const Matrix l = spd_cholesky(scale, "Wishart scale").matrixL();
  const Matrix c = l * bartlett_factor(dof, d, rng);
  Matrix x = c * c.transpose();
  symmetrize(x);
  return x;
}

Matrix sample_inverse_wishart(double dof, const Matrix& scale, Rng& rng) {
  const Eigen::Index d = scale.rows();
  if (!(dof > static_cast<double>(d) - 1.0)) {
    throw DomainError("inverse Wishart dof must exceed dim - 1");
  }
  // X^{-1} ~ W(dof, scale^{-1}). With scale^{-1} = L L^T and C = L A,
  // X = C^{-T} C^{-1}.
  const Eigen::LLT<Matrix> scale_chol = spd_cholesky(scale, "inverse Wishart scale");
  const Matrix scale_inv = scale_chol.solve(Matrix::Identity(d, d));
  const Matrix l = spd_cholesky(scale_inv, "inverse Wishart scale inverse").matrixL();
  const Matrix c = l * bartlett_factor(dof, d, rng);
  const Matrix c_inv = c.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix x = c_inv.transpose() * c_inv;
  symmetrize(x);
  return x;
}

Matrix sample_matrix_normal(const Matrix& mean, const Matrix& row_factor, const Matrix& col_factor,
                            Rng& rng) {
  Matrix z(mean.rows(), mean.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
  return mean + row_factor * z * col_factor.transpose();
}

}  // namespace pdlm
