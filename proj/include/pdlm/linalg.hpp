#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "pdlm/rng.hpp"

namespace pdlm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Replaces m by (m + m^T) / 2. The result is exactly symmetric.
void symmetrize(Matrix& m);

bool is_spd(const Matrix& m);

// Cholesky factorization of an SPD matrix; throws NumericalError naming `what`.
Eigen::LLT<Matrix> spd_cholesky(const Matrix& m, std::string_view what);

// Returns L with L L^T = cov for symmetric positive *semi*definite cov.
// Plain Cholesky first, pivoted LDL^T with clamped pivots as the fallback.
// Pivots below -1e-8 (relative to the largest diagonal) are rejected.
Matrix psd_factor(const Matrix& cov);

double log_mvn_pdf(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& chol);
double log_mvn_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

// Sum of log diagonal entries of the Cholesky factor, doubled.
double log_det(const Eigen::LLT<Matrix>& chol);

Vector standard_normal(Eigen::Index n, Rng& rng);

// mean + factor * z, z ~ N(0, I).
Vector sample_mvn(const Vector& mean, const Matrix& factor, Rng& rng);

double spectral_radius(const Matrix& m);
double min_eigenvalue_symmetric(const Matrix& m);

// Largest absolute entry of a - b, relative to max(1, |b|_max).
double max_rel_diff(const Matrix& a, const Matrix& b);

}  // namespace pdlm
