#pragma once

#include "pdlm/linalg.hpp"
#include "pdlm/rng.hpp"

namespace pdlm {

// Wishart W_d(dof, scale) via the Bartlett decomposition; E[X] = dof * scale.
// Requires dof > d - 1.
Matrix sample_wishart(double dof, const Matrix& scale, Rng& rng);

// Inverse Wishart IW_d(dof, scale): density proportional to
// |X|^{-(dof+d+1)/2} exp(-tr(scale X^{-1})/2), so E[X] = scale / (dof - d - 1).
Matrix sample_inverse_wishart(double dof, const Matrix& scale, Rng& rng);

// mean + A Z B^T with A A^T = row_cov, B B^T = col_cov, Z iid standard normal.
Matrix sample_matrix_normal(const Matrix& mean, const Matrix& row_factor, const Matrix& col_factor,
                            Rng& rng);

}  // namespace pdlm
