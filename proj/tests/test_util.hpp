#pragma once

#include <Eigen/Dense>

#include "pdlm/linalg.hpp"
#include "pdlm/rng.hpp"

namespace testing {

// Random SPD matrix, well conditioned.
inline pdlm::Matrix random_spd(Eigen::Index d, pdlm::Rng& rng, double ridge = 0.5) {
  pdlm::Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  pdlm::Matrix s = a * a.transpose() / static_cast<double>(d) + ridge * pdlm::Matrix::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline pdlm::Matrix random_matrix(Eigen::Index r, Eigen::Index c, pdlm::Rng& rng, double scale = 1.0) {
  pdlm::Matrix a(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = scale * rng.normal();
  return a;
}

inline pdlm::Vector random_vector(Eigen::Index d, pdlm::Rng& rng, double scale = 1.0) {
  pdlm::Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace testing

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
