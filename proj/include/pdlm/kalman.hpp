#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "pdlm/directional.hpp"
#include "pdlm/linalg.hpp"
#include "pdlm/rng.hpp"

// Linear-Gaussian machinery for the data-augmented model
//   y_t = r_t u_t = F_t s_t + eps_t,  eps_t ~ N(0, Sigma)
//   s_t = G s_{t-1} + eta_t,          eta_t ~ N(0, W)
//   s_0 ~ N(s0_mean, P0).

namespace pdlm {

// The design sequence F_1, F_2, ...: either one matrix shared by every
// period or an explicit per-period list. Indexing is 1-based.
class Design {
 public:
  Design() = default;
  static Design constant(Matrix f);
  static Design per_period(std::vector<Matrix> fs);

  const Matrix& at(std::size_t t) const;
  bool is_constant() const noexcept { return constant_; }
  // Number of explicit periods (0 for a constant design).
  std::size_t periods() const noexcept { return constant_ ? 0 : fs_.size(); }
  Eigen::Index n() const;
  Eigen::Index p() const;
  // The first `t` periods (a constant design is returned unchanged).
  Design prefix(std::size_t t) const;

 private:
  bool constant_ = true;
  std::vector<Matrix> fs_;
};

struct StateSpaceParams {
  Design F;
  Matrix G;
  Matrix W;
  Matrix Sigma;
  Vector s0_mean;
  Matrix P0;

  Eigen::Index n() const { return Sigma.rows(); }
  Eigen::Index p() const { return G.rows(); }
  // Throws DimensionError / NumericalError. W and P0 may be singular.
  void validate() const;
};

// Covariance half of K_t. None of it depends on the latent lengths, so a
// whole particle swarm shares one instance per period.
struct KalmanCovariances {
  Matrix P_pred;
  Matrix Omega_pred;
  Matrix P_filt;
  Matrix gain;  // P_pred F^T Omega^{-1}
  Eigen::LLT<Matrix> omega_chol;
  double omega_log_det = 0.0;
};

// K_t: the six filter statistics of p(s_t | r_{1:t}, u_{1:t}).
struct KalmanStats {
  Vector s_pred;
  Vector y_pred;
  Vector s_filt;
  std::shared_ptr<const KalmanCovariances> cov;

  const Matrix& P_pred() const { return cov->P_pred; }
  const Matrix& Omega_pred() const { return cov->Omega_pred; }
  const Matrix& P_filt() const { return cov->P_filt; }

  // K_0: filtered moments (s0_mean, P0); the predictive slots are left empty.
  static KalmanStats initial(const StateSpaceParams& params);
};

// Covariance recursion of one period. Throws NumericalError when Omega is
// numerically singular (condition number above 1e12).
std::shared_ptr<const KalmanCovariances> predict_covariances(const KalmanCovariances& prev,
                                                             const Matrix& F, const StateSpaceParams& params);

// Mean recursion given shared covariances: s_pred, y_pred, then s_filt from y = r u.
KalmanStats predict_mean(const Vector& prev_s_filt, std::shared_ptr<const KalmanCovariances> cov,
                         const Matrix& F, const StateSpaceParams& params);
// Recomputes s_filt for a new pseudo-observation r u (predictive slots unchanged).
void update_mean(KalmanStats& k, double r, const UnitObservation& u);

// (K_{t-1}, r_t, u_t) -> K_t.
KalmanStats kalman_predict_update(const KalmanStats& prev, double r, const UnitObservation& u, std::size_t t,
                                  const StateSpaceParams& params);

// log N_n(y; y_pred, Omega_pred).
double log_predictive(const KalmanStats& k, const Vector& y);

struct FilterPass {
  KalmanStats initial;             // K_0
  std::vector<KalmanStats> stats;  // K_1..K_T
  double log_likelihood = 0.0;     // sum_t log N(r_t u_t; y_pred, Omega_pred)
};

FilterPass kalman_filter_pass(const std::vector<double>& lengths, const std::vector<UnitObservation>& obs,
                              const StateSpaceParams& params);

// Exact joint draw of s_{0:T} by forward filtering, backward sampling.
// Returns T + 1 vectors, index 0 being s_0.
std::vector<Vector> simulation_smoother(const std::vector<double>& lengths, const std::vector<UnitObservation>& obs,
                                        const StateSpaceParams& params, Rng& rng);

}  // namespace pdlm
