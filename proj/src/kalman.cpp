#include "pdlm/kalman.hpp"

#include <cmath>
#include <string>

#include "pdlm/errors.hpp"

namespace pdlm {

Design Design::constant(Matrix f) {
  Design d;
  d.constant_ = true;
  d.fs_.push_back(std::move(f));
  return d;
}

Design Design::per_period(std::vector<Matrix> fs) {
  if (fs.empty()) throw DimensionError("per-period design needs at least one matrix");
  for (const Matrix& f : fs) {
    if (f.rows() != fs.front().rows() || f.cols() != fs.front().cols()) {
      throw DimensionError("all F_t must share dimensions");
    }
  }
  Design d;
  d.constant_ = false;
  d.fs_ = std::move(fs);
  return d;
}

const Matrix& Design::at(std::size_t t) const {
  if (fs_.empty()) throw DimensionError("empty design");
  if (constant_) return fs_.front();
  if (t == 0 || t > fs_.size()) {
    throw DimensionError("design has no F_" + std::to_string(t) + " (periods: " + std::to_string(fs_.size()) + ")");
  }
  return fs_[t - 1];
}

Eigen::Index Design::n() const { return fs_.empty() ? 0 : fs_.front().rows(); }
Eigen::Index Design::p() const { return fs_.empty() ? 0 : fs_.front().cols(); }

Design Design::prefix(std::size_t t) const {
  if (constant_) return *this;
  if (t > fs_.size()) throw DimensionError("design prefix longer than the design");
  return per_period(std::vector<Matrix>(fs_.begin(), fs_.begin() + static_cast<std::ptrdiff_t>(t)));
}

namespace {

void require_psd(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + " is not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw NumericalError(std::string(what) + " is not symmetric");
  }
  if (m.rows() > 0 && min_eigenvalue_symmetric(m) < -1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw NumericalError(std::string(what) + " is not positive semidefinite");
  }
}

}  // namespace

void StateSpaceParams::validate() const {
  const Eigen::Index p_ = G.rows();
  const Eigen::Index n_ = Sigma.rows();
  if (G.cols() != p_) throw DimensionError("G must be square");
  if (W.rows() != p_ || P0.rows() != p_ || s0_mean.size() != p_) throw DimensionError("W, P0, s0_mean must match p");
  if (F.n() != n_ || F.p() != p_) throw DimensionError("F_t must be n x p");
  if (Sigma.cols() != n_ || n_ < 2) throw DimensionError("Sigma must be n x n with n >= 2");
  spd_cholesky(Sigma, "Sigma");
  require_psd(W, "W");
  require_psd(P0, "P0");
}

KalmanStats KalmanStats::initial(const StateSpaceParams& params) {
  auto cov = std::make_shared<KalmanCovariances>();
  cov->P_filt = params.P0;
  KalmanStats k;
  k.s_filt = params.s0_mean;
  k.cov = std::move(cov);
  return k;
}

std::shared_ptr<const KalmanCovariances> predict_covariances(const KalmanCovariances& prev, const Matrix& F,
                                                             const StateSpaceParams& params) {
  auto cov = std::make_shared<KalmanCovariances>();
  cov->P_pred = params.G * prev.P_filt * params.G.transpose() + params.W;
  symmetrize(cov->P_pred);
  const Matrix pft = cov->P_pred * F.transpose();
  cov->Omega_pred = F * pft + params.Sigma;
  symmetrize(cov->Omega_pred);
  cov->omega_chol.compute(cov->Omega_pred);
  if (cov->omega_chol.info() != Eigen::Success) throw NumericalError("Omega_pred is not positive definite");
  const auto diag = cov->omega_chol.matrixLLT().diagonal();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  if (!(ratio * ratio <= 1e12)) throw NumericalError("Omega_pred is numerically singular");
  cov->omega_log_det = log_det(cov->omega_chol);
  cov->gain = cov->omega_chol.solve(pft.transpose()).transpose();
  cov->P_filt = cov->P_pred - cov->gain * pft.transpose();
  symmetrize(cov->P_filt);
  return cov;
}

KalmanStats predict_mean(const Vector& prev_s_filt, std::shared_ptr<const KalmanCovariances> cov, const Matrix& F,
                         const StateSpaceParams& params) {
  KalmanStats k;
  k.s_pred = params.G * prev_s_filt;
  k.y_pred = F * k.s_pred;
  k.cov = std::move(cov);
  return k;
}

void update_mean(KalmanStats& k, double r, const UnitObservation& u) {
  k.s_filt = k.s_pred + k.cov->gain * (r * u.vector() - k.y_pred);
}

KalmanStats kalman_predict_update(const KalmanStats& prev, double r, const UnitObservation& u, std::size_t t,
                                  const StateSpaceParams& params) {
  if (!(r > 0.0)) throw DomainError("kalman_predict_update requires r > 0");
  const Matrix& F = params.F.at(t);
  if (u.dim() != F.rows()) throw DimensionError("observation dimension does not match F_t");
  KalmanStats k = predict_mean(prev.s_filt, predict_covariances(*prev.cov, F, params), F, params);
  update_mean(k, r, u);
  return k;
}

double log_predictive(const KalmanStats& k, const Vector& y) {
  const Vector z = k.cov->omega_chol.matrixL().solve(y - k.y_pred);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(kTwoPi) + k.cov->omega_log_det + z.squaredNorm());
}

FilterPass kalman_filter_pass(const std::vector<double>& lengths, const std::vector<UnitObservation>& obs,
                              const StateSpaceParams& params) {
  if (lengths.size() != obs.size() || obs.empty()) throw DimensionError("lengths and obs must have equal length T >= 1");
  FilterPass out;
  out.initial = KalmanStats::initial(params);
  out.stats.reserve(obs.size());
  const KalmanStats* prev = &out.initial;
  for (std::size_t t = 1; t <= obs.size(); ++t) {
    out.stats.push_back(kalman_predict_update(*prev, lengths[t - 1], obs[t - 1], t, params));
    out.log_likelihood += log_predictive(out.stats.back(), lengths[t - 1] * obs[t - 1].vector());
    prev = &out.stats.back();
  }
  return out;
}

namespace {

// J = P_t G^T P_pred^{-1}, pseudo-inverse when P_pred is singular.
Matrix backward_gain(const Matrix& p_filt, const Matrix& G, const Matrix& p_pred_next) {
  const Matrix pg = p_filt * G.transpose();
  Eigen::LLT<Matrix> llt(p_pred_next);
  if (llt.info() == Eigen::Success) return llt.solve(pg.transpose()).transpose();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p_pred_next);
  return pg * cod.pseudoInverse();
}

Matrix backward_factor(Matrix cov) {
  symmetrize(cov);
  try {
    return psd_factor(cov);
  } catch (const NumericalError&) {
    cov.diagonal().array() += 1e-10;
    return psd_factor(cov);
  }
}

}  // namespace

std::vector<Vector> simulation_smoother(const std::vector<double>& lengths, const std::vector<UnitObservation>& obs,
                                        const StateSpaceParams& params, Rng& rng) {
  const FilterPass pass = kalman_filter_pass(lengths, obs, params);
  const std::size_t T = obs.size();
  std::vector<Vector> path(T + 1);
  path[T] = sample_mvn(pass.stats[T - 1].s_filt, backward_factor(pass.stats[T - 1].P_filt()), rng);
  for (std::size_t t = T; t-- > 0;) {
    const KalmanStats& now = t == 0 ? pass.initial : pass.stats[t - 1];
    const KalmanStats& next = pass.stats[t];
    const Matrix J = backward_gain(now.P_filt(), params.G, next.P_pred());
    const Vector mean = now.s_filt + J * (path[t + 1] - next.s_pred);
    const Matrix cov = now.P_filt() - J * params.G * now.P_filt();
    path[t] = sample_mvn(mean, backward_factor(cov), rng);
  }
  return path;
}

}  // namespace pdlm
