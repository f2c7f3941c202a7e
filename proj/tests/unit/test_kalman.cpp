#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pdlm/errors.hpp"
#include "pdlm/kalman.hpp"
#include "pdlm/stat_tests.hpp"
#include "test_util.hpp"

using namespace pdlm;

namespace {

StateSpaceParams identity_params(Eigen::Index p, double w) {
  StateSpaceParams k;
  k.F = Design::constant(Matrix::Identity(p, p));
  k.G = Matrix::Identity(p, p);
  k.W = w * Matrix::Identity(p, p);
  k.Sigma = Matrix::Identity(p, p);
  k.s0_mean = Vector::Zero(p);
  k.P0 = Matrix::Identity(p, p);
  return k;
}

struct Instance {
  StateSpaceParams params;
  std::vector<double> lengths;
  std::vector<UnitObservation> obs;
  oracle::LinearGaussianModel model;
};

Instance random_instance(Rng& rng, std::size_t T, Eigen::Index p, Eigen::Index n) {
  Instance in;
  std::vector<Matrix> fs;
  for (std::size_t t = 0; t < T; ++t) fs.push_back(testing::random_matrix(n, p, rng));
  in.params.F = Design::per_period(fs);
  in.params.G = testing::random_matrix(p, p, rng, 0.5);
  in.params.W = testing::random_spd(p, rng, 0.2);
  in.params.Sigma = testing::random_spd(n, rng, 0.3);
  in.params.s0_mean = testing::random_vector(p, rng);
  in.params.P0 = testing::random_spd(p, rng, 0.3);
  for (std::size_t t = 0; t < T; ++t) {
    in.lengths.push_back(0.2 + 3.0 * rng.uniform());
    in.obs.emplace_back(testing::random_vector(n, rng));
  }
  in.model = {fs, in.params.G, in.params.W, in.params.Sigma, in.params.s0_mean, in.params.P0};
  return in;
}

}  // namespace

TEST_CASE("single update by hand") {
  const StateSpaceParams k = identity_params(2, 0.0);
  const UnitObservation u(Vector2(0.6, 0.8));
  const double r = 1.7;
  const KalmanStats s = kalman_predict_update(KalmanStats::initial(k), r, u, 1, k);
  CHECK(s.y_pred.norm() == 0.0);
  CHECK(s.Omega_pred().isApprox(2.0 * Matrix::Identity(2, 2)));
  CHECK(s.s_filt.isApprox(r * u.vector() / 2.0));
  CHECK(s.P_filt().isApprox(0.5 * Matrix::Identity(2, 2)));
}

TEST_CASE("perfect prior: no update") {
  StateSpaceParams k = identity_params(2, 0.0);
  k.P0 = Matrix::Zero(2, 2);
  k.s0_mean = Vector2(0.3, -0.2);
  const KalmanStats s = kalman_predict_update(KalmanStats::initial(k), 2.0, UnitObservation(Vector2(1, 0)), 1, k);
  CHECK(s.P_pred().norm() == 0.0);
  CHECK(s.P_filt().norm() == 0.0);
  CHECK(s.s_filt.isApprox(s.s_pred));
}

TEST_CASE("filter properties on random instances") {
  Rng rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const Instance in = random_instance(rng, 4, 3, 2);
    const FilterPass pass = kalman_filter_pass(in.lengths, in.obs, in.params);
    for (const auto& s : pass.stats) {
      CHECK(s.P_filt().trace() <= s.P_pred().trace() + 1e-12);
      CHECK(min_eigenvalue_symmetric(s.P_pred() - s.P_filt()) >= -1e-8);
      CHECK((s.P_filt() - s.P_filt().transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((s.P_pred() - s.P_pred().transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(min_eigenvalue_symmetric(s.P_filt()) >= -1e-8);
    }
    // Omega = F P F^T + Sigma.
    for (std::size_t t = 0; t < pass.stats.size(); ++t) {
      const Matrix& F = in.params.F.at(t + 1);
      const Matrix om = F * pass.stats[t].P_pred() * F.transpose() + in.params.Sigma;
      CHECK(max_rel_diff(pass.stats[t].Omega_pred(), om) < 1e-10);
    }
  }
}

TEST_CASE("P_filt does not depend on r") {
  Rng rng(3);
  const Instance in = random_instance(rng, 1, 2, 2);
  const KalmanStats k0 = KalmanStats::initial(in.params);
  const KalmanStats a = kalman_predict_update(k0, 0.5, in.obs[0], 1, in.params);
  const KalmanStats b = kalman_predict_update(k0, 4.0, in.obs[0], 1, in.params);
  CHECK(a.P_filt() == b.P_filt());
  CHECK(a.s_filt != b.s_filt);
}

TEST_CASE("T = 1 filter pass equals one step") {
  Rng rng(4);
  const Instance in = random_instance(rng, 1, 2, 2);
  const FilterPass pass = kalman_filter_pass(in.lengths, in.obs, in.params);
  const KalmanStats one = kalman_predict_update(KalmanStats::initial(in.params), in.lengths[0], in.obs[0], 1, in.params);
  CHECK(pass.stats[0].s_filt == one.s_filt);
  CHECK(pass.stats[0].P_filt() == one.P_filt());
}

TEST_CASE("filter matches dense joint-Gaussian conditioning") {
  Rng rng(77);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t T = 1 + rng.index(5);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.index(3));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(2));
    const Instance in = random_instance(rng, T, p, n);
    const FilterPass pass = kalman_filter_pass(in.lengths, in.obs, in.params);
    const oracle::Gaussian joint = oracle::joint(in.model);
    const Eigen::Index ys = p * static_cast<Eigen::Index>(T + 1);
    Vector y(n * static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t) y.segment(n * static_cast<Eigen::Index>(t), n) = in.lengths[t] * in.obs[t].vector();
    for (std::size_t t = 1; t <= T; ++t) {
      const auto obs_idx = oracle::range(ys, n * static_cast<Eigen::Index>(t));
      const auto g = oracle::condition(joint, oracle::range(p * static_cast<Eigen::Index>(t), p), obs_idx,
                                       y.head(n * static_cast<Eigen::Index>(t)));
      CHECK(max_rel_diff(pass.stats[t - 1].s_filt, g.mean) < 1e-8);
      CHECK(max_rel_diff(pass.stats[t - 1].P_filt(), g.cov) < 1e-8);
    }
    const auto all_y = oracle::range(ys, n * static_cast<Eigen::Index>(T));
    Vector my(all_y.size());
    Matrix Sy(all_y.size(), all_y.size());
    for (std::size_t i = 0; i < all_y.size(); ++i) {
      my[static_cast<Eigen::Index>(i)] = joint.mean[all_y[i]];
      for (std::size_t j = 0; j < all_y.size(); ++j)
        Sy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = joint.cov(all_y[i], all_y[j]);
    }
    const double ll = oracle::log_mvn(y, my, Sy);
    CHECK(std::abs(pass.log_likelihood - ll) <= 1e-8 * std::max(1.0, std::abs(ll)));
  }
}

TEST_CASE("smoother: degenerate path") {
  StateSpaceParams k = identity_params(2, 0.0);
  k.P0 = Matrix::Zero(2, 2);
  k.s0_mean = Vector2(1.0, -2.0);
  k.G << 0.5, 0.1, -0.2, 0.9;
  Rng rng(1);
  std::vector<UnitObservation> obs(4, UnitObservation(Vector2(1, 1)));
  const auto path = simulation_smoother(std::vector<double>(4, 1.3), obs, k, rng);
  REQUIRE(path.size() == 5);
  Vector s = k.s0_mean;
  for (std::size_t t = 0; t < path.size(); ++t) {
    CHECK((path[t] - s).norm() < 1e-10);
    s = k.G * s;
  }
}

TEST_CASE("smoother moments match the joint-Gaussian oracle") {
  Rng rng(12);
  Instance in = random_instance(rng, 2, 1, 2);
  const oracle::Gaussian joint = oracle::joint(in.model);
  Vector y(4);
  for (std::size_t t = 0; t < 2; ++t) y.segment(2 * static_cast<Eigen::Index>(t), 2) = in.lengths[t] * in.obs[t].vector();
  const auto g = oracle::condition(joint, oracle::range(0, 3), oracle::range(3, 4), y);
  const int N = 100000;
  Matrix draws(3, N);
  for (int i = 0; i < N; ++i) {
    const auto path = simulation_smoother(in.lengths, in.obs, in.params, rng);
    for (int t = 0; t < 3; ++t) draws(t, i) = path[static_cast<std::size_t>(t)][0];
  }
  const Vector mean = draws.rowwise().mean();
  const Matrix centered = draws.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / (N - 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(mean[i] - g.mean[i]) < 4 * std::sqrt(g.cov(i, i) / N));
    for (int j = 0; j < 3; ++j) {
      // Var of a sample covariance entry: (S_ii S_jj + S_ij^2) / N for Gaussians.
      const double se = std::sqrt((g.cov(i, i) * g.cov(j, j) + g.cov(i, j) * g.cov(i, j)) / N);
      CHECK(std::abs(cov(i, j) - g.cov(i, j)) < 4 * se);
    }
  }
  // Last coordinate equals the filter posterior.
  const FilterPass pass = kalman_filter_pass(in.lengths, in.obs, in.params);
  const double m = pass.stats.back().s_filt[0];
  const double sd = std::sqrt(pass.stats.back().P_filt()(0, 0));
  std::vector<double> last(draws.row(2).data(), draws.row(2).data() + 0);
  for (int i = 0; i < N; i += 10) last.push_back(draws(2, i));
  CHECK(stats::ks_one_sample(last, [&](double x) { return 0.5 * std::erfc(-(x - m) / (sd * std::sqrt(2.0))); })
            .p_value > 0.01);
}

TEST_CASE("degenerate parameters are rejected") {
  StateSpaceParams k = identity_params(2, 0.1);
  k.Sigma = Matrix::Zero(2, 2);
  CHECK_THROWS(k.validate());
  StateSpaceParams k2 = identity_params(2, 0.1);
  k2.W(0, 0) = -1.0;
  CHECK_THROWS(k2.validate());
  StateSpaceParams k3 = identity_params(2, 0.1);
  k3.G = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(k3.validate(), DimensionError);
}
