#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "pdlm/errors.hpp"
#include "pdlm/rbpf.hpp"
#include "pdlm/stat_tests.hpp"
#include "test_util.hpp"

using namespace pdlm;

namespace {

StateSpaceParams local_level(double g, double w) {
  StateSpaceParams k;
  k.F = Design::constant(Matrix::Identity(2, 2));
  k.G = g * Matrix::Identity(2, 2);
  k.W = w * Matrix::Identity(2, 2);
  k.Sigma = Matrix::Identity(2, 2);
  k.s0_mean = Vector::Zero(2);
  k.P0 = Matrix::Identity(2, 2);
  return k;
}

std::vector<UnitObservation> drift_series(std::size_t T, Rng& rng) {
  std::vector<UnitObservation> obs;
  double a = 0.3;
  for (std::size_t t = 0; t < T; ++t) {
    a += 0.3 * rng.normal();
    obs.push_back(angle_to_unit(Angle(a + 0.4 * rng.normal())));
  }
  return obs;
}

}  // namespace

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(std::vector<double>(10, 0.1)) == doctest::Approx(10.0));
  CHECK(effective_sample_size(std::vector<double>{0, 0, 3.0, 0}) == doctest::Approx(1.0));
  CHECK(effective_sample_size(std::vector<double>{2, 1, 1}) == doctest::Approx(16.0 / 6.0));
  CHECK_THROWS_AS(effective_sample_size(std::vector<double>{0, 0}), DomainError);
  CHECK_THROWS_AS(effective_sample_size(std::vector<double>{1, -1}), DomainError);
}

TEST_CASE("log-normal proposal density integrates to one") {
  const double integral = oracle::simpson(
      [](double r) { return r <= 0 ? 0.0 : std::exp(log_proposal_density(r, 1.3, 0.25)); }, 0.0, 6.0, 60000);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("swarm construction") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  SwarmConfig one;
  one.M = 1;
  const Swarm s1 = init_swarm(k, one, angle_to_unit(Angle(1.0)), Rng(1));
  REQUIRE(s1.particles.size() == 1);
  CHECK(s1.weights()[0] == 1.0);

  SwarmConfig cfg;
  cfg.M = 500;
  const Swarm s = init_swarm(k, cfg, angle_to_unit(Angle(1.0)), Rng(1));
  double sum = 0;
  for (double w : s.weights()) sum += w;
  CHECK(std::abs(sum - 1.0) < 1e-12);
  CHECK(s.t == 1);
}

TEST_CASE("config validation") {
  SwarmConfig c;
  c.M = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SwarmConfig{};
  c.tau = 5000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SwarmConfig{};
  c.sigma_g = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SwarmConfig{};
  c.L = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("incremental weights telescope to k(r_{1:t}) / g(r_{1:t})") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    StateSpaceParams k;
    std::vector<Matrix> fs;
    for (int t = 0; t < 3; ++t) fs.push_back(testing::random_matrix(2, 3, rng));
    k.F = Design::per_period(fs);
    k.G = testing::random_matrix(3, 3, rng, 0.4);
    k.W = testing::random_spd(3, rng, 0.2);
    k.Sigma = testing::random_spd(2, rng, 0.4);
    k.s0_mean = testing::random_vector(3, rng);
    k.P0 = testing::random_spd(3, rng, 0.3);
    std::vector<UnitObservation> obs;
    for (int t = 0; t < 3; ++t) obs.emplace_back(testing::random_vector(2, rng));

    SwarmConfig cfg;
    cfg.M = 1;
    cfg.L = 0;
    Swarm s = bootstrap_swarm(k, cfg);
    const double lw0 = s.particles[0].log_weight;
    Particle p = s.particles[0];
    std::shared_ptr<const KalmanCovariances> cov = s.cov;
    std::vector<double> r{1.0};
    for (std::size_t t = 1; t <= 3; ++t) {
      cov = predict_covariances(*cov, k.F.at(t), k);
      Rng step = rng.substream(t);
      correction(p, obs[t - 1], k.F.at(t), cov, k, cfg, step);
      r.push_back(p.length);
    }
    // Direct evaluation from the joint Gaussian law of the pseudo-observations.
    const oracle::Gaussian joint = oracle::joint({fs, k.G, k.W, k.Sigma, k.s0_mean, k.P0});
    Vector y(6);
    for (int t = 0; t < 3; ++t) y.segment(2 * t, 2) = r[t + 1] * obs[t].vector();
    const auto idx = oracle::range(12, 6);
    Vector my(6);
    Matrix Sy(6, 6);
    for (int i = 0; i < 6; ++i) {
      my[i] = joint.mean[idx[i]];
      for (int j = 0; j < 6; ++j) Sy(i, j) = joint.cov(idx[i], idx[j]);
    }
    double log_k = oracle::log_mvn(y, my, Sy);
    double log_g = 0.0;
    for (int t = 1; t <= 3; ++t) {
      log_k += std::log(r[t]);
      const double z = std::log(r[t] / r[t - 1]) / cfg.sigma_g;
      log_g += -std::log(r[t] * cfg.sigma_g * std::sqrt(2 * std::numbers::pi)) - 0.5 * z * z;
    }
    CHECK(std::abs((p.log_weight - lw0) - (log_k - log_g)) < 1e-10);
  }
}

TEST_CASE("tiny proposal scale keeps lengths constant") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  SwarmConfig cfg;
  cfg.M = 20;
  cfg.sigma_g = 1e-12;
  cfg.L = 0;
  cfg.tau = 1;
  Swarm s = bootstrap_swarm(k, cfg);
  Rng rng(3);
  const auto obs = drift_series(5, rng);
  for (const auto& u : obs) {
    rbpf_step(s, u, k, cfg, Rng(2));
    for (const auto& p : s.particles) CHECK(std::abs(p.length - 1.0) < 1e-9);
  }
}

TEST_CASE("selection") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  SwarmConfig cfg;
  cfg.M = 100;
  Swarm s = bootstrap_swarm(k, cfg);
  Rng rng(1);
  const auto before = s.log_weights();
  CHECK_FALSE(selection(s, cfg, rng));  // uniform weights: ESS = M
  CHECK(s.log_weights() == before);

  for (std::size_t m = 0; m < s.particles.size(); ++m) s.particles[m].log_weight = m == 0 ? 0.0 : -50.0;
  s.particles[0].length = 7.0;
  CHECK(selection(s, cfg, rng));
  for (double w : s.weights()) CHECK(w == doctest::Approx(0.01).epsilon(1e-12));
  int sevens = 0;
  for (const auto& p : s.particles) sevens += p.length == 7.0;
  CHECK(sevens >= 99);
}

TEST_CASE("resampling is unbiased") {
  const std::vector<double> w{0.5, 0.2, 0.15, 0.1, 0.05};
  for (bool systematic : {false, true}) {
    Rng rng(systematic ? 8 : 9);
    const int trials = 100000;
    const std::size_t M = 5;
    std::vector<double> counts(5, 0.0), sq(5, 0.0);
    for (int i = 0; i < trials; ++i) {
      std::vector<double> c(5, 0.0);
      for (std::size_t j : resample_indices(w, M, systematic, rng)) c[j] += 1;
      for (int j = 0; j < 5; ++j) counts[j] += c[j], sq[j] += c[j] * c[j];
    }
    for (int j = 0; j < 5; ++j) {
      const double mean = counts[j] / trials;
      const double var = sq[j] / trials - mean * mean;
      CHECK(std::abs(mean - M * w[j]) <= 4 * std::sqrt(var / trials) + 1e-12);
    }
  }
}

TEST_CASE("mutation") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  SwarmConfig cfg;
  cfg.M = 10;
  Swarm s = init_swarm(k, cfg, angle_to_unit(Angle(0.3)), Rng(4));
  Rng rng(5);
  Particle p = s.particles[3];
  const Particle before = p;
  SwarmConfig zero = cfg;
  zero.L = 0;
  mutation(p, angle_to_unit(Angle(0.3)), zero, rng);
  CHECK(p.length == before.length);
  CHECK(p.stats.s_filt == before.stats.s_filt);
  mutation(p, angle_to_unit(Angle(0.3)), cfg, rng);
  CHECK(p.length != before.length);
  CHECK(p.stats.P_filt() == before.stats.P_filt());
  CHECK(p.log_weight == before.log_weight);
}

TEST_CASE("mutation does not change the filtering distribution") {
  const StateSpaceParams k = local_level(0.95, 0.05);
  Rng rng(31);
  const auto obs = drift_series(20, rng);
  auto filtered_mean = [&](int L, std::uint64_t seed) {
    SwarmConfig cfg;
    cfg.M = 4000;
    cfg.L = L;
    Swarm s = bootstrap_swarm(k, cfg);
    for (const auto& u : obs) rbpf_step(s, u, k, cfg, Rng(seed));
    const auto w = s.weights();
    double m = 0;
    for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * s.particles[i].stats.s_filt[0];
    return m;
  };
  std::vector<double> l0, l5;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    l0.push_back(filtered_mean(0, seed));
    l5.push_back(filtered_mean(5, seed + 100));
  }
  const double m0 = stats::mean(l0), m5 = stats::mean(l5);
  const double s0 = std::sqrt(stats::variance(l0) / 8), s5 = std::sqrt(stats::variance(l5) / 8);
  // Overlapping 95% intervals.
  CHECK(std::abs(m0 - m5) < 1.96 * (s0 + s5) + 1e-3);
}

TEST_CASE("M = 1, tau = 1, L = 0 follows one proposed trajectory") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  SwarmConfig cfg;
  cfg.M = 1;
  cfg.tau = 1;
  cfg.L = 0;
  Swarm s = bootstrap_swarm(k, cfg);
  Rng rng(6);
  const auto obs = drift_series(6, rng);
  std::vector<double> r;
  for (const auto& u : obs) {
    const StepRecord rec = rbpf_step(s, u, k, cfg, Rng(3));
    CHECK_FALSE(rec.resampled);
    CHECK(rec.ess == 1.0);
    r.push_back(s.particles[0].length);
  }
  // The Kalman statistics are the deterministic filter for the proposed lengths.
  const FilterPass pass = kalman_filter_pass(r, obs, k);
  CHECK(max_rel_diff(pass.stats.back().s_filt, s.particles[0].stats.s_filt) < 1e-12);
}

TEST_CASE("rbpf is deterministic and independent of the worker count") {
  const StateSpaceParams k = local_level(0.9, 0.1);
  Rng rng(7);
  const auto obs = drift_series(15, rng);
  auto run = [&](int threads) {
    SwarmConfig cfg;
    cfg.M = 700;
    cfg.threads = threads;
    Swarm s = bootstrap_swarm(k, cfg);
    std::vector<StepRecord> recs;
    for (const auto& u : obs) {
      recs.push_back(rbpf_step(s, u, k, cfg, Rng(11)));
      double sum = 0;
      for (double w : s.weights()) sum += w;
      CHECK(std::abs(sum - 1.0) < 1e-12);
      CHECK(recs.back().ess >= 1.0);
      CHECK(recs.back().ess <= static_cast<double>(cfg.M) + 1e-9);
      CHECK(recs.back().resampled == (recs.back().ess < cfg.threshold()));
    }
    return std::make_pair(s, recs);
  };
  const auto a = run(1), b = run(4);
  for (std::size_t m = 0; m < a.first.particles.size(); ++m) {
    CHECK(a.first.particles[m].length == b.first.particles[m].length);
    CHECK(a.first.particles[m].log_weight == b.first.particles[m].log_weight);
  }
}

TEST_CASE("predictive sample") {
  // W = 0, P_filt = 0, G = I: predictive is PN(F s_filt, I).
  StateSpaceParams k = local_level(1.0, 0.0);
  k.P0 = Matrix::Zero(2, 2);
  k.s0_mean = Vector2(1.0, 0.5);
  SwarmConfig cfg;
  cfg.M = 10;
  const Swarm s = bootstrap_swarm(k, cfg);
  Rng rng(1);
  const auto draws = predictive_sample(s, Matrix::Identity(2, 2), k, 20000, rng);
  std::vector<double> a, b;
  for (const auto& u : draws) {
    CHECK(std::abs(u.vector().norm() - 1.0) < 1e-12);
    a.push_back(unit_to_angle(u).radians());
  }
  for (int i = 0; i < 20000; ++i)
    b.push_back(unit_to_angle(sample_projected_normal(k.s0_mean, Matrix::Identity(2, 2), rng)).radians());
  CHECK(stats::ks_two_sample(a, b).p_value > 0.01);
}
