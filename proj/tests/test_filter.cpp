#include <gtest/gtest.h>

#include <cmath>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/filter.hpp"

using namespace sensorplan;

namespace {

Ensemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                         std::uint64_t seed) {
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(mean.size(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd w(mean.size());
    for (auto& x : w) x = nd(rng);
    m.col(j) = mean + l * w;
  }
  return Ensemble(std::move(m), 0);
}

Eigen::MatrixXd exp_cov(int d, double length, double var) {
  Eigen::MatrixXd c(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c(i, j) = var * std::exp(-std::abs(i - j) / length);
  return c;
}

double rel_frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

}  // namespace

TEST(EnsembleStats, TwoMemberHandComputation) {
  Eigen::MatrixXd m(1, 2);
  m << 0.0, 2.0;
  const auto [mean, cov] = ensemble_stats(Ensemble(m, 0));
  EXPECT_DOUBLE_EQ(mean[0], 1.0);
  EXPECT_DOUBLE_EQ(cov(0, 0), 2.0);
}

TEST(EnsembleStats, IdenticalMembersGiveZeroCovariance) {
  Eigen::MatrixXd m = Eigen::VectorXd::LinSpaced(4, 1, 4).replicate(1, 6);
  const auto [mean, cov] = ensemble_stats(Ensemble(m, 0));
  EXPECT_EQ(cov.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(mean[3], 4.0);
}

TEST(EnsembleStats, PermutationInvariantAndSymmetric) {
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Zero(5), exp_cov(5, 2.0, 1.0), 30, 3);
  Eigen::MatrixXd rev = e.members.rowwise().reverse();
  const auto [m1, c1] = ensemble_stats(e);
  const auto [m2, c2] = ensemble_stats(Ensemble(rev, 0));
  EXPECT_LT((m1 - m2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((c1 - c2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(c1, c1.transpose());
}

TEST(Forecast, EqualMembersStayEqualWithoutNoise) {
  GridSpec g(4, 5);
  DynamicsParams p;
  p.advection_x = 0.3;
  Dynamics d(g, p);
  const Ensemble e(Eigen::VectorXd::LinSpaced(g.size(), 0, 1).replicate(1, 8), 2);
  const Ensemble f = forecast(e, d, {}, 5);
  EXPECT_EQ(f.t, 3);
  for (int j = 1; j < f.size(); ++j) EXPECT_EQ(f.members.col(j), f.members.col(0));
}

TEST(Forecast, DeterministicGivenSeed) {
  GridSpec g(4, 5);
  DynamicsParams p;
  p.process_noise_std = 0.1;
  Dynamics d(g, p);
  const Ensemble e(Eigen::MatrixXd::Constant(g.size(), 10, 1.0), 0);
  EXPECT_EQ(forecast(e, d, {}, 5).members, forecast(e, d, {}, 5).members);
}

TEST(Forecast, MeanTracksStepOfMean) {
  GridSpec g(4, 4);
  DynamicsParams p;
  p.diffusion = 0.15;
  p.advection_y = 0.2;
  p.decay = 0.05;
  p.process_noise_std = 0.3;
  p.clamp_nonnegative = false;
  Dynamics d(g, p);
  const int n = 20000;
  const Ensemble e = sample_gaussian(Eigen::VectorXd::LinSpaced(g.size(), 1, 3),
                                     exp_cov(g.size(), 3.0, 0.5), n, 8);
  const Eigen::VectorXd direct = d.transport(e.mean());
  const Eigen::VectorXd fc = forecast(e, d, {}, 9).mean();
  // Per-cell std of the forecast mean is below sqrt((0.5 + 0.09) / n).
  EXPECT_LT((fc - direct).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(0.6 / n));
}

TEST(Kalman, ScalarClosedForm) {
  GaussianBelief b{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  const auto post = kalman_update_exact(b, {{0}, 1.0}, {Eigen::VectorXd::Constant(1, 2.0), 1});
  EXPECT_NEAR(post.mean[0], 1.0, 1e-12);
  EXPECT_NEAR(post.cov(0, 0), 0.5, 1e-12);
}

TEST(Kalman, EmptyObservationAndUninformativeNoise) {
  GaussianBelief b{Eigen::VectorXd::LinSpaced(3, 0, 2), exp_cov(3, 1.0, 2.0)};
  const auto same = kalman_update_exact(b, {{}, 1.0}, {Eigen::VectorXd(0), 1});
  EXPECT_EQ(same.mean, b.mean);
  EXPECT_EQ(same.cov, b.cov);
  const auto weak = kalman_update_exact(b, {{1}, 1e12}, {Eigen::VectorXd::Constant(1, 100.0), 1});
  EXPECT_LT((weak.mean - b.mean).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Kalman, RejectsNonPsdPrior) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  GaussianBelief b{Eigen::VectorXd::Zero(2), bad};
  EXPECT_THROW(kalman_update_exact(b, {{0}, 1.0}, {Eigen::VectorXd::Zero(1), 0}),
               std::invalid_argument);
}

TEST(Kalman, PosteriorCovariancePsd) {
  GaussianBelief b{Eigen::VectorXd::Zero(8), exp_cov(8, 4.0, 1.0)};
  const auto post = kalman_update_exact(b, {{0, 3, 7}, 1e-6}, {Eigen::VectorXd::Ones(3), 0});
  EXPECT_NO_THROW(check_psd(post.cov));
}

TEST(Enkf, EmptyOperatorLeavesEnsemble) {
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Zero(3), exp_cov(3, 1, 1), 10, 1);
  EXPECT_EQ(enkf_update(e, {{}, 1.0}, {Eigen::VectorXd(0), 0}, 3).members, e.members);
}

TEST(Enkf, NearExactMeasurementPinsState) {
  Eigen::MatrixXd m(2, 2);
  m << 4.0, 6.0, 1.0, 3.0;
  const Ensemble post = enkf_update(Ensemble(m, 0), {{0}, 1e-12}, {Eigen::VectorXd::Constant(1, 5.0), 0}, 7);
  EXPECT_NEAR(post.members(0, 0), 5.0, 1e-4);
  EXPECT_NEAR(post.members(0, 1), 5.0, 1e-4);
}

TEST(Enkf, ScalarMatchesExactKalman) {
  const int n = 20000;
  const Ensemble prior = sample_gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), n, 21);
  const Ensemble post = enkf_update(prior, {{0}, 1.0}, {Eigen::VectorXd::Constant(1, 2.0), 0}, 22);
  const auto [mean, cov] = ensemble_stats(post);
  EXPECT_NEAR(mean[0], 1.0, 0.05);
  EXPECT_NEAR(cov(0, 0), 0.5, 0.05);
}

TEST(Enkf, DeterministicGivenSeed) {
  const Ensemble prior = sample_gaussian(Eigen::VectorXd::Zero(4), exp_cov(4, 2, 1), 50, 2);
  const ObservationOperator op{{1, 2}, 0.3};
  const Measurement z{Eigen::Vector2d(0.5, -0.2), 0};
  EXPECT_EQ(enkf_update(prior, op, z, 5).members, enkf_update(prior, op, z, 5).members);
}

TEST(Enkf, TraceContracts) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Ensemble prior = sample_gaussian(Eigen::VectorXd::Zero(6), exp_cov(6, 2, 1.5), 1000, seed);
    const Ensemble post = enkf_update(prior, {{int(seed % 6)}, 0.5}, {Eigen::VectorXd::Zero(1), 0}, seed + 100);
    const double before = ensemble_variance(prior).sum();
    EXPECT_LE(ensemble_variance(post).sum(), before * (1.0 + 1e-2));
  }
}

TEST(Enkf, DisjointUpdatesCommute) {
  const int n = 20000;
  const Ensemble prior = sample_gaussian(Eigen::VectorXd::Zero(5), exp_cov(5, 2, 1), n, 4);
  const ObservationOperator a{{0}, 0.5}, b{{4}, 0.5};
  const Measurement za{Eigen::VectorXd::Constant(1, 1.0), 0}, zb{Eigen::VectorXd::Constant(1, -1.0), 0};
  const Eigen::VectorXd ab = enkf_update(enkf_update(prior, a, za, 1), b, zb, 2).mean();
  const Eigen::VectorXd ba = enkf_update(enkf_update(prior, b, zb, 3), a, za, 4).mean();
  EXPECT_LT((ab - ba).cwiseAbs().maxCoeff(), 0.05);

  GaussianBelief g{Eigen::VectorXd::Zero(5), exp_cov(5, 2, 1)};
  const auto kab = kalman_update_exact(kalman_update_exact(g, a, za), b, zb);
  const auto kba = kalman_update_exact(kalman_update_exact(g, b, zb), a, za);
  EXPECT_LT((kab.mean - kba.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((kab.cov - kba.cov).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Enkf, RejectsInvalidInputs) {
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Zero(3), exp_cov(3, 1, 1), 10, 1);
  EXPECT_THROW(enkf_update(e, {{0, 0}, 1.0}, {Eigen::VectorXd::Zero(2), 0}, 1), std::invalid_argument);
  EXPECT_THROW(enkf_update(e, {{3}, 1.0}, {Eigen::VectorXd::Zero(1), 0}, 1), std::invalid_argument);
  EXPECT_THROW(enkf_update(e, {{0}, 0.0}, {Eigen::VectorXd::Zero(1), 0}, 1), std::invalid_argument);
  EXPECT_THROW(enkf_update(e, {{0}, 1.0}, {Eigen::VectorXd::Zero(2), 0}, 1), std::invalid_argument);
  EXPECT_THROW(Ensemble(Eigen::MatrixXd::Zero(3, 1), 0), std::invalid_argument);
}

TEST(PosteriorSpread, EmptyOperatorLeavesEnsemble) {
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Zero(3), exp_cov(3, 1, 1), 10, 1);
  EXPECT_EQ(posterior_spread(e, {{}, 1.0}).members, e.members);
}

TEST(PosteriorSpread, ContractsObservedVarianceAndKeepsMean) {
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Constant(4, 2.0), exp_cov(4, 2, 1), 200, 5);
  const Ensemble p = posterior_spread(e, {{2}, 0.1});
  EXPECT_LT(ensemble_variance(p)[2], ensemble_variance(e)[2]);
  EXPECT_LT((p.mean() - e.mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PosteriorSpread, MatchesKalmanCovariance) {
  const int d = 12;
  const Eigen::MatrixXd sigma = exp_cov(d, 3.0, 1.0);
  const Ensemble e = sample_gaussian(Eigen::VectorXd::Zero(d), sigma, 5000, 17);
  const ObservationOperator op{{2, 9}, 0.2};
  const Eigen::MatrixXd post = ensemble_stats(posterior_spread(e, op)).second;
  const auto exact = kalman_update_exact({Eigen::VectorXd::Zero(d), sigma}, op, {Eigen::Vector2d::Zero(), 0});
  EXPECT_LT(rel_frob(post, exact.cov), 0.10);

  // Against the Kalman update of the sample covariance itself the match is exact.
  const auto [mean, sample] = ensemble_stats(e);
  const auto of_sample = kalman_update_exact({mean, sample}, op, {Eigen::Vector2d(mean[2], mean[9]), 0});
  EXPECT_LT(rel_frob(post, of_sample.cov), 1e-9);
}

TEST(Localization, GaspariCohnShape) {
  EXPECT_DOUBLE_EQ(gaspari_cohn(0.0, 2.0), 1.0);
  EXPECT_EQ(gaspari_cohn(4.0, 2.0), 0.0);
  EXPECT_GT(gaspari_cohn(1.0, 2.0), gaspari_cohn(2.0, 2.0));
}
