#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/random.hpp"

namespace testsupport {

using namespace sensorplan;

inline Ensemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                                std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(mean.size(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd w(mean.size());
    for (auto& x : w) x = nd(rng);
    m.col(j) = mean + root * w;
  }
  return Ensemble(std::move(m), 0);
}

/// Squared-exponential spatial covariance with per-cell standard deviations.
inline Eigen::MatrixXd spatial_cov(const GridSpec& g, const Eigen::VectorXd& sd, double length) {
  Eigen::MatrixXd c(g.size(), g.size());
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) {
      const double d2 = std::pow(g.row(i) - g.row(j), 2) + std::pow(g.col(i) - g.col(j), 2);
      c(i, j) = sd[i] * sd[j] * std::exp(-d2 / (2.0 * length * length));
    }
  return c;
}

/// Matrix of Dynamics::transport, built column by column.
inline Eigen::MatrixXd transport_matrix(const Dynamics& d) {
  const int n = d.grid().size();
  Eigen::MatrixXd a(n, n);
  for (int k = 0; k < n; ++k) a.col(k) = d.transport(Eigen::VectorXd::Unit(n, k));
  return a;
}

/// Linear predictor without noise or clamping.
inline Dynamics linear_predictor(const GridSpec& g, double diffusion = 0.05,
                                 double advection = 0.1) {
  DynamicsParams p;
  p.diffusion = diffusion;
  p.advection_x = advection;
  p.clamp_nonnegative = false;
  return Dynamics(g, p);
}

/// Random correlated ensemble whose cell spreads vary over an order of magnitude.
inline Ensemble random_ensemble(const GridSpec& g, int members, std::uint64_t seed,
                                double length = 1.0) {
  Rng rng(derive_seed(seed, {77}));
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Eigen::VectorXd sd(g.size());
  for (auto& x : sd) x = u(rng);
  return sample_gaussian(Eigen::VectorXd::Constant(g.size(), 3.0), spatial_cov(g, sd, length),
                         members, derive_seed(seed, {78}));
}

}  // namespace testsupport
