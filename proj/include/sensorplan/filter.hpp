#pragma once

// Stochastic (perturbed-observation) Ensemble Kalman Filter, the expected-
// observation update used during planning, and an exact Kalman update used
// as a reference on linear-Gaussian problems.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/grid.hpp"
#include "sensorplan/random.hpp"

namespace sensorplan {

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Selection operator over `cells` with isotropic noise R = noise_var * I.
struct ObservationOperator {
  std::vector<CellIndex> cells;
  double noise_var = 1.0;

  bool empty() const noexcept { return cells.empty(); }
  int size() const noexcept { return static_cast<int>(cells.size()); }

  void validate(int dim) const {
    if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
    std::vector<CellIndex> sorted = cells;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("observed cells must be unique");
    for (auto c : cells)
      if (c < 0 || c >= dim)
        throw std::invalid_argument("observed cell " + std::to_string(c) + " outside [0, " +
                                    std::to_string(dim) + ")");
  }

  /// Rows of `x` picked by the operator.
  template <typename Derived>
  Eigen::MatrixXd select(const Eigen::MatrixBase<Derived>& x) const {
    Eigen::MatrixXd out(cells.size(), x.cols());
    for (std::size_t k = 0; k < cells.size(); ++k) out.row(k) = x.row(cells[k]);
    return out;
  }
};

struct Measurement {
  Eigen::VectorXd z;
  int t = 0;
};

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Robustness knobs; both off by default.
struct EnkfOptions {
  double inflation = 1.0;            // multiplicative prior anomaly inflation
  double localization_radius = 0.0;  // Gaspari-Cohn half-width in cells, 0 = off
  std::optional<GridSpec> grid;      // required when localization is on
};

inline double gaspari_cohn(double dist, double half_width) {
  const double z = dist / half_width;
  if (z >= 2.0) return 0.0;
  if (z <= 1.0)
    return 1.0 - 5.0 / 3.0 * z * z + 5.0 / 8.0 * z * z * z + 0.5 * std::pow(z, 4) -
           0.25 * std::pow(z, 5);
  return 4.0 - 5.0 * z + 5.0 / 3.0 * z * z + 5.0 / 8.0 * z * z * z - 0.5 * std::pow(z, 4) +
         1.0 / 12.0 * std::pow(z, 5) - 2.0 / (3.0 * z);
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ensemble_stats(const Ensemble& ens) {
  if (ens.size() < 2) throw std::invalid_argument("ensemble statistics need N >= 2");
  Eigen::VectorXd mean = ens.members.rowwise().mean();
  const Eigen::MatrixXd a = ens.members.colwise() - mean;
  Eigen::MatrixXd cov = (a * a.transpose()) / double(ens.size() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {std::move(mean), std::move(cov)};
}

inline Eigen::VectorXd ensemble_variance(const Ensemble& ens) {
  const Eigen::VectorXd mean = ens.mean();
  return (ens.members.colwise() - mean).rowwise().squaredNorm() / double(ens.size() - 1);
}

inline Ensemble forecast(const Ensemble& ens, const Dynamics& predictor,
                         const ForcingSeries& forcing, std::uint64_t seed) {
  predictor.check_dim(ens.dim());
  Eigen::MatrixXd out(ens.dim(), ens.size());
  for (int j = 0; j < ens.size(); ++j) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
    out.col(j) = predictor.advance(ens.members.col(j), ens.t, forcing, rng);
  }
  return Ensemble(std::move(out), ens.t + 1);
}

namespace detail {

/// Prior quantities shared by the update variants, in observation space.
struct InnovationSystem {
  Eigen::VectorXd mean;
  Eigen::MatrixXd anomalies;   // D x N, unscaled
  Eigen::MatrixXd obs_anom;    // m x N
  Eigen::MatrixXd cross_cov;   // P H^T, D x m
  Eigen::MatrixXd innov_cov;   // H P H^T + R, m x m

  InnovationSystem(const Ensemble& ens, const ObservationOperator& op,
                   const EnkfOptions& opts) {
    mean = ens.mean();
    anomalies = ens.members.colwise() - mean;
    if (opts.inflation != 1.0) anomalies *= opts.inflation;
    obs_anom = op.select(anomalies);
    const double scale = 1.0 / double(ens.size() - 1);
    cross_cov = scale * anomalies * obs_anom.transpose();
    Eigen::MatrixXd hph = scale * obs_anom * obs_anom.transpose();
    if (opts.localization_radius > 0.0) {
      if (!opts.grid) throw std::invalid_argument("localization needs a grid");
      const GridSpec& g = *opts.grid;
      for (Eigen::Index k = 0; k < cross_cov.cols(); ++k) {
        const CellIndex ck = op.cells[k];
        for (Eigen::Index i = 0; i < cross_cov.rows(); ++i)
          cross_cov(i, k) *= gaspari_cohn(cell_distance(g, int(i), ck), opts.localization_radius);
        for (Eigen::Index l = 0; l < hph.cols(); ++l)
          hph(k, l) *= gaspari_cohn(cell_distance(g, ck, op.cells[l]), opts.localization_radius);
      }
    }
    innov_cov = 0.5 * (hph + hph.transpose());
    innov_cov.diagonal().array() += op.noise_var;
  }

  static double cell_distance(const GridSpec& g, CellIndex a, CellIndex b) {
    return std::hypot(g.row(a) - g.row(b), g.col(a) - g.col(b));
  }

  /// innov_cov^{-1} rhs via Cholesky, with a residual check.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    Eigen::LLT<Eigen::MatrixXd> llt(innov_cov);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("innovation covariance is not positive definite");
    Eigen::MatrixXd y = llt.solve(rhs);
    const double resid = (innov_cov * y - rhs).norm() / std::max(1.0, rhs.norm());
    if (!(resid <= 1e-6))
      throw NumericalFailure("innovation solve residual " + std::to_string(resid) +
                             " exceeds 1e-6");
    return y;
  }
};

}  // namespace detail

/// Stochastic EnKF analysis: every member assimilates the measurement plus
/// its own draw from N(0, R).
inline Ensemble enkf_update(const Ensemble& ens, const ObservationOperator& op,
                            const Measurement& z, std::uint64_t seed,
                            const EnkfOptions& opts = {}) {
  op.validate(ens.dim());
  if (op.empty()) return ens;
  if (z.z.size() != op.size())
    throw std::invalid_argument("measurement length does not match observation operator");
  if (!z.z.allFinite()) throw std::invalid_argument("measurement is not finite");

  const detail::InnovationSystem sys(ens, op, opts);
  const Eigen::MatrixXd prior = sys.anomalies.colwise() + sys.mean;
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(op.noise_var));
  Eigen::MatrixXd innov(op.size(), ens.size());
  for (int j = 0; j < ens.size(); ++j)
    for (int k = 0; k < op.size(); ++k)
      innov(k, j) = z.z[k] + nd(rng) - prior(op.cells[k], j);

  Eigen::MatrixXd out = prior + sys.cross_cov * sys.solve(innov);
  return Ensemble(std::move(out), ens.t);
}

/// Update with the expected observation z = H * mean. The mean is unchanged
/// and anomalies are contracted by a deterministic square-root gain, so the
/// sample covariance of the result equals the Kalman posterior covariance
/// of the prior sample covariance.
inline Ensemble posterior_spread(const Ensemble& ens, const ObservationOperator& op,
                                 const EnkfOptions& opts = {}) {
  op.validate(ens.dim());
  if (op.empty()) return ens;
  const detail::InnovationSystem sys(ens, op, opts);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.innov_cov);
  if (eig.info() != Eigen::Success)
    throw NumericalFailure("eigendecomposition of innovation covariance failed");
  const double sqrt_r = std::sqrt(op.noise_var);
  Eigen::VectorXd w = eig.eigenvalues();
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double lam = std::max(w[k], op.noise_var);
    w[k] = 1.0 / (lam + sqrt_r * std::sqrt(lam));
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::MatrixXd gain = sys.cross_cov * v * w.asDiagonal() * v.transpose();
  Eigen::MatrixXd anomalies = sys.anomalies - gain * sys.obs_anom;
  Eigen::MatrixXd out = anomalies.colwise() + sys.mean;
  return Ensemble(std::move(out), ens.t);
}

inline void check_psd(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument("covariance is not positive semidefinite");
}

/// Textbook Kalman measurement update (Joseph form).
inline GaussianBelief kalman_update_exact(const GaussianBelief& b,
                                          const ObservationOperator& op,
                                          const Measurement& z) {
  check_psd(b.cov);
  const int d = static_cast<int>(b.mean.size());
  op.validate(d);
  if (op.empty()) return b;
  if (z.z.size() != op.size())
    throw std::invalid_argument("measurement length does not match observation operator");

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(op.size(), d);
  for (int k = 0; k < op.size(); ++k) h(k, op.cells[k]) = 1.0;
  Eigen::MatrixXd s = h * b.cov * h.transpose();
  s.diagonal().array() += op.noise_var;
  const Eigen::MatrixXd k = b.cov * h.transpose() * s.llt().solve(Eigen::MatrixXd::Identity(op.size(), op.size()));
  GaussianBelief out;
  out.mean = b.mean + k * (z.z - h * b.mean);
  const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(d, d) - k * h;
  out.cov = ikh * b.cov * ikh.transpose() + op.noise_var * k * k.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace sensorplan
