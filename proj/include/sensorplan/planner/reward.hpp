#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "sensorplan/filter.hpp"
#include "sensorplan/planner/types.hpp"

namespace sensorplan {

/// Information gained by observing `op` under the ensemble's sample
/// covariance. Always evaluated on the observed subspace:
///   logdet_gain: logdet(H P H^T + (r + eps) I) - m log(r + eps)
///   trace_gain:  trace(P) - trace(P_post) = trace(P H^T S^-1 H P)
inline double reward(const Ensemble& ens, const ObservationOperator& op, const PlanConfig& cfg) {
  if (op.empty()) return 0.0;
  op.validate(ens.dim());
  const Eigen::VectorXd mean = ens.mean();
  const Eigen::MatrixXd obs_anom = op.select(ens.members).colwise() - op.select(mean).col(0);
  const double scale = 1.0 / double(ens.size() - 1);
  Eigen::MatrixXd s = scale * obs_anom * obs_anom.transpose();
  s.diagonal().array() += op.noise_var + cfg.ridge_eps;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw NumericalFailure("observed covariance block is not positive definite");

  if (cfg.reward == RewardMode::logdet_gain) {
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < l.rows(); ++k) logdet += 2.0 * std::log(l(k, k));
    return logdet - double(op.size()) * std::log(op.noise_var + cfg.ridge_eps);
  }
  const Eigen::MatrixXd anomalies = ens.members.colwise() - mean;
  const Eigen::MatrixXd cross = scale * obs_anom * anomalies.transpose();  // H P, m x D
  const Eigen::MatrixXd w = llt.matrixL().solve(cross);
  return w.squaredNorm();
}

}  // namespace sensorplan
