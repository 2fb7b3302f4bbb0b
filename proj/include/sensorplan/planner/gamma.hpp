#pragma once

// Correlation between observation sets across the forecast horizon and the
// coefficient that discounts rewards of observations correlated with every
// earlier observation in a candidate sequence.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/planner/types.hpp"

namespace sensorplan {

inline double apply_fe(GammaShape shape, double x) {
  switch (shape) {
    case GammaShape::none: return 1.0;
    case GammaShape::inverse: return 1.0 / std::max(x, 1e-6);
    case GammaShape::exp10: return std::exp(-10.0 * x);
    case GammaShape::sigmoid100: {
      const double e = std::exp(-100.0 * x);
      return e / (1.0 + e);
    }
  }
  return 1.0;
}

/// Coefficient for a candidate at step t+1 given the correlations
/// c_1..c_t between the candidate and each earlier step's observation:
///   f_e( prod_i c_i * exp(i - t - 1) ) + 0.01
/// An empty prefix gives exactly 1; shape `none` always gives 1.
inline double gamma_coef(std::span<const double> prefix_correlations, GammaShape shape) {
  if (shape == GammaShape::none || prefix_correlations.empty()) return 1.0;
  const int t = static_cast<int>(prefix_correlations.size());
  double x = 1.0;
  for (int i = 1; i <= t; ++i) x *= prefix_correlations[i - 1] * std::exp(double(i - t - 1));
  return apply_fe(shape, x) + 0.01;
}

/// Member-aligned empirical correlations over a forecast history, where
/// history[k] is the ensemble at planning step k. Standardized member vectors
/// and pairwise values are cached.
class CorrelationCache {
 public:
  CorrelationCache(const std::vector<Ensemble>& history, const GridSpec& grid)
      : history_(&history), grid_(grid) {
    if (history.empty()) return;
    const int n = history.front().size();
    for (const auto& e : history)
      if (e.size() != n || e.dim() != grid.size())
        throw std::invalid_argument("correlation history ensembles are misaligned");
    members_ = n;
  }

  /// |Pearson correlation| of cell a at step ta with cell b at step tb across
  /// members; 0 when either side has zero variance.
  double cell(int ta, CellIndex a, int tb, CellIndex b) {
    if (ta > tb || (ta == tb && a > b)) {
      std::swap(ta, tb);
      std::swap(a, b);
    }
    const std::uint64_t key = pack(ta, a, tb, b);
    if (auto it = pairs_.find(key); it != pairs_.end()) return it->second;
    const Standardized& sa = standardized(ta, a);
    const Standardized& sb = standardized(tb, b);
    double rho = 0.0;
    if (!sa.degenerate && !sb.degenerate)
      rho = std::min(1.0, std::abs(sa.z.dot(sb.z)) / double(members_ - 1));
    pairs_.emplace(key, rho);
    return rho;
  }

  /// Mean of cell-level |correlation| over all cell pairs of the two sets.
  double sets(int ta, const std::vector<CellIndex>& a, int tb, const std::vector<CellIndex>& b) {
    if (a.empty() || b.empty()) return 0.0;
    double sum = 0.0;
    for (auto ca : a)
      for (auto cb : b) sum += cell(ta, ca, tb, cb);
    return sum / double(a.size() * b.size());
  }

  double sets(int ta, const ObservationSet& a, int tb, const ObservationSet& b) {
    return sets(ta, a.cells(grid_), tb, b.cells(grid_));
  }

 private:
  struct Standardized {
    Eigen::VectorXd z;
    bool degenerate = true;
  };

  std::uint64_t pack(int ta, CellIndex a, int tb, CellIndex b) const {
    const std::uint64_t d = static_cast<std::uint64_t>(grid_.size());
    const std::uint64_t steps = history_->size();
    return ((static_cast<std::uint64_t>(ta) * d + a) * steps + tb) * d + b;
  }

  const Standardized& standardized(int t, CellIndex c) {
    if (t < 0 || t >= static_cast<int>(history_->size()))
      throw std::invalid_argument("correlation step outside forecast history");
    const std::uint64_t key = static_cast<std::uint64_t>(t) * grid_.size() + c;
    if (auto it = cells_.find(key); it != cells_.end()) return it->second;
    Eigen::VectorXd x = (*history_)[t].members.row(c).transpose();
    x.array() -= x.mean();
    const double sd = std::sqrt(x.squaredNorm() / double(members_ - 1));
    Standardized s;
    if (sd > 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      s.z = x / sd;
      s.degenerate = false;
    }
    return cells_.emplace(key, std::move(s)).first->second;
  }

  const std::vector<Ensemble>* history_;
  GridSpec grid_;
  int members_ = 0;
  std::unordered_map<std::uint64_t, Standardized> cells_;
  std::unordered_map<std::uint64_t, double> pairs_;
};

/// One-shot correlation between two observation sets of a member-aligned
/// history (see CorrelationCache::sets).
inline double correlation(const std::vector<Ensemble>& history, const GridSpec& grid,
                          const ObservationSet& obs_i, int t_i, const ObservationSet& obs_j,
                          int t_j) {
  CorrelationCache cache(history, grid);
  return cache.sets(t_i, obs_i, t_j, obs_j);
}

}  // namespace sensorplan
