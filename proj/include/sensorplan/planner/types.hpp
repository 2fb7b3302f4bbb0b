#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sensorplan/filter.hpp"
#include "sensorplan/grid.hpp"

namespace sensorplan {

struct SensorPose {
  CellIndex cell = 0;
  auto operator<=>(const SensorPose&) const = default;
};

/// Motion constraint: for every cell, the cells a sensor may occupy at the
/// next step. Adjacency lists are sorted and always contain the cell itself.
class ReachabilityGraph {
 public:
  /// All cells within Chebyshev distance `move_radius`.
  static ReachabilityGraph chebyshev(const GridSpec& grid, int move_radius) {
    if (move_radius < 0) throw std::invalid_argument("move_radius must be non-negative");
    ReachabilityGraph g(grid);
    g.move_radius_ = move_radius;
    for (CellIndex c = 0; c < grid.size(); ++c) g.adjacency_[c] = grid.patch(c, move_radius);
    return g;
  }

  /// Each group is a clique: from any member, every member of the group is
  /// reachable. Cells outside all groups can only stay put.
  static ReachabilityGraph cliques(const GridSpec& grid,
                                   const std::vector<std::vector<CellIndex>>& groups) {
    ReachabilityGraph g(grid);
    g.move_radius_ = -1;
    for (CellIndex c = 0; c < grid.size(); ++c) g.adjacency_[c] = {c};
    for (const auto& group : groups) {
      for (auto c : group) {
        if (!grid.contains(c)) throw std::invalid_argument("clique cell outside grid");
        auto& adj = g.adjacency_[c];
        adj.insert(adj.end(), group.begin(), group.end());
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
      }
    }
    return g;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  int move_radius() const noexcept { return move_radius_; }

  const std::vector<CellIndex>& neighbors(CellIndex c) const {
    check(c);
    return adjacency_[c];
  }

  std::vector<SensorPose> reachable_set(SensorPose pose) const {
    std::vector<SensorPose> out;
    for (auto c : neighbors(pose.cell)) out.push_back({c});
    return out;
  }

  bool reachable(SensorPose from, SensorPose to) const {
    const auto& adj = neighbors(from.cell);
    return std::binary_search(adj.begin(), adj.end(), to.cell);
  }

  /// Cells reachable from `start` within `depth` moves (breadth-first),
  /// ascending.
  std::vector<CellIndex> reachable_within(SensorPose start, int depth) const {
    check(start.cell);
    std::vector<char> in(grid_.size(), 0);
    std::vector<CellIndex> frontier{start.cell};
    in[start.cell] = 1;
    for (int d = 0; d < depth; ++d) {
      std::vector<CellIndex> next;
      for (auto c : frontier)
        for (auto n : adjacency_[c])
          if (!in[n]) {
            in[n] = 1;
            next.push_back(n);
          }
      if (next.empty()) break;
      frontier.insert(frontier.end(), next.begin(), next.end());
    }
    std::sort(frontier.begin(), frontier.end());
    return frontier;
  }

  /// Nodes of the search tree of depth `depth` rooted at `start` (root
  /// excluded), i.e. all feasible prefixes of length 1..depth. Saturates at `cap`.
  std::int64_t count_tree_nodes(SensorPose start, int depth, std::int64_t cap) const {
    std::vector<double> ways(grid_.size(), 0.0), next;
    ways[start.cell] = 1.0;
    double total = 0.0;
    for (int d = 0; d < depth; ++d) {
      next.assign(grid_.size(), 0.0);
      for (CellIndex c = 0; c < grid_.size(); ++c)
        if (ways[c] > 0.0)
          for (auto n : adjacency_[c]) next[n] += ways[c];
      ways.swap(next);
      for (double w : ways) total += w;
      if (total > double(cap)) return cap;
    }
    return static_cast<std::int64_t>(total);
  }

 private:
  explicit ReachabilityGraph(const GridSpec& grid) : grid_(grid), adjacency_(grid.size()) {}

  void check(CellIndex c) const {
    if (!grid_.contains(c))
      throw std::invalid_argument("pose cell " + std::to_string(c) + " outside grid");
  }

  GridSpec grid_;
  std::vector<std::vector<CellIndex>> adjacency_;
  int move_radius_ = 0;
};

/// Poses observed simultaneously at one time step, each seeing the cells
/// within Chebyshev radius `footprint`.
struct ObservationSet {
  std::vector<SensorPose> poses;
  int footprint = 0;

  bool empty() const noexcept { return poses.empty(); }

  std::vector<CellIndex> cells(const GridSpec& grid) const {
    std::vector<CellIndex> out;
    for (auto p : poses) {
      auto patch = grid.patch(p.cell, footprint);
      out.insert(out.end(), patch.begin(), patch.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool operator==(const ObservationSet&) const = default;
};

inline ObservationSet merge(const ObservationSet& a, const ObservationSet& b) {
  ObservationSet out = a;
  if (a.empty()) out.footprint = b.footprint;
  out.poses.insert(out.poses.end(), b.poses.begin(), b.poses.end());
  return out;
}

inline ObservationOperator observation_operator(const ObservationSet& obs, const GridSpec& grid,
                                                double noise_var) {
  for (auto p : obs.poses)
    if (!grid.contains(p.cell)) throw std::invalid_argument("pose outside grid");
  return {obs.cells(grid), noise_var};
}

/// Shape of f_e inside the correlation coefficient. `none` disables the
/// coefficient entirely (Gamma = 1), used for ablations.
enum class GammaShape { none, inverse, exp10, sigmoid100 };
enum class RewardMode { logdet_gain, trace_gain };

inline GammaShape parse_gamma_shape(std::string_view s) {
  if (s == "inverse") return GammaShape::inverse;
  if (s == "exp10") return GammaShape::exp10;
  if (s == "sigmoid100") return GammaShape::sigmoid100;
  if (s == "none") return GammaShape::none;
  throw std::invalid_argument("unknown f_e '" + std::string(s) +
                              "' (expected inverse, exp10, sigmoid100 or none)");
}

inline std::string_view to_string(GammaShape s) {
  switch (s) {
    case GammaShape::none: return "none";
    case GammaShape::inverse: return "inverse";
    case GammaShape::exp10: return "exp10";
    case GammaShape::sigmoid100: return "sigmoid100";
  }
  return "?";
}

inline RewardMode parse_reward_mode(std::string_view s) {
  if (s == "logdet_gain") return RewardMode::logdet_gain;
  if (s == "trace_gain") return RewardMode::trace_gain;
  throw std::invalid_argument("unknown reward mode '" + std::string(s) + "'");
}

inline std::string_view to_string(RewardMode m) {
  return m == RewardMode::logdet_gain ? "logdet_gain" : "trace_gain";
}

struct PlanConfig {
  int horizon = 1;
  double gamma = 0.95;
  GammaShape fe = GammaShape::exp10;
  RewardMode reward = RewardMode::logdet_gain;
  double ridge_eps = 1e-6;
  double noise_var = 0.01;  // measurement noise assumed for hypothetical observations
  int footprint = 0;
  std::uint64_t seed = 0;   // forecast noise inside the planner
  std::int64_t node_budget = 20000;

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("planning horizon must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(ridge_eps > 0.0)) throw std::invalid_argument("ridge_eps must be positive");
    if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
    if (footprint < 0) throw std::invalid_argument("footprint must be non-negative");
  }
};

struct PlanSequence {
  std::vector<ObservationSet> steps;
  double score = 0.0;
  std::vector<double> per_step_rewards;
};

/// Instrumentation. `assimilations` counts candidate evaluations that factor
/// an innovation covariance; `conditionings` counts updates on already-fixed
/// observation sets.
struct PlanCounters {
  std::int64_t assimilations = 0;
  std::int64_t conditionings = 0;
  std::int64_t forecasts = 0;
  std::int64_t gamma_evaluations = 0;
  std::int64_t sequences = 0;
};

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::int64_t required, std::int64_t budget)
      : std::runtime_error("full search tree needs " + std::to_string(required) +
                           " nodes but the node budget is " + std::to_string(budget)),
        required_(required) {}
  std::int64_t required() const noexcept { return required_; }

 private:
  std::int64_t required_;
};

}  // namespace sensorplan
