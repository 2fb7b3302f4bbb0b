#pragma once

// Wall time and assimilation counts of the exhaustive vs approximated search.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/harness/experiment.hpp"
#include "sensorplan/planner/planners.hpp"

namespace sensorplan {

struct BenchmarkCase {
  int state_dim = 100;  // D
  int candidates = 10;  // D_obs
  int horizon = 2;      // T
};

struct BenchmarkRow {
  BenchmarkCase spec;
  GridSpec grid;
  std::int64_t expected_full = 0, expected_fast = 0;
  std::int64_t measured_full = -1, measured_fast = -1;  // -1: not run
  double full_ms = -1.0, fast_ms = -1.0;
  bool full_run = false;
  bool counts_match = false;
};

/// Near-square grid with at least `d` cells.
inline GridSpec benchmark_grid(int d) {
  const int rows = std::max(2, static_cast<int>(std::floor(std::sqrt(double(d)))));
  const int cols = std::max(2, (d + rows - 1) / rows);
  return GridSpec(rows, cols);
}

/// `count` candidate cells spread evenly over the grid.
inline std::vector<CellIndex> spread_cells(const GridSpec& grid, int count) {
  std::vector<CellIndex> out;
  for (int k = 0; k < count; ++k)
    out.push_back(static_cast<CellIndex>((std::int64_t(k) * grid.size()) / count));
  return out;
}

struct BenchmarkSetup {
  Dynamics predictor;
  ForcingSeries forcing;
  Ensemble ensemble;
  ReachabilityGraph graph;
  SensorPose start;
};

/// Benchmark instance: a random field, an ensemble with spatially mixed
/// spread, and a clique of candidate cells (every candidate reachable from
/// every other, so each tree level multiplies by exactly D_obs).
inline BenchmarkSetup make_benchmark_setup(const BenchmarkCase& bc, int members,
                                           std::uint64_t seed) {
  const GridSpec grid = benchmark_grid(bc.state_dim);
  if (bc.candidates < 1 || bc.candidates > grid.size())
    throw std::invalid_argument("candidate count must lie in [1, D]");
  DynamicsParams p;
  p.diffusion = 0.1;
  p.advection_x = 0.1;
  p.decay = 0.01;
  p.process_noise_std = 0.01;
  p.clamp_nonnegative = false;
  Dynamics predictor(grid, p);
  ForcingSeries forcing = generate_forcing(grid, bc.horizon + 4, 2, derive_seed(seed, {stream::forcing}));
  FieldState mean{Eigen::VectorXd::Constant(grid.size(), 1.0), 0};
  Ensemble ens = spawn_initial_ensemble(mean, 0.3, members, derive_seed(seed, {stream::ensemble_init}), false);
  for (int k = 0; k < 3; ++k) ens = forecast(ens, predictor, forcing, derive_seed(seed, {stream::forecast, std::uint64_t(k)}));
  const auto cands = spread_cells(grid, bc.candidates);
  ReachabilityGraph graph = ReachabilityGraph::cliques(grid, {cands});
  return {std::move(predictor), std::move(forcing), std::move(ens), std::move(graph), {cands.front()}};
}

/// Runs the approximated planner on every case and the full tree wherever
/// its node count fits `node_budget`; oversized cases report counts only.
inline std::vector<BenchmarkRow> benchmark_complexity(const std::vector<BenchmarkCase>& cases,
                                                      int members, std::uint64_t seed = 1,
                                                      std::int64_t node_budget = 20000) {
  std::vector<BenchmarkRow> rows;
  for (const auto& bc : cases) {
    BenchmarkRow row;
    row.spec = bc;
    row.grid = benchmark_grid(bc.state_dim);
    row.expected_full = count_assimilations(PlannerKind::full_tree, bc.candidates, bc.horizon);
    row.expected_fast = count_assimilations(PlannerKind::fast, bc.candidates, bc.horizon);
    const BenchmarkSetup s = make_benchmark_setup(bc, members, seed);
    PlanConfig cfg;
    cfg.horizon = bc.horizon;
    cfg.seed = derive_seed(seed, {stream::planner});
    cfg.node_budget = node_budget;

    PlanCounters fast;
    auto t0 = std::chrono::steady_clock::now();
    plan_fast_single(s.ensemble, s.graph, s.start, s.predictor, s.forcing, cfg, {}, &fast);
    row.fast_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.measured_fast = fast.assimilations;

    if (row.expected_full <= node_budget) {
      PlanCounters full;
      t0 = std::chrono::steady_clock::now();
      plan_full_tree(s.ensemble, s.graph, s.start, s.predictor, s.forcing, cfg, {}, &full);
      row.full_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      row.measured_full = full.assimilations;
      row.full_run = true;
    }
    row.counts_match = row.measured_fast == row.expected_fast &&
                       (!row.full_run || row.measured_full == row.expected_full);
    rows.push_back(row);
  }
  return rows;
}

inline void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows) {
  os << "T,D,D_obs,full_calls,fast_calls,expected_full,expected_fast,full_ms,fast_ms,counts_match\n";
  for (const auto& r : rows) {
    os << r.spec.horizon << ',' << r.grid.size() << ',' << r.spec.candidates << ',';
    if (r.full_run) os << r.measured_full;
    os << ',' << r.measured_fast << ',' << r.expected_full << ',' << r.expected_fast << ',';
    if (r.full_run) os << detail::fmt(r.full_ms);
    os << ',' << detail::fmt(r.fast_ms) << ',' << (r.counts_match ? "true" : "false") << '\n';
  }
}

}  // namespace sensorplan
