#pragma once

// Sensor scheduling algorithms.
//
// All planners share one forecast convention: the planning-time forecast of
// step k (k = 1..T) is drawn with seed derive_seed(cfg.seed, {planner, k}),
// whatever branch of the search it belongs to. The exhaustive tree, the
// approximated tree and evaluate_sequence therefore see the same model noise
// and their scores are directly comparable.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/filter.hpp"
#include "sensorplan/planner/gamma.hpp"
#include "sensorplan/planner/reward.hpp"
#include "sensorplan/planner/types.hpp"
#include "sensorplan/random.hpp"

namespace sensorplan {

inline std::uint64_t planning_forecast_seed(const PlanConfig& cfg, int step) {
  return derive_seed(cfg.seed, {stream::planner, static_cast<std::uint64_t>(step)});
}

/// `fixed` holds per-step observation sets that are already committed
/// (fixed sensors, or sensors planned earlier). Missing trailing entries
/// count as empty.
using FixedSchedule = std::vector<ObservationSet>;

namespace detail {

inline const ObservationSet* at_step(const FixedSchedule& s, int step) {
  const int k = step - 1;
  if (k < 0 || k >= static_cast<int>(s.size()) || s[k].empty()) return nullptr;
  return &s[k];
}

inline Ensemble condition_on(const Ensemble& prior, const FixedSchedule& fixed, int step,
                             const GridSpec& grid, double noise_var, PlanCounters* counters) {
  const ObservationSet* f = at_step(fixed, step);
  if (f == nullptr) return prior;
  if (counters) ++counters->conditionings;
  return posterior_spread(prior, observation_operator(*f, grid, noise_var));
}

inline ObservationSet single(CellIndex c, int footprint) { return {{SensorPose{c}}, footprint}; }

}  // namespace detail

/// Approximated forward search (single sensor, optionally conditioned on
/// committed observation sets). The prior is forecast T steps without any
/// assimilation; each step's candidates are scored once against that
/// forecast and normalized by the step maximum; every feasible sequence is
/// then scored with correlation-discounted rewards.
class FastPlanner {
 public:
  FastPlanner(const Ensemble& ens, const ReachabilityGraph& graph, const Dynamics& predictor,
              const ForcingSeries& forcing, const PlanConfig& cfg,
              PlanCounters* counters = nullptr)
      : graph_(graph), cfg_(cfg), counters_(counters) {
    cfg_.validate();
    predictor.check_dim(ens.dim());
    priors_.reserve(cfg_.horizon + 1);
    priors_.push_back(ens);
    for (int k = 1; k <= cfg_.horizon; ++k) {
      priors_.push_back(forecast(priors_.back(), predictor, forcing, planning_forecast_seed(cfg_, k)));
      if (counters_) ++counters_->forecasts;
    }
    corr_.emplace(priors_, graph_.grid());
  }

  const std::vector<Ensemble>& forecasts() const noexcept { return priors_; }
  CorrelationCache& correlations() noexcept { return *corr_; }

  /// `gamma_context` adds other sensors' committed observation sets to the
  /// correlation prefix of each earlier step.
  PlanSequence plan(SensorPose start, const FixedSchedule& fixed = {},
                    const FixedSchedule& gamma_context = {}) {
    const GridSpec& grid = graph_.grid();
    const int horizon = cfg_.horizon;
    const int d = grid.size();
    raw_.assign(horizon + 1, std::vector<double>(d, 0.0));
    scaled_.assign(horizon + 1, std::vector<double>(d, 0.0));
    cells_.assign(d, {});

    for (int s = 1; s <= horizon; ++s) {
      const Ensemble cond = detail::condition_on(priors_[s], fixed, s, grid, cfg_.noise_var, counters_);
      const auto candidates = graph_.reachable_within(start, s);
      double best = -std::numeric_limits<double>::infinity();
      for (auto c : candidates) {
        if (cells_[c].empty()) cells_[c] = detail::single(c, cfg_.footprint).cells(grid);
        const double r = reward(cond, {cells_[c], cfg_.noise_var}, cfg_);
        if (counters_) ++counters_->assimilations;
        raw_[s][c] = r;
        best = std::max(best, r);
      }
      for (auto c : candidates) scaled_[s][c] = best > 0.0 ? raw_[s][c] / best : 1.0;
    }

    context_cells_.assign(horizon + 1, {});
    for (int s = 1; s <= horizon; ++s)
      if (const ObservationSet* o = detail::at_step(gamma_context, s))
        context_cells_[s] = o->cells(grid);

    best_score_ = -std::numeric_limits<double>::infinity();
    best_path_.clear();
    path_.clear();
    prefix_cells_.assign(horizon + 1, {});
    search(1, start.cell, 0.0);
    if (best_path_.empty()) throw std::logic_error("no feasible observation sequence");

    PlanSequence out;
    out.score = best_score_;
    for (int s = 1; s <= horizon; ++s) {
      const CellIndex c = best_path_[s - 1];
      out.steps.push_back(detail::single(c, cfg_.footprint));
      out.per_step_rewards.push_back(raw_[s][c]);
    }
    return out;
  }

  /// Normalized reward of `cell` at step `s` from the last plan() call.
  double normalized_reward(int s, CellIndex cell) const { return scaled_.at(s).at(cell); }

  /// Correlation coefficient of `candidate` at step `path.size() + 1` given
  /// the earlier steps of `path` (plus the gamma context of the last plan()).
  double gamma_for(const std::vector<CellIndex>& path, CellIndex candidate) {
    std::vector<double> corr;
    const int s = static_cast<int>(path.size()) + 1;
    if (cells_.empty()) cells_.assign(graph_.grid().size(), {});
    if (cells_[candidate].empty())
      cells_[candidate] = detail::single(candidate, cfg_.footprint).cells(graph_.grid());
    for (int i = 1; i < s; ++i) {
      auto pre = detail::single(path[i - 1], cfg_.footprint).cells(graph_.grid());
      if (i < static_cast<int>(context_cells_.size()))
        pre.insert(pre.end(), context_cells_[i].begin(), context_cells_[i].end());
      corr.push_back(corr_->sets(i, pre, s, cells_[candidate]));
    }
    return gamma_coef(corr, cfg_.fe);
  }

 private:
  void search(int s, CellIndex prev, double acc) {
    const double discount = std::pow(cfg_.gamma, s - 1);
    for (auto c : graph_.neighbors(prev)) {
      double gam = 1.0;
      if (cfg_.fe != GammaShape::none && s > 1) {
        corr_buf_.clear();
        for (int i = 1; i < s; ++i) corr_buf_.push_back(corr_->sets(i, prefix_cells_[i], s, cells_[c]));
        gam = gamma_coef(corr_buf_, cfg_.fe);
        if (counters_) ++counters_->gamma_evaluations;
      }
      const double value = acc + discount * gam * scaled_[s][c];
      path_.push_back(c);
      if (s == cfg_.horizon) {
        if (counters_) ++counters_->sequences;
        if (best_path_.empty() || value > best_score_) {
          best_score_ = value;
          best_path_ = path_;
        }
      } else {
        prefix_cells_[s] = cells_[c];
        prefix_cells_[s].insert(prefix_cells_[s].end(), context_cells_[s].begin(),
                                context_cells_[s].end());
        search(s + 1, c, value);
      }
      path_.pop_back();
    }
  }

  const ReachabilityGraph& graph_;
  PlanConfig cfg_;
  PlanCounters* counters_;
  std::vector<Ensemble> priors_;
  std::optional<CorrelationCache> corr_;

  std::vector<std::vector<double>> raw_, scaled_;
  std::vector<std::vector<CellIndex>> cells_, context_cells_, prefix_cells_;
  std::vector<double> corr_buf_;
  std::vector<CellIndex> path_, best_path_;
  double best_score_ = 0.0;
};

inline PlanSequence plan_fast_single(const Ensemble& ens, const ReachabilityGraph& graph,
                                     SensorPose start, const Dynamics& predictor,
                                     const ForcingSeries& forcing, const PlanConfig& cfg,
                                     const FixedSchedule& fixed = {},
                                     PlanCounters* counters = nullptr) {
  FastPlanner planner(ens, graph, predictor, forcing, cfg, counters);
  return planner.plan(start, fixed);
}

inline ObservationSet plan_myopic(const Ensemble& ens, const ReachabilityGraph& graph,
                                  SensorPose pose, const Dynamics& predictor,
                                  const ForcingSeries& forcing, PlanConfig cfg,
                                  const FixedSchedule& fixed = {},
                                  PlanCounters* counters = nullptr) {
  cfg.horizon = 1;
  return plan_fast_single(ens, graph, pose, predictor, forcing, cfg, fixed, counters).steps.front();
}

inline ObservationSet plan_random(const ReachabilityGraph& graph, SensorPose pose,
                                  std::uint64_t seed, int footprint = 0) {
  const auto& adj = graph.neighbors(pose.cell);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, adj.size() - 1);
  return detail::single(adj[pick(rng)], footprint);
}

/// Exhaustive forward search tree: every node forecasts its parent's
/// hypothetical posterior and assimilates its expected observation.
class FullTreePlanner {
 public:
  FullTreePlanner(const Ensemble& ens, const ReachabilityGraph& graph, const Dynamics& predictor,
                  const ForcingSeries& forcing, const PlanConfig& cfg,
                  PlanCounters* counters = nullptr)
      : ens_(ens), graph_(graph), predictor_(predictor), forcing_(forcing), cfg_(cfg),
        counters_(counters) {
    cfg_.validate();
  }

  PlanSequence plan(SensorPose start, const FixedSchedule& fixed = {}) {
    constexpr std::int64_t kCap = std::numeric_limits<std::int64_t>::max() / 4;
    const std::int64_t nodes = graph_.count_tree_nodes(start, cfg_.horizon, kCap);
    if (nodes > cfg_.node_budget) throw BudgetExceeded(nodes, cfg_.node_budget);
    fixed_ = &fixed;
    best_score_ = -std::numeric_limits<double>::infinity();
    best_path_.clear();
    path_.clear();
    gains_.clear();
    expand(ens_, 1, start.cell, 0.0);

    PlanSequence out;
    out.score = best_score_;
    for (int s = 1; s <= cfg_.horizon; ++s)
      out.steps.push_back(detail::single(best_path_[s - 1], cfg_.footprint));
    out.per_step_rewards = best_gains_;
    return out;
  }

 private:
  void expand(const Ensemble& parent, int s, CellIndex prev, double acc) {
    const GridSpec& grid = graph_.grid();
    const Ensemble prior = forecast(parent, predictor_, forcing_, planning_forecast_seed(cfg_, s));
    if (counters_) ++counters_->forecasts;
    const Ensemble cond = detail::condition_on(prior, *fixed_, s, grid, cfg_.noise_var, counters_);
    const double discount = std::pow(cfg_.gamma, s - 1);
    for (auto c : graph_.neighbors(prev)) {
      const ObservationOperator op = observation_operator(detail::single(c, cfg_.footprint), grid,
                                                          cfg_.noise_var);
      const double gain = reward(cond, op, cfg_);
      if (counters_) ++counters_->assimilations;
      const double value = acc + discount * gain;
      path_.push_back(c);
      gains_.push_back(gain);
      if (s == cfg_.horizon) {
        if (counters_) ++counters_->sequences;
        if (best_path_.empty() || value > best_score_) {
          best_score_ = value;
          best_path_ = path_;
          best_gains_ = gains_;
        }
      } else {
        expand(posterior_spread(cond, op), s + 1, c, value);
      }
      gains_.pop_back();
      path_.pop_back();
    }
  }

  const Ensemble& ens_;
  const ReachabilityGraph& graph_;
  const Dynamics& predictor_;
  const ForcingSeries& forcing_;
  PlanConfig cfg_;
  PlanCounters* counters_;
  const FixedSchedule* fixed_ = nullptr;
  std::vector<CellIndex> path_, best_path_;
  std::vector<double> gains_, best_gains_;
  double best_score_ = 0.0;
};

inline PlanSequence plan_full_tree(const Ensemble& ens, const ReachabilityGraph& graph,
                                   SensorPose start, const Dynamics& predictor,
                                   const ForcingSeries& forcing, const PlanConfig& cfg,
                                   const FixedSchedule& fixed = {},
                                   PlanCounters* counters = nullptr) {
  FullTreePlanner planner(ens, graph, predictor, forcing, cfg, counters);
  return planner.plan(start, fixed);
}

struct MultiPlan {
  std::vector<ObservationSet> steps;       // per step, poses in sensor order
  std::vector<PlanSequence> per_sensor;
};

/// Coordinate descent over sensors in input order: each sensor is planned
/// with the approximated search, conditioned on everything committed so far.
inline MultiPlan plan_multi(const Ensemble& ens, const ReachabilityGraph& graph,
                            const std::vector<SensorPose>& poses, const Dynamics& predictor,
                            const ForcingSeries& forcing, const PlanConfig& cfg,
                            const FixedSchedule& fixed = {}, PlanCounters* counters = nullptr) {
  if (poses.empty()) throw std::invalid_argument("plan_multi needs at least one sensor");
  FastPlanner planner(ens, graph, predictor, forcing, cfg, counters);
  MultiPlan out;
  out.steps.assign(cfg.horizon, ObservationSet{{}, cfg.footprint});
  for (auto pose : poses) {
    FixedSchedule committed(cfg.horizon);
    for (int s = 1; s <= cfg.horizon; ++s) {
      const ObservationSet* f = detail::at_step(fixed, s);
      committed[s - 1] = f ? merge(*f, out.steps[s - 1]) : out.steps[s - 1];
    }
    PlanSequence seq = planner.plan(pose, committed, out.steps);
    for (int s = 0; s < cfg.horizon; ++s)
      out.steps[s].poses.push_back(seq.steps[s].poses.front());
    out.per_sensor.push_back(std::move(seq));
  }
  return out;
}

/// True discounted information gain of a sequence: roll the ensemble forward,
/// assimilating each step's expected observation. `starts` holds one pose per
/// sensor; each step must list one pose per sensor, reachable from the
/// sensor's previous pose.
inline double evaluate_sequence(const Ensemble& ens, const ReachabilityGraph& graph,
                                const std::vector<SensorPose>& starts,
                                const std::vector<ObservationSet>& steps,
                                const Dynamics& predictor, const ForcingSeries& forcing,
                                const PlanConfig& cfg, const FixedSchedule& fixed = {}) {
  std::vector<SensorPose> prev = starts;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s].poses.size() != prev.size())
      throw std::invalid_argument("step " + std::to_string(s + 1) + " has " +
                                  std::to_string(steps[s].poses.size()) + " poses, expected " +
                                  std::to_string(prev.size()));
    for (std::size_t k = 0; k < prev.size(); ++k) {
      if (!graph.reachable(prev[k], steps[s].poses[k]))
        throw std::invalid_argument("infeasible sequence: sensor " + std::to_string(k) +
                                    " cannot reach cell " +
                                    std::to_string(steps[s].poses[k].cell) + " at step " +
                                    std::to_string(s + 1));
      prev[k] = steps[s].poses[k];
    }
  }

  const GridSpec& grid = graph.grid();
  Ensemble current = ens;
  double total = 0.0;
  for (std::size_t s = 1; s <= steps.size(); ++s) {
    const int step = static_cast<int>(s);
    const Ensemble prior = forecast(current, predictor, forcing, planning_forecast_seed(cfg, step));
    const Ensemble cond = detail::condition_on(prior, fixed, step, grid, cfg.noise_var, nullptr);
    const ObservationOperator op = observation_operator(steps[s - 1], grid, cfg.noise_var);
    total += std::pow(cfg.gamma, step - 1) * reward(cond, op, cfg);
    current = posterior_spread(cond, op);
  }
  return total;
}

inline double evaluate_sequence(const Ensemble& ens, const ReachabilityGraph& graph,
                                SensorPose start, const PlanSequence& seq,
                                const Dynamics& predictor, const ForcingSeries& forcing,
                                const PlanConfig& cfg, const FixedSchedule& fixed = {}) {
  return evaluate_sequence(ens, graph, std::vector<SensorPose>{start}, seq.steps, predictor,
                           forcing, cfg, fixed);
}

enum class PlannerKind { fast, full_tree };

/// Assimilation count law: the full tree assimilates once per node,
/// sum_{t=1..T} D_obs^t; the approximated tree once per candidate per step,
/// D_obs * T. Saturates at INT64_MAX.
inline std::int64_t count_assimilations(PlannerKind kind, std::int64_t d_obs, int horizon) {
  if (d_obs < 1 || horizon < 1) throw std::invalid_argument("D_obs and T must be >= 1");
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  if (kind == PlannerKind::fast) {
    if (d_obs > kMax / horizon) return kMax;
    return d_obs * horizon;
  }
  std::int64_t total = 0, level = 1;
  for (int t = 1; t <= horizon; ++t) {
    if (level > kMax / d_obs) return kMax;
    level *= d_obs;
    if (total > kMax - level) return kMax;
    total += level;
  }
  return total;
}

}  // namespace sensorplan
