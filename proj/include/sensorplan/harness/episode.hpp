#pragma once

// One closed-loop episode: predict, plan, move, measure, assimilate.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/filter.hpp"
#include "sensorplan/harness/config.hpp"
#include "sensorplan/planner/planners.hpp"
#include "sensorplan/planner/reward.hpp"
#include "sensorplan/random.hpp"

namespace sensorplan {

enum class Strategy { fast, full_tree, myopic, random, fixed_only, fixed_plus_mobile, multi_fast };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::fast: return "fast";
    case Strategy::full_tree: return "full_tree";
    case Strategy::myopic: return "myopic";
    case Strategy::random: return "random";
    case Strategy::fixed_only: return "fixed_only";
    case Strategy::fixed_plus_mobile: return "fixed_plus_mobile";
    case Strategy::multi_fast: return "multi_fast";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto k : {Strategy::fast, Strategy::full_tree, Strategy::myopic, Strategy::random,
                 Strategy::fixed_only, Strategy::fixed_plus_mobile, Strategy::multi_fast})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

struct MetricsRow {
  int t = 0;
  double rmse = 0.0;
  double uncertainty = 0.0;  // trace of the ensemble covariance
  double reward = 0.0;       // information gain of the executed observation
  std::int64_t assim_calls = 0;
  double plan_ms = 0.0;
};

struct RunRecord {
  std::string config_hash;
  std::string strategy;
  std::uint64_t seed = 0;
  GridSpec grid;
  std::vector<MetricsRow> rows;
  std::vector<std::vector<CellIndex>> observed;  // cells measured at rows[t], t >= 1
  // Filled only when EpisodeOptions::keep_fields is set; indexed like rows.
  std::vector<Eigen::VectorXd> truth_fields;
  std::vector<Eigen::VectorXd> mean_fields;
  // Truth-access audit.
  int planning_truth_reads = 0;
  int measurement_calls = 0;
};

struct EpisodeOptions {
  bool keep_fields = false;
  bool record_timing = false;  // off keeps outputs byte-for-byte reproducible
};

/// Seeds of one Monte-Carlo case: the forcing seed fixes the world (rain and
/// truth noise), the init seed fixes the initial guess and every filter and
/// planner draw.
struct CaseSeeds {
  std::uint64_t forcing = 0;
  std::uint64_t init = 0;
};

/// Set while a planner runs; truth reads under it are counted as violations.
inline thread_local bool g_planning_active = false;

class PlanningScope {
 public:
  PlanningScope() : previous_(g_planning_active) { g_planning_active = true; }
  ~PlanningScope() { g_planning_active = previous_; }
  PlanningScope(const PlanningScope&) = delete;
  PlanningScope& operator=(const PlanningScope&) = delete;

 private:
  bool previous_;
};

/// Owns the true field. Estimators only see it through noisy measurements;
/// metric accessors exist for scoring and are audited.
class World {
 public:
  World(Dynamics truth, ForcingSeries forcing, FieldState initial, std::uint64_t seed)
      : truth_(std::move(truth)), forcing_(std::move(forcing)), state_(std::move(initial)),
        seed_(seed) {}

  void advance() {
    state_ = step_truth(truth_, state_, forcing_,
                        derive_seed(seed_, {stream::truth_noise, std::uint64_t(state_.t)}));
  }

  /// Truth at the observed cells plus N(0, r) noise. The noise of a cell
  /// depends only on (seed, time, cell), so strategies observing the same
  /// cell at the same time see the same value.
  Measurement measure(const ObservationOperator& op, std::uint64_t seed) {
    audit();
    ++measurements_;
    Measurement m;
    m.t = state_.t;
    m.z.resize(op.size());
    const double sd = std::sqrt(op.noise_var);
    for (int k = 0; k < op.size(); ++k) {
      Rng rng(derive_seed(seed, {std::uint64_t(state_.t), std::uint64_t(op.cells[k])}));
      std::normal_distribution<double> nd(0.0, sd);
      m.z[k] = state_.values[op.cells[k]] + nd(rng);
    }
    return m;
  }

  double rmse(const Eigen::VectorXd& estimate) {
    audit();
    return std::sqrt((estimate - state_.values).squaredNorm() / double(estimate.size()));
  }

  const Eigen::VectorXd& values_for_metrics() {
    audit();
    return state_.values;
  }

  int time() const noexcept { return state_.t; }
  int measurements() const noexcept { return measurements_; }
  int planning_reads() const noexcept { return planning_reads_; }

 private:
  void audit() {
    if (g_planning_active) ++planning_reads_;
  }

  Dynamics truth_;
  ForcingSeries forcing_;
  FieldState state_;
  std::uint64_t seed_;
  int measurements_ = 0;
  int planning_reads_ = 0;
};

/// Everything an episode starts from: the truth after spin-up, the rain the
/// predictor believes in, and the initial ensemble around a corrupted guess.
struct EpisodeSetup {
  ForcingSeries truth_forcing;
  ForcingSeries rain_forecast;
  FieldState truth_initial;
  Ensemble ensemble;
};

inline EpisodeSetup prepare_episode(const ScenarioConfig& cfg, CaseSeeds seeds) {
  cfg.validate();
  const Dynamics truth(cfg.grid, cfg.truth);
  const int horizon = cfg.spinup + cfg.episode_length + cfg.plan.horizon;
  EpisodeSetup s;
  s.truth_forcing = generate_forcing(cfg.grid, cfg.spinup + cfg.episode_length, cfg.n_events,
                                     derive_seed(seeds.forcing, {stream::forcing}),
                                     cfg.max_intensity);
  s.truth_forcing.horizon = horizon;
  s.rain_forecast = perturb_forcing(s.truth_forcing, cfg.rain_forecast_error,
                                    derive_seed(seeds.forcing, {stream::rain_forecast}));
  FieldState x{Eigen::VectorXd::Zero(cfg.grid.size()), 0};
  for (int t = 0; t < cfg.spinup; ++t)
    x = step_truth(truth, x, s.truth_forcing,
                   derive_seed(seeds.forcing, {stream::truth_noise, std::uint64_t(t)}));
  s.truth_initial = x;

  FieldState guess = x;
  Rng rng(derive_seed(seeds.init, {stream::initial_guess}));
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < guess.values.size(); ++i)
    guess.values[i] = std::max(0.0, guess.values[i] + cfg.guess_std * nd(rng));
  s.ensemble = spawn_initial_ensemble(guess, cfg.spread_std, cfg.ensemble_size,
                                      derive_seed(seeds.init, {stream::ensemble_init}),
                                      cfg.predictor.clamp_nonnegative);
  return s;
}

inline double ensemble_uncertainty(const Ensemble& ens) { return ensemble_variance(ens).sum(); }

/// Runs one episode. The world continues from the truth after spin-up using
/// the forcing seed, so every strategy faces the same world for given seeds.
inline RunRecord run_episode(const ScenarioConfig& cfg, Strategy strategy, CaseSeeds seeds,
                             const EpisodeOptions& opts = {}) {
  EpisodeSetup setup = prepare_episode(cfg, seeds);
  const Dynamics predictor(cfg.grid, cfg.predictor);
  World world(Dynamics(cfg.grid, cfg.truth), setup.truth_forcing, setup.truth_initial,
              derive_seed(seeds.forcing, {stream::truth_noise, 1}));
  Ensemble ens = std::move(setup.ensemble);
  const ForcingSeries& rain = setup.rain_forecast;
  const ReachabilityGraph graph = ReachabilityGraph::chebyshev(cfg.grid, cfg.move_radius);

  const bool uses_fixed =
      strategy == Strategy::fixed_only || strategy == Strategy::fixed_plus_mobile;
  ObservationSet fixed_set{{}, cfg.footprint};
  if (uses_fixed)
    for (auto c : cfg.fixed_cells) fixed_set.poses.push_back({c});

  std::vector<SensorPose> poses;
  if (strategy != Strategy::fixed_only) {
    const auto starts = cfg.start_cells();
    const int n_mobile = strategy == Strategy::multi_fast ? cfg.sensor_count
                                                          : std::min<int>(1, starts.size());
    for (int k = 0; k < n_mobile; ++k) poses.push_back({starts.at(k)});
  }

  RunRecord rec;
  rec.config_hash = config_hash(cfg);
  rec.strategy = std::string(to_string(strategy));
  rec.seed = seeds.init;
  rec.grid = cfg.grid;

  auto log_row = [&](int t, double reward_value, std::int64_t calls, double ms) {
    const Eigen::VectorXd mean = ens.mean();
    MetricsRow row;
    row.t = t;
    row.rmse = world.rmse(mean);
    row.uncertainty = ensemble_uncertainty(ens);
    row.reward = reward_value;
    row.assim_calls = calls;
    row.plan_ms = ms;
    rec.rows.push_back(row);
    if (opts.keep_fields) {
      rec.truth_fields.push_back(world.values_for_metrics());
      rec.mean_fields.push_back(mean);
    }
  };
  log_row(0, 0.0, 0, 0.0);

  for (int k = 0; k < cfg.episode_length; ++k) {
    PlanConfig pc = cfg.plan;
    pc.seed = derive_seed(seeds.init, {stream::planner, std::uint64_t(k)});
    FixedSchedule fixed_schedule;
    if (!fixed_set.empty()) fixed_schedule.assign(pc.horizon, fixed_set);

    PlanCounters counters;
    const auto t0 = std::chrono::steady_clock::now();
    {
      PlanningScope scope;
      switch (strategy) {
        case Strategy::fast:
        case Strategy::fixed_plus_mobile: {
          if (poses.empty()) break;
          auto seq = plan_fast_single(ens, graph, poses[0], predictor, rain, pc, fixed_schedule,
                                      &counters);
          poses[0] = seq.steps.front().poses.front();
          break;
        }
        case Strategy::full_tree: {
          if (poses.empty()) break;
          auto seq = plan_full_tree(ens, graph, poses[0], predictor, rain, pc, {}, &counters);
          poses[0] = seq.steps.front().poses.front();
          break;
        }
        case Strategy::myopic:
          if (!poses.empty())
            poses[0] = plan_myopic(ens, graph, poses[0], predictor, rain, pc, {}, &counters)
                           .poses.front();
          break;
        case Strategy::random:
          if (!poses.empty())
            poses[0] = plan_random(graph, poses[0],
                                   derive_seed(seeds.init, {stream::random_policy, std::uint64_t(k)}))
                           .poses.front();
          break;
        case Strategy::multi_fast: {
          if (poses.empty()) break;
          auto plan = plan_multi(ens, graph, poses, predictor, rain, pc, {}, &counters);
          poses = plan.steps.front().poses;
          break;
        }
        case Strategy::fixed_only: break;
      }
    }
    const double ms =
        opts.record_timing
            ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
            : 0.0;

    ObservationSet executed = fixed_set;
    for (auto p : poses) executed.poses.push_back(p);

    world.advance();
    ens = forecast(ens, predictor, rain, derive_seed(seeds.init, {stream::forecast, std::uint64_t(k)}));
    const ObservationOperator op = observation_operator(executed, cfg.grid, cfg.noise_var);
    const double gained = reward(ens, op, pc);
    if (!op.empty()) {
      const Measurement z = world.measure(op, derive_seed(seeds.forcing, {stream::measurement}));
      ens = enkf_update(ens, op, z, derive_seed(seeds.init, {stream::enkf, std::uint64_t(k)}),
                        cfg.filter);
    }
    rec.observed.push_back(op.cells);
    log_row(k + 1, gained, counters.assimilations, ms);
  }
  rec.planning_truth_reads = world.planning_reads();
  rec.measurement_calls = world.measurements();
  return rec;
}

inline RunRecord run_episode(const ScenarioConfig& cfg, Strategy strategy, std::uint64_t seed,
                             const EpisodeOptions& opts = {}) {
  return run_episode(cfg, strategy, CaseSeeds{seed, seed}, opts);
}

}  // namespace sensorplan
