#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sensorplan/sensorplan.hpp"

namespace fs = std::filesystem;
using namespace sensorplan;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<std::string> fe;
  std::optional<int> sensors;
  std::string fixed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "scenario file (INI)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--horizon", f.horizon, "planning horizon T")->check(CLI::PositiveNumber);
  cmd->add_option("--fe", f.fe, "correlation weighting")
      ->check(CLI::IsMember({"none", "inverse", "exp10", "sigmoid100"}));
  cmd->add_option("--sensors", f.sensors, "number of mobile sensors")->check(CLI::NonNegativeNumber);
  cmd->add_option("--fixed", f.fixed, "fixed-sensor placement file (one cell per line)");
  cmd->add_option("--out", f.out, "output directory");
}

ScenarioConfig resolve(const CommonFlags& f) {
  ScenarioConfig cfg = f.config.empty() ? ScenarioConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.horizon) cfg.plan.horizon = *f.horizon;
  if (f.fe) cfg.plan.fe = parse_gamma_shape(*f.fe);
  if (f.sensors) {
    cfg.sensor_count = *f.sensors;
    if (static_cast<int>(cfg.starts.size()) < cfg.sensor_count) cfg.starts.clear();
  }
  if (!f.fixed.empty()) cfg.fixed_cells = read_placement_file(f.fixed);
  cfg.validate();
  return cfg;
}

std::vector<int> parse_times(const std::string& text, int last) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "last") out.push_back(last);
    else if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) {
    std::stringstream ss(n);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(parse_strategy(item));
  }
  return out;
}

void print_sequence(std::ostream& os, const PlanSequence& seq, const GridSpec& grid) {
  for (std::size_t s = 0; s < seq.steps.size(); ++s) {
    os << "step " << s + 1 << ":";
    for (auto p : seq.steps[s].poses)
      os << " cell " << p.cell << " (row " << grid.row(p.cell) << ", col " << grid.col(p.cell) << ")";
    if (s < seq.per_step_rewards.size()) os << " reward " << seq.per_step_rewards[s];
    os << '\n';
  }
  os << "score " << seq.score << '\n';
}

int run_simulate(const CommonFlags& f, const std::string& strategy, const std::string& times) {
  const ScenarioConfig cfg = resolve(f);
  EpisodeOptions opts;
  opts.keep_fields = true;
  const Strategy s = parse_strategy(strategy);
  const RunRecord rec = run_episode(cfg, s, CaseSeeds{cfg.seed, cfg.seed}, opts);
  const fs::path out = f.out.empty() ? fs::path("simulate_out") : fs::path(f.out);
  auto csv = detail::open_for_write(out / (strategy + ".csv"));
  write_run_csv(csv, rec);
  const auto written = export_snapshots(rec, parse_times(times, cfg.episode_length), out);
  std::cout << "strategy " << strategy << ", config " << rec.config_hash << ", final rmse "
            << rec.rows.back().rmse << " (initial " << rec.rows.front().rmse << ")\n"
            << "wrote " << written.size() + 1 << " files to " << out.string() << '\n';
  return 0;
}

int run_plan(const CommonFlags& f, const std::string& strategy) {
  const ScenarioConfig cfg = resolve(f);
  const EpisodeSetup setup = prepare_episode(cfg, CaseSeeds{cfg.seed, cfg.seed});
  const Dynamics predictor(cfg.grid, cfg.predictor);
  const auto graph = ReachabilityGraph::chebyshev(cfg.grid, cfg.move_radius);
  PlanConfig pc = cfg.plan;
  pc.seed = derive_seed(cfg.seed, {stream::planner});
  FixedSchedule fixed;
  if (!cfg.fixed_cells.empty()) {
    ObservationSet fs{{}, cfg.footprint};
    for (auto c : cfg.fixed_cells) fs.poses.push_back({c});
    fixed.assign(pc.horizon, fs);
  }
  const auto starts = cfg.start_cells();
  if (starts.empty()) throw std::invalid_argument("plan needs at least one mobile sensor");
  PlanCounters counters;
  const Strategy s = parse_strategy(strategy);
  PlanSequence seq;
  if (s == Strategy::full_tree) {
    seq = plan_full_tree(setup.ensemble, graph, {starts[0]}, predictor, setup.rain_forecast, pc, fixed, &counters);
  } else if (s == Strategy::multi_fast) {
    std::vector<SensorPose> poses;
    for (auto c : starts) poses.push_back({c});
    const MultiPlan mp = plan_multi(setup.ensemble, graph, poses, predictor, setup.rain_forecast, pc, fixed, &counters);
    seq.steps = mp.steps;
    for (const auto& p : mp.per_sensor) seq.score += p.score;
  } else if (s == Strategy::myopic) {
    pc.horizon = 1;
    seq = plan_fast_single(setup.ensemble, graph, {starts[0]}, predictor, setup.rain_forecast, pc, fixed, &counters);
  } else if (s == Strategy::fast || s == Strategy::fixed_plus_mobile) {
    seq = plan_fast_single(setup.ensemble, graph, {starts[0]}, predictor, setup.rain_forecast, pc, fixed, &counters);
  } else {
    throw std::invalid_argument("plan supports fast, full_tree, myopic and multi_fast");
  }
  std::cout << "start cell " << starts[0] << ", horizon " << pc.horizon << ", f_e "
            << to_string(pc.fe) << '\n';
  print_sequence(std::cout, seq, cfg.grid);
  std::cout << "assimilations " << counters.assimilations << '\n';
  return 0;
}

int run_experiment(const CommonFlags& f, const std::vector<std::string>& names,
                   std::optional<int> forcings, std::optional<int> inits) {
  const ScenarioConfig cfg = resolve(f);
  const auto strategies =
      parse_strategies(names.empty() ? std::vector<std::string>{"fast,myopic,random,fixed_only"} : names);
  MonteCarloOptions opts;
  opts.out_dir = f.out.empty() ? "experiment_out" : f.out;
  const auto report = run_monte_carlo(cfg, strategies, forcings.value_or(cfg.n_forcings),
                                      inits.value_or(cfg.n_inits), cfg.seed, opts);
  std::cout << "strategy,final_mean_normalized_rmse\n";
  for (auto s : strategies) std::cout << to_string(s) << ',' << report.mean_rmse(s) << '\n';
  std::cout << "wrote " << opts.out_dir << "/summary.csv\n";
  return 0;
}

int run_benchmark(const CommonFlags& f, int members, const std::vector<std::string>& specs,
                  std::int64_t budget) {
  std::vector<BenchmarkCase> cases;
  if (specs.empty()) {
    for (int horizon : {1, 2, 3, 4})
      for (int d_obs : {5, 9}) cases.push_back({120, d_obs, horizon});
  }
  for (const auto& s : specs) {
    BenchmarkCase bc;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(s);
    if (!(in >> bc.state_dim >> sep1 >> bc.candidates >> sep2 >> bc.horizon) || sep1 != ':' || sep2 != ':')
      throw std::invalid_argument("benchmark case '" + s + "' is not D:D_obs:T");
    cases.push_back(bc);
  }
  const auto rows = benchmark_complexity(cases, members, f.seed.value_or(1), budget);
  write_benchmark_csv(std::cout, rows);
  if (!f.out.empty()) {
    auto out = detail::open_for_write(fs::path(f.out) / "benchmark.csv");
    write_benchmark_csv(out, rows);
  }
  for (const auto& r : rows)
    if (!r.counts_match) return 1;
  return 0;
}

int run_place(const CommonFlags& f, int count, int runs, int horizon) {
  const ScenarioConfig cfg = resolve(f);
  const auto ec = empirical_covariance(runs, horizon, cfg.seed, cfg.truth_scenario());
  std::vector<double> gains;
  const auto cells = greedy_fixed_placement(ec, count, cfg.noise_var, &gains);
  std::ostringstream body;
  body << "# greedy placement, " << ec.n_samples << " samples, noise_var " << cfg.noise_var << '\n';
  write_placement(body, cells);
  std::cout << body.str();
  if (!f.out.empty()) {
    auto out = detail::open_for_write(fs::path(f.out) / "placement.txt");
    out << body.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor task scheduling on simulated flood fields"};
  app.require_subcommand(1);

  CommonFlags sim_f, plan_f, exp_f, bench_f, place_f;
  std::string sim_strategy = "fast", sim_times = "0,last", plan_strategy = "fast";
  std::vector<std::string> exp_strategies, bench_cases;
  std::optional<int> exp_forcings, exp_inits;
  int bench_members = 200, place_count = 8, place_runs = 50, place_horizon = 30;
  std::int64_t bench_budget = 20000;

  auto* sim = app.add_subcommand("simulate", "run one episode and export field snapshots");
  add_common(sim, sim_f);
  sim->add_option("--strategy", sim_strategy, "planning strategy");
  sim->add_option("--times", sim_times, "snapshot steps, comma separated ('last' allowed)");

  auto* plan = app.add_subcommand("plan", "one planning call on the initial belief");
  add_common(plan, plan_f);
  plan->add_option("--strategy", plan_strategy, "fast, full_tree, myopic or multi_fast");

  auto* exp = app.add_subcommand("experiment", "Monte-Carlo comparison of strategies");
  add_common(exp, exp_f);
  exp->add_option("--strategy", exp_strategies, "strategies (repeat or comma separate)");
  exp->add_option("--forcings", exp_forcings, "forcing series count")->check(CLI::PositiveNumber);
  exp->add_option("--inits", exp_inits, "initial guesses per forcing")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("benchmark", "planner cost: wall time and assimilation counts");
  add_common(bench, bench_f);
  bench->add_option("--members", bench_members, "ensemble size")->check(CLI::Range(2, 100000));
  bench->add_option("--case", bench_cases, "D:D_obs:T (repeatable)");
  bench->add_option("--budget", bench_budget, "full-tree node budget");

  auto* place = app.add_subcommand("place", "greedy fixed-sensor placement");
  add_common(place, place_f);
  place->add_option("--count", place_count, "number of fixed sensors")->check(CLI::PositiveNumber);
  place->add_option("--runs", place_runs, "truth simulations")->check(CLI::Range(2, 100000));
  place->add_option("--steps", place_horizon, "steps per simulation")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(sim_f, sim_strategy, sim_times);
    if (*plan) return run_plan(plan_f, plan_strategy);
    if (*exp) return run_experiment(exp_f, exp_strategies, exp_forcings, exp_inits);
    if (*bench) return run_benchmark(bench_f, bench_members, bench_cases, bench_budget);
    if (*place) return run_place(place_f, place_count, place_runs, place_horizon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
