#pragma once

// Scenario configuration and its INI-style file format.
//
//   [section]
//   key = value
//
// Sections and keys mirror ScenarioConfig; any key not listed in
// `known_keys()` is rejected with an error naming it. Lists are
// comma-separated.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/filter.hpp"
#include "sensorplan/placement.hpp"
#include "sensorplan/planner/types.hpp"

namespace sensorplan {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  int version = 1;
  GridSpec grid{12, 10};
  DynamicsParams truth;
  DynamicsParams predictor;

  // Rain: events over spinup + episode; the predictor sees a forecast whose
  // intensities are off by a log-normal factor.
  int n_events = 4;
  double max_intensity = 0.3;
  double rain_forecast_error = 0.3;
  int spinup = 5;

  int ensemble_size = 200;
  double spread_std = 0.1;  // ensemble spread around the initial guess
  double guess_std = 0.1;   // corruption of the initial guess
  EnkfOptions filter;

  int sensor_count = 1;
  std::vector<CellIndex> starts;  // defaults to evenly spaced interior cells
  int move_radius = 1;
  int footprint = 0;
  double noise_var = 0.01;
  std::vector<CellIndex> fixed_cells;

  PlanConfig plan;

  int episode_length = 30;
  std::uint64_t seed = 1;
  int n_forcings = 30;
  int n_inits = 10;

  ScenarioConfig() {
    truth.diffusion = 0.08;
    truth.advection_x = 0.1;
    truth.advection_y = 0.05;
    truth.decay = 0.02;
    truth.process_noise_std = 0.0;
    predictor = default_predictor_params(truth);
    predictor.process_noise_std = 0.01;
    predictor.forcing_noise_std = 0.3;
    plan.horizon = 3;
    plan.gamma = 0.95;
    plan.noise_var = noise_var;
    plan.footprint = footprint;
  }

  /// Start poses of the mobile sensors, filling in defaults when unset.
  std::vector<CellIndex> start_cells() const {
    if (!starts.empty()) return starts;
    std::vector<CellIndex> out;
    for (int k = 0; k < sensor_count; ++k) {
      const int r = grid.rows / 2;
      const int c = (k + 1) * grid.cols / (sensor_count + 1);
      out.push_back(grid.index(r, std::min(c, grid.cols - 1)));
    }
    return out;
  }

  TruthScenario truth_scenario() const { return {grid, truth, n_events, max_intensity, {}}; }

  void validate() const {
    grid.validate();
    truth.validate();
    predictor.validate();
    plan.validate();
    if (n_events < 0) throw ConfigError("forcing.n_events must be >= 0");
    if (!(max_intensity >= 0.0)) throw ConfigError("forcing.max_intensity must be >= 0");
    if (!(rain_forecast_error >= 0.0)) throw ConfigError("forcing.rain_forecast_error must be >= 0");
    if (spinup < 0) throw ConfigError("forcing.spinup must be >= 0");
    if (ensemble_size < 2) throw ConfigError("ensemble.size must be >= 2");
    if (!(spread_std >= 0.0) || !(guess_std >= 0.0))
      throw ConfigError("ensemble spreads must be >= 0");
    if (sensor_count < 0) throw ConfigError("sensors.count must be >= 0");
    if (!starts.empty() && static_cast<int>(starts.size()) < sensor_count)
      throw ConfigError("sensors.starts lists fewer cells than sensors.count");
    for (auto c : starts)
      if (!grid.contains(c)) throw ConfigError("start cell " + std::to_string(c) + " outside grid");
    for (auto c : fixed_cells)
      if (!grid.contains(c)) throw ConfigError("fixed cell " + std::to_string(c) + " outside grid");
    if (move_radius < 0) throw ConfigError("sensors.move_radius must be >= 0");
    if (footprint < 0) throw ConfigError("sensors.footprint must be >= 0");
    if (!(noise_var > 0.0)) throw ConfigError("sensors.noise_var must be > 0");
    if (episode_length < plan.horizon)
      throw ConfigError("episode.length must be >= plan.horizon");
    if (n_forcings < 1 || n_inits < 1) throw ConfigError("experiment counts must be >= 1");
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_cells(const std::vector<CellIndex>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<CellIndex> parse_cells(const std::string& key, const std::string& text) {
  std::vector<CellIndex> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    try {
      std::size_t used = 0;
      const std::string tok = item.substr(b, e - b + 1);
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': '" + item + "' is not a cell index");
    }
  }
  return out;
}

}  // namespace detail

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"meta", {"version"}},
      {"grid", {"rows", "cols", "cell_size"}},
      {"truth", {"diffusion", "advection_x", "advection_y", "decay", "process_noise_std",
                 "forcing_noise_std"}},
      {"predictor", {"diffusion", "advection_x", "advection_y", "decay", "process_noise_std",
                     "forcing_noise_std"}},
      {"forcing", {"n_events", "max_intensity", "rain_forecast_error", "spinup"}},
      {"ensemble", {"size", "spread_std", "guess_std", "inflation", "localization_radius"}},
      {"sensors", {"count", "starts", "move_radius", "footprint", "noise_var", "fixed",
                   "fixed_cells"}},
      {"plan", {"horizon", "gamma", "fe", "reward", "ridge_eps", "node_budget"}},
      {"episode", {"length", "seed"}},
      {"experiment", {"n_forcings", "n_inits"}},
  };
  return keys;
}

/// Parses INI text on top of the defaults. Relative `sensors.fixed` paths
/// are resolved against `base_dir`.
inline ScenarioConfig parse_config(std::istream& in, const std::string& base_dir = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " +
                      std::to_string(e.line()));
  }

  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    auto it = keys.find(section);
    if (it == keys.end()) {
      if (body.empty()) throw ConfigError("unknown key '" + section + "'");
      throw ConfigError("unknown section '" + section + "'");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  }

  ScenarioConfig cfg;
  auto get = [&](const std::string& path, auto& target) {
    using T = std::decay_t<decltype(target)>;
    if (auto v = tree.get_optional<std::string>(path)) {
      try {
        if constexpr (std::is_same_v<T, std::string>) {
          target = *v;
        } else {
          std::size_t used = 0;
          if constexpr (std::is_same_v<T, double>) target = std::stod(*v, &used);
          else if constexpr (std::is_same_v<T, std::uint64_t>) target = std::stoull(*v, &used);
          else if constexpr (std::is_same_v<T, std::int64_t>) target = std::stoll(*v, &used);
          else target = static_cast<T>(std::stoi(*v, &used));
          if (used != v->size()) throw std::invalid_argument(*v);
        }
      } catch (const std::exception&) {
        throw ConfigError("key '" + path + "': cannot parse '" + *v + "'");
      }
    }
  };
  auto get_params = [&](const std::string& s, DynamicsParams& p) {
    get(s + ".diffusion", p.diffusion);
    get(s + ".advection_x", p.advection_x);
    get(s + ".advection_y", p.advection_y);
    get(s + ".decay", p.decay);
    get(s + ".process_noise_std", p.process_noise_std);
    get(s + ".forcing_noise_std", p.forcing_noise_std);
  };

  get("meta.version", cfg.version);
  get("grid.rows", cfg.grid.rows);
  get("grid.cols", cfg.grid.cols);
  get("grid.cell_size", cfg.grid.cell_size);
  get_params("truth", cfg.truth);
  get_params("predictor", cfg.predictor);
  get("forcing.n_events", cfg.n_events);
  get("forcing.max_intensity", cfg.max_intensity);
  get("forcing.rain_forecast_error", cfg.rain_forecast_error);
  get("forcing.spinup", cfg.spinup);
  get("ensemble.size", cfg.ensemble_size);
  get("ensemble.spread_std", cfg.spread_std);
  get("ensemble.guess_std", cfg.guess_std);
  get("ensemble.inflation", cfg.filter.inflation);
  get("ensemble.localization_radius", cfg.filter.localization_radius);
  get("sensors.count", cfg.sensor_count);
  get("sensors.move_radius", cfg.move_radius);
  get("sensors.footprint", cfg.footprint);
  get("sensors.noise_var", cfg.noise_var);
  if (auto v = tree.get_optional<std::string>("sensors.starts"))
    cfg.starts = detail::parse_cells("sensors.starts", *v);
  if (auto v = tree.get_optional<std::string>("sensors.fixed_cells"))
    cfg.fixed_cells = detail::parse_cells("sensors.fixed_cells", *v);
  if (auto v = tree.get_optional<std::string>("sensors.fixed")) {
    std::string path = *v;
    if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
    auto cells = read_placement_file(path);
    cfg.fixed_cells.insert(cfg.fixed_cells.end(), cells.begin(), cells.end());
  }
  get("plan.horizon", cfg.plan.horizon);
  get("plan.gamma", cfg.plan.gamma);
  if (auto v = tree.get_optional<std::string>("plan.fe")) {
    try {
      cfg.plan.fe = parse_gamma_shape(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'plan.fe': ") + e.what());
    }
  }
  if (auto v = tree.get_optional<std::string>("plan.reward")) {
    try {
      cfg.plan.reward = parse_reward_mode(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'plan.reward': ") + e.what());
    }
  }
  get("plan.ridge_eps", cfg.plan.ridge_eps);
  get("plan.node_budget", cfg.plan.node_budget);
  get("episode.length", cfg.episode_length);
  get("episode.seed", cfg.seed);
  get("experiment.n_forcings", cfg.n_forcings);
  get("experiment.n_inits", cfg.n_inits);

  cfg.plan.noise_var = cfg.noise_var;
  cfg.plan.footprint = cfg.footprint;
  if (cfg.filter.localization_radius > 0.0) cfg.filter.grid = cfg.grid;
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  const auto slash = path.find_last_of('/');
  return parse_config(in, slash == std::string::npos ? "." : path.substr(0, slash));
}

/// Canonical INI serialization; parse_config(to_ini(c)) reproduces c.
inline std::string to_ini(const ScenarioConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  auto params = [&](const char* name, const DynamicsParams& p) {
    os << "\n[" << name << "]\n"
       << "diffusion = " << format_double(p.diffusion) << '\n'
       << "advection_x = " << format_double(p.advection_x) << '\n'
       << "advection_y = " << format_double(p.advection_y) << '\n'
       << "decay = " << format_double(p.decay) << '\n'
       << "process_noise_std = " << format_double(p.process_noise_std) << '\n'
       << "forcing_noise_std = " << format_double(p.forcing_noise_std) << '\n';
  };
  os << "[meta]\nversion = " << c.version << '\n';
  os << "\n[grid]\nrows = " << c.grid.rows << "\ncols = " << c.grid.cols
     << "\ncell_size = " << format_double(c.grid.cell_size) << '\n';
  params("truth", c.truth);
  params("predictor", c.predictor);
  os << "\n[forcing]\nn_events = " << c.n_events
     << "\nmax_intensity = " << format_double(c.max_intensity)
     << "\nrain_forecast_error = " << format_double(c.rain_forecast_error)
     << "\nspinup = " << c.spinup << '\n';
  os << "\n[ensemble]\nsize = " << c.ensemble_size
     << "\nspread_std = " << format_double(c.spread_std)
     << "\nguess_std = " << format_double(c.guess_std)
     << "\ninflation = " << format_double(c.filter.inflation)
     << "\nlocalization_radius = " << format_double(c.filter.localization_radius) << '\n';
  os << "\n[sensors]\ncount = " << c.sensor_count;
  if (!c.starts.empty()) os << "\nstarts = " << detail::join_cells(c.starts);
  os << "\nmove_radius = " << c.move_radius << "\nfootprint = " << c.footprint
     << "\nnoise_var = " << format_double(c.noise_var);
  if (!c.fixed_cells.empty()) os << "\nfixed_cells = " << detail::join_cells(c.fixed_cells);
  os << '\n';
  os << "\n[plan]\nhorizon = " << c.plan.horizon << "\ngamma = " << format_double(c.plan.gamma)
     << "\nfe = " << to_string(c.plan.fe) << "\nreward = " << to_string(c.plan.reward)
     << "\nridge_eps = " << format_double(c.plan.ridge_eps)
     << "\nnode_budget = " << c.plan.node_budget << '\n';
  os << "\n[episode]\nlength = " << c.episode_length << "\nseed = " << c.seed << '\n';
  os << "\n[experiment]\nn_forcings = " << c.n_forcings << "\nn_inits = " << c.n_inits << '\n';
  return os.str();
}

/// FNV-1a of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_ini(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sensorplan
