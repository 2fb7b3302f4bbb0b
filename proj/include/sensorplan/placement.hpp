#pragma once

// Fixed-sensor placement baseline: greedy selection by conditional log-det
// gain on an empirical covariance pooled from truth simulations.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplan/dynamics.hpp"
#include "sensorplan/random.hpp"

namespace sensorplan {

struct EmpiricalCovariance {
  Eigen::MatrixXd cov;
  int n_samples = 0;
};

/// What the placement study simulates. When `fixed_forcing` is set every run
/// uses it; otherwise each run draws its own rain events.
struct TruthScenario {
  GridSpec grid;
  DynamicsParams truth;
  int n_events = 3;
  double max_intensity = 0.3;
  std::optional<ForcingSeries> fixed_forcing;
};

inline EmpiricalCovariance empirical_covariance(int n_runs, int horizon, std::uint64_t seed,
                                                const TruthScenario& scenario) {
  if (n_runs < 2) throw std::invalid_argument("empirical covariance needs n_runs >= 2");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const Dynamics model(scenario.grid, scenario.truth);
  const int d = scenario.grid.size();
  Eigen::MatrixXd samples(d, static_cast<Eigen::Index>(n_runs) * horizon);
  Eigen::Index col = 0;
  for (int r = 0; r < n_runs; ++r) {
    const ForcingSeries forcing =
        scenario.fixed_forcing
            ? *scenario.fixed_forcing
            : generate_forcing(scenario.grid, horizon, scenario.n_events,
                               derive_seed(seed, {stream::forcing, std::uint64_t(r)}),
                               scenario.max_intensity);
    FieldState x{Eigen::VectorXd::Zero(d), 0};
    for (int t = 0; t < horizon; ++t) {
      x = step_truth(model, x, forcing,
                     derive_seed(seed, {stream::truth_noise, std::uint64_t(r), std::uint64_t(t)}));
      samples.col(col++) = x.values;
    }
  }
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd a = samples.colwise() - mean;
  EmpiricalCovariance out;
  out.n_samples = static_cast<int>(samples.cols());
  out.cov = a * a.transpose() / double(out.n_samples - 1);
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// Picks k cells one at a time, each maximizing ln(1 + var(c | chosen) / r),
/// where var(c | chosen) is the conditional variance after noisy
/// observations of the chosen cells. Ties go to the lowest index.
inline std::vector<CellIndex> greedy_fixed_placement(const EmpiricalCovariance& ec, int k,
                                                     double noise_var,
                                                     std::vector<double>* gains = nullptr) {
  const int d = static_cast<int>(ec.cov.rows());
  if (k < 1 || k > d)
    throw std::invalid_argument("k must lie in [1, " + std::to_string(d) + "], got " +
                                std::to_string(k));
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
  Eigen::MatrixXd cov = ec.cov;
  std::vector<char> taken(d, 0);
  std::vector<CellIndex> chosen;
  if (gains) gains->clear();
  for (int it = 0; it < k; ++it) {
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < d; ++c) {
      if (taken[c]) continue;
      const double g = std::log1p(std::max(0.0, cov(c, c)) / noise_var);
      if (g > best_gain) {
        best_gain = g;
        best = c;
      }
    }
    taken[best] = 1;
    chosen.push_back(best);
    if (gains) gains->push_back(best_gain);
    const Eigen::VectorXd col = cov.col(best);
    cov.noalias() -= col * col.transpose() / (col[best] + noise_var);
  }
  return chosen;
}

inline void write_placement(std::ostream& os, const std::vector<CellIndex>& cells) {
  for (auto c : cells) os << c << '\n';
}

inline std::vector<CellIndex> read_placement(std::istream& is) {
  std::vector<CellIndex> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(line.substr(first), &used);
    } catch (const std::exception&) {
      throw std::runtime_error("placement line " + std::to_string(lineno) + " is not a cell index");
    }
    if (line.find_first_not_of(" \t\r", first + used) != std::string::npos)
      throw std::runtime_error("placement line " + std::to_string(lineno) + " has trailing text");
    out.push_back(v);
  }
  return out;
}

inline std::vector<CellIndex> read_placement_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open placement file " + path);
  return read_placement(in);
}

}  // namespace sensorplan
