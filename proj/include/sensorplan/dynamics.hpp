#pragma once

// Grid advection-diffusion-decay model used both as the simulated ground truth
// and, with offset parameters, as the planner's fast predictor.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplan/grid.hpp"
#include "sensorplan/random.hpp"

namespace sensorplan {

struct DynamicsParams {
  double diffusion = 0.1;     // exchange fraction per face per step
  double advection_x = 0.0;   // cells/step along columns (+ = increasing col)
  double advection_y = 0.0;   // cells/step along rows (+ = increasing row)
  double decay = 0.0;         // fraction lost per step
  double process_noise_std = 0.0;
  double forcing_noise_std = 0.0;  // relative per-step jitter of rain deposits
  bool clamp_nonnegative = true;

  void validate() const {
    if (!(diffusion >= 0.0 && diffusion <= 0.25))
      throw std::invalid_argument("diffusion must lie in [0, 0.25], got " +
                                  std::to_string(diffusion));
    if (!(std::abs(advection_x) <= 1.0 && std::abs(advection_y) <= 1.0))
      throw std::invalid_argument("advection components must satisfy |a| <= 1");
    if (!(decay >= 0.0 && decay < 1.0))
      throw std::invalid_argument("decay must lie in [0, 1)");
    if (!(process_noise_std >= 0.0) || !(forcing_noise_std >= 0.0))
      throw std::invalid_argument("noise levels must be non-negative");
  }

  bool operator==(const DynamicsParams&) const = default;
};

struct FieldState {
  Eigen::VectorXd values;
  int t = 0;
};

struct RainEvent {
  int t_start = 0;
  int t_end = 0;  // inclusive
  CellIndex center = 0;
  double radius = 1.0;
  double intensity = 0.0;

  bool active(int t) const noexcept { return t >= t_start && t <= t_end; }
  bool operator==(const RainEvent&) const = default;
};

struct ForcingSeries {
  std::vector<RainEvent> events;
  int horizon = 0;

  bool empty() const noexcept { return events.empty(); }
  bool operator==(const ForcingSeries&) const = default;
};

/// N members of dimension D stored as the columns of a D x N matrix.
struct Ensemble {
  Eigen::MatrixXd members;
  int t = 0;

  Ensemble() = default;
  Ensemble(Eigen::MatrixXd m, int time) : members(std::move(m)), t(time) {
    if (members.cols() < 2)
      throw std::invalid_argument("an ensemble needs at least 2 members");
  }

  int size() const noexcept { return static_cast<int>(members.cols()); }
  int dim() const noexcept { return static_cast<int>(members.rows()); }
  Eigen::VectorXd mean() const { return members.rowwise().mean(); }
};

/// Adds the rain deposited at time `t` to `field`. `scale` multiplies every
/// event's intensity (used for per-member forcing uncertainty).
inline void deposit_forcing(const GridSpec& grid, const ForcingSeries& forcing, int t,
                            Eigen::Ref<Eigen::VectorXd> field, Rng* jitter = nullptr,
                            double jitter_std = 0.0) {
  for (const auto& ev : forcing.events) {
    if (!ev.active(t)) continue;
    double amount = ev.intensity;
    if (jitter != nullptr && jitter_std > 0.0) {
      std::normal_distribution<double> nd(0.0, jitter_std);
      amount *= std::max(0.0, 1.0 + nd(*jitter));
    }
    const int reach = static_cast<int>(std::ceil(ev.radius));
    const int r0 = grid.row(ev.center), c0 = grid.col(ev.center);
    for (int r = r0 - reach; r <= r0 + reach; ++r) {
      for (int c = c0 - reach; c <= c0 + reach; ++c) {
        if (!grid.contains(r, c)) continue;
        const double d = std::hypot(r - r0, c - c0);
        if (d > ev.radius) continue;
        field[grid.index(r, c)] += amount * (1.0 - d / (ev.radius + 1.0));
      }
    }
  }
}

class Dynamics {
 public:
  Dynamics(GridSpec grid, DynamicsParams params) : grid_(grid), params_(params) {
    grid_.validate();
    params_.validate();
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const DynamicsParams& params() const noexcept { return params_; }

  /// Deterministic part of one step: conservative upwind advection and
  /// 5-point diffusion with zero-flux boundaries, then decay.
  Eigen::VectorXd transport(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd out = x;
    const double dif = params_.diffusion;
    const double ax = params_.advection_x, ay = params_.advection_y;
    for (int r = 0; r < grid_.rows; ++r) {
      for (int c = 0; c < grid_.cols; ++c) {
        const CellIndex i = grid_.index(r, c);
        if (c + 1 < grid_.cols) {
          const CellIndex j = grid_.index(r, c + 1);
          const double flux = dif * (x[i] - x[j]) + (ax > 0.0 ? ax * x[i] : ax * x[j]);
          out[i] -= flux;
          out[j] += flux;
        }
        if (r + 1 < grid_.rows) {
          const CellIndex j = grid_.index(r + 1, c);
          const double flux = dif * (x[i] - x[j]) + (ay > 0.0 ? ay * x[i] : ay * x[j]);
          out[i] -= flux;
          out[j] += flux;
        }
      }
    }
    if (params_.decay > 0.0) out *= (1.0 - params_.decay);
    return out;
  }

  /// Full step t -> t+1 of a raw field vector using the supplied generator.
  Eigen::VectorXd advance(const Eigen::Ref<const Eigen::VectorXd>& x, int t,
                          const ForcingSeries& forcing, Rng& rng) const {
    Eigen::VectorXd out = transport(x);
    deposit_forcing(grid_, forcing, t, out, &rng, params_.forcing_noise_std);
    if (params_.process_noise_std > 0.0) {
      std::normal_distribution<double> nd(0.0, params_.process_noise_std);
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += nd(rng);
    }
    if (params_.clamp_nonnegative) out = out.cwiseMax(0.0);
    return out;
  }

  FieldState step(const FieldState& state, const ForcingSeries& forcing,
                  std::uint64_t seed) const {
    check_dim(state.values.size());
    if (!state.values.allFinite()) throw std::invalid_argument("field state is not finite");
    Rng rng(seed);
    return {advance(state.values, state.t, forcing, rng), state.t + 1};
  }

  void check_dim(Eigen::Index n) const {
    if (n != grid_.size())
      throw std::invalid_argument("state dimension " + std::to_string(n) +
                                  " does not match grid size " + std::to_string(grid_.size()));
  }

 private:
  GridSpec grid_;
  DynamicsParams params_;
};

/// World evolution with the true parameters.
inline FieldState step_truth(const Dynamics& truth, const FieldState& state,
                             const ForcingSeries& forcing, std::uint64_t seed) {
  return truth.step(state, forcing, seed);
}

/// Same stencil evaluated with the predictor's (offset) parameters.
inline FieldState step_predict(const Dynamics& predictor, const FieldState& state,
                               const ForcingSeries& forcing, std::uint64_t seed) {
  return predictor.step(state, forcing, seed);
}

/// Predictor parameters offset from the truth: diffusion +20%, decay +0.01.
inline DynamicsParams default_predictor_params(const DynamicsParams& truth) {
  DynamicsParams p = truth;
  p.diffusion = std::min(0.25, truth.diffusion * 1.2);
  p.decay = std::min(0.99, truth.decay + 0.01);
  return p;
}

/// Random rain events inside the grid and the time window [0, horizon].
inline ForcingSeries generate_forcing(const GridSpec& grid, int horizon, int n_events,
                                      std::uint64_t seed, double max_intensity = 0.3) {
  if (n_events < 0) throw std::invalid_argument("n_events must be non-negative");
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  ForcingSeries out;
  out.horizon = horizon;
  Rng rng(seed);
  const int max_len = std::max(1, horizon / 3);
  const int max_radius = std::max(1, std::min(grid.rows, grid.cols) / 4);
  std::uniform_int_distribution<int> cell(0, grid.size() - 1);
  std::uniform_int_distribution<int> start(0, std::max(0, horizon - 1));
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> rad(1, max_radius);
  std::uniform_real_distribution<double> inten(0.25 * max_intensity, max_intensity);
  for (int k = 0; k < n_events; ++k) {
    RainEvent ev;
    ev.t_start = start(rng);
    ev.t_end = std::min(horizon, ev.t_start + len(rng) - 1);
    ev.center = cell(rng);
    ev.radius = rad(rng);
    ev.intensity = inten(rng);
    out.events.push_back(ev);
  }
  return out;
}

/// An imperfect rain forecast: each event's intensity is scaled by an
/// independent log-normal factor with log-std `relative_error`.
inline ForcingSeries perturb_forcing(const ForcingSeries& forcing, double relative_error,
                                     std::uint64_t seed) {
  ForcingSeries out = forcing;
  if (relative_error <= 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, relative_error);
  for (auto& ev : out.events) ev.intensity *= std::exp(nd(rng));
  return out;
}

inline Ensemble spawn_initial_ensemble(const FieldState& mean, double spread_std, int n,
                                       std::uint64_t seed, bool clamp_nonnegative = true) {
  if (n < 2) throw std::invalid_argument("ensemble size must be at least 2");
  if (!(spread_std >= 0.0)) throw std::invalid_argument("spread_std must be non-negative");
  const auto d = mean.values.size();
  Eigen::MatrixXd m(d, n);
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      m(i, j) = mean.values[i] + (spread_std > 0.0 ? spread_std * nd(rng) : 0.0);
  if (clamp_nonnegative) m = m.cwiseMax(0.0);
  return Ensemble(std::move(m), mean.t);
}

/// Plain-text matrix: one line per grid row, space-separated decimals.
inline void write_field(std::ostream& os, const GridSpec& grid,
                        const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("field/grid size mismatch");
  std::ostringstream line;
  line << std::setprecision(10);
  for (int r = 0; r < grid.rows; ++r) {
    line.str("");
    for (int c = 0; c < grid.cols; ++c) {
      if (c) line << ' ';
      line << values[grid.index(r, c)];
    }
    os << line.str() << '\n';
  }
}

inline Eigen::VectorXd read_field(std::istream& is, const GridSpec& grid) {
  Eigen::VectorXd v(grid.size());
  std::string line;
  int r = 0;
  while (r < grid.rows && std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    for (int c = 0; c < grid.cols; ++c)
      if (!(ls >> v[grid.index(r, c)]))
        throw std::runtime_error("field row " + std::to_string(r) + " is too short");
    ++r;
  }
  if (r != grid.rows) throw std::runtime_error("field has too few rows");
  return v;
}

}  // namespace sensorplan
