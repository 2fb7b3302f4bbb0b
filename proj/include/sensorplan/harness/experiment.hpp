#pragma once

// Monte-Carlo sweeps, CSV persistence and field snapshot export.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorplan/harness/config.hpp"
#include "sensorplan/harness/episode.hpp"

namespace sensorplan {

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace detail

inline void write_run_csv(std::ostream& os, const RunRecord& rec) {
  os << "t,rmse,uncertainty,reward,assim_calls,plan_ms\n";
  for (const auto& r : rec.rows)
    os << r.t << ',' << detail::fmt(r.rmse) << ',' << detail::fmt(r.uncertainty) << ','
       << detail::fmt(r.reward) << ',' << r.assim_calls << ',' << detail::fmt(r.plan_ms) << '\n';
}

struct SummaryRow {
  std::string strategy;
  int t = 0;
  double mean_rmse = 0.0, std_rmse = 0.0;
  double mean_uncertainty = 0.0, std_uncertainty = 0.0;
};

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "strategy,t,mean_rmse,std_rmse,mean_uncertainty,std_uncertainty\n";
  for (const auto& r : rows)
    os << r.strategy << ',' << r.t << ',' << detail::fmt(r.mean_rmse) << ','
       << detail::fmt(r.std_rmse) << ',' << detail::fmt(r.mean_uncertainty) << ','
       << detail::fmt(r.std_uncertainty) << '\n';
}

struct MonteCarloReport {
  std::vector<Strategy> strategies;
  /// Per strategy, per case: rmse and uncertainty divided by their step-0 values.
  std::map<std::string, std::vector<std::vector<double>>> normalized_rmse;
  std::map<std::string, std::vector<std::vector<double>>> normalized_uncertainty;
  std::map<std::string, std::vector<RunRecord>> records;
  std::vector<SummaryRow> summary;

  /// Mean normalized rmse over cases at step t (default: final step).
  double mean_rmse(Strategy s, int t = -1) const {
    const auto& cases = normalized_rmse.at(std::string(to_string(s)));
    double sum = 0.0;
    for (const auto& c : cases) sum += c.at(t < 0 ? c.size() - 1 : t);
    return sum / double(cases.size());
  }
};

struct MonteCarloOptions {
  std::string out_dir;  // empty: nothing written
  EpisodeOptions episode;
  bool keep_records = false;
};

inline CaseSeeds monte_carlo_case(std::uint64_t base_seed, int forcing_index, int init_index) {
  return {derive_seed(base_seed, {stream::forcing, std::uint64_t(forcing_index)}),
          derive_seed(base_seed, {stream::initial_guess, std::uint64_t(forcing_index),
                                  std::uint64_t(init_index)})};
}

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
}

inline double safe_ratio(double v, double base) { return base > 0.0 ? v / base : v; }

}  // namespace detail

/// Runs every strategy on the cross product of forcing and initial-guess
/// seeds. Cases share seeds across strategies.
inline MonteCarloReport run_monte_carlo(const ScenarioConfig& cfg,
                                        const std::vector<Strategy>& strategies, int n_forcings,
                                        int n_inits, std::uint64_t base_seed,
                                        const MonteCarloOptions& opts = {}) {
  if (n_forcings < 1 || n_inits < 1)
    throw std::invalid_argument("n_forcings and n_inits must be >= 1");
  if (strategies.empty()) throw std::invalid_argument("no strategies requested");
  MonteCarloReport report;
  report.strategies = strategies;
  const std::filesystem::path out_dir = opts.out_dir;

  for (auto strategy : strategies) {
    const std::string name(to_string(strategy));
    auto& rmse_cases = report.normalized_rmse[name];
    auto& unc_cases = report.normalized_uncertainty[name];
    for (int f = 0; f < n_forcings; ++f) {
      for (int g = 0; g < n_inits; ++g) {
        const RunRecord rec =
            run_episode(cfg, strategy, monte_carlo_case(base_seed, f, g), opts.episode);
        std::vector<double> nr, nu;
        for (const auto& row : rec.rows) {
          nr.push_back(detail::safe_ratio(row.rmse, rec.rows.front().rmse));
          nu.push_back(detail::safe_ratio(row.uncertainty, rec.rows.front().uncertainty));
        }
        rmse_cases.push_back(std::move(nr));
        unc_cases.push_back(std::move(nu));
        if (!opts.out_dir.empty()) {
          auto out = detail::open_for_write(out_dir / "runs" /
                                            (name + "_f" + std::to_string(f) + "_g" +
                                             std::to_string(g) + ".csv"));
          write_run_csv(out, rec);
        }
        if (opts.keep_records) report.records[name].push_back(rec);
      }
    }
    const std::size_t steps = rmse_cases.front().size();
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> r, u;
      for (std::size_t c = 0; c < rmse_cases.size(); ++c) {
        r.push_back(rmse_cases[c][t]);
        u.push_back(unc_cases[c][t]);
      }
      SummaryRow row;
      row.strategy = name;
      row.t = static_cast<int>(t);
      detail::mean_std(r, row.mean_rmse, row.std_rmse);
      detail::mean_std(u, row.mean_uncertainty, row.std_uncertainty);
      report.summary.push_back(row);
    }
  }
  if (!opts.out_dir.empty()) {
    auto out = detail::open_for_write(out_dir / "summary.csv");
    write_summary_csv(out, report.summary);
  }
  return report;
}

/// Writes truth, ensemble-mean and absolute-error fields for each requested
/// step as `<kind>_t<step>.txt` under `dir`. Returns the paths written.
inline std::vector<std::filesystem::path> export_snapshots(const RunRecord& rec,
                                                           const std::vector<int>& times,
                                                           const std::filesystem::path& dir) {
  if (rec.truth_fields.size() != rec.rows.size())
    throw std::invalid_argument("run record carries no fields; rerun with keep_fields");
  std::vector<std::filesystem::path> written;
  for (int t : times) {
    if (t < 0 || t >= static_cast<int>(rec.rows.size()))
      throw std::invalid_argument("snapshot step " + std::to_string(t) + " outside episode");
    const Eigen::VectorXd err = (rec.mean_fields[t] - rec.truth_fields[t]).cwiseAbs();
    const std::pair<const char*, const Eigen::VectorXd*> kinds[] = {
        {"truth", &rec.truth_fields[t]}, {"mean", &rec.mean_fields[t]}, {"error", &err}};
    for (const auto& [kind, field] : kinds) {
      const auto path = dir / (std::string(kind) + "_t" + std::to_string(t) + ".txt");
      auto out = detail::open_for_write(path);
      write_field(out, rec.grid, *field);
      if (!out) throw std::runtime_error("failed writing " + path.string());
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace sensorplan
