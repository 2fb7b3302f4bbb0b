#include <gtest/gtest.h>

#include <sstream>

#include "sensorplan/dynamics.hpp"

using namespace sensorplan;

namespace {

DynamicsParams quiet(double diffusion) {
  DynamicsParams p;
  p.diffusion = diffusion;
  return p;
}

FieldState impulse(const GridSpec& g, CellIndex c, double v = 1.0) {
  FieldState s{Eigen::VectorXd::Zero(g.size()), 0};
  s.values[c] = v;
  return s;
}

}  // namespace

TEST(Dynamics, ZeroFieldStaysZero) {
  GridSpec g(6, 5);
  DynamicsParams p = quiet(0.2);
  p.advection_x = 0.3;
  p.advection_y = -0.4;
  p.decay = 0.1;
  Dynamics d(g, p);
  const FieldState out = step_truth(d, {Eigen::VectorXd::Zero(g.size()), 3}, {}, 11);
  EXPECT_EQ(out.t, 4);
  EXPECT_EQ(out.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, ImpulseSpreadsToVonNeumannNeighbors) {
  GridSpec g(5, 5);
  Dynamics d(g, quiet(0.1));
  const CellIndex center = g.index(2, 2);
  const FieldState out = step_truth(d, impulse(g, center), {}, 1);
  EXPECT_NEAR(out.values[center], 0.6, 1e-12);
  for (CellIndex n : {g.index(1, 2), g.index(3, 2), g.index(2, 1), g.index(2, 3)})
    EXPECT_NEAR(out.values[n], 0.1, 1e-12);
  EXPECT_NEAR(out.values.sum(), 1.0, 1e-12);
  EXPECT_EQ(out.values[g.index(1, 1)], 0.0);
}

TEST(Dynamics, UniformDecay) {
  GridSpec g(4, 7);
  DynamicsParams p = quiet(0.0);
  p.decay = 0.15;
  Dynamics d(g, p);
  const FieldState out = step_truth(d, {Eigen::VectorXd::Constant(g.size(), 2.5), 0}, {}, 5);
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    EXPECT_NEAR(out.values[i], 2.5 * 0.85, 1e-12);
}

TEST(Dynamics, PredictorWithTruthParamsMatchesTruth) {
  GridSpec g(6, 6);
  DynamicsParams p = quiet(0.12);
  p.advection_x = 0.2;
  p.process_noise_std = 0.05;
  Dynamics d(g, p);
  ForcingSeries rain = generate_forcing(g, 10, 2, 3);
  FieldState s{Eigen::VectorXd::LinSpaced(g.size(), 0.0, 1.0), 2};
  const FieldState a = step_truth(d, s, rain, 99);
  const FieldState b = step_predict(d, s, rain, 99);
  EXPECT_EQ(a.values, b.values);
}

TEST(Dynamics, DiffusionOffsetOnImpulse) {
  GridSpec g(5, 5);
  const CellIndex center = g.index(2, 2);
  const FieldState a = step_truth(Dynamics(g, quiet(0.10)), impulse(g, center), {}, 0);
  const FieldState b = step_predict(Dynamics(g, quiet(0.12)), impulse(g, center), {}, 0);
  // The center loses 4 * diffusion, so a 0.02 diffusion offset moves it by 0.08
  // while each neighbor moves by 0.02.
  EXPECT_NEAR(a.values[center] - b.values[center], 4 * 0.02, 1e-12);
  EXPECT_NEAR(b.values[g.index(2, 3)] - a.values[g.index(2, 3)], 0.02, 1e-12);
}

TEST(Dynamics, MassConservedWithReflectingBoundaries) {
  GridSpec g(7, 9);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const Eigen::VectorXd start = Eigen::VectorXd::NullaryExpr(g.size(), [&] { return u(rng); });
  const double mass = start.sum();

  // Monotone regime (4 * diffusion + |ax| + |ay| <= 1): the clamp never fires.
  DynamicsParams p = quiet(0.15);
  p.advection_x = 0.25;
  p.advection_y = -0.1;
  FieldState s{start, 0};
  for (int k = 0; k < 50; ++k) {
    s = step_truth(Dynamics(g, p), s, {}, k);
    EXPECT_NEAR(s.values.sum(), mass, 1e-10);
    EXPECT_GE(s.values.minCoeff(), 0.0);
  }

  // Extreme but admissible parameters conserve mass once the clamp is off.
  p = quiet(0.25);
  p.advection_x = 1.0;
  p.advection_y = -1.0;
  p.clamp_nonnegative = false;
  s = {start, 0};
  for (int k = 0; k < 20; ++k) {
    s = step_truth(Dynamics(g, p), s, {}, k);
    EXPECT_NEAR(s.values.sum(), mass, 1e-9 * std::max(1.0, s.values.cwiseAbs().sum()));
  }
}

TEST(Dynamics, LinearBelowClamping) {
  GridSpec g(5, 6);
  DynamicsParams p = quiet(0.18);
  p.advection_x = -0.4;
  p.advection_y = 0.25;
  p.decay = 0.03;
  Dynamics d(g, p);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(g.size(), 0.1, 2.0);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(g.size(), 3.0, 0.5);
  const double a = 0.7, b = 1.9;
  const auto fx = step_truth(d, {x, 0}, {}, 1).values;
  const auto fy = step_truth(d, {y, 0}, {}, 1).values;
  const auto fxy = step_truth(d, {a * x + b * y, 0}, {}, 1).values;
  EXPECT_LT((fxy - (a * fx + b * fy)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dynamics, DeterministicGivenSeed) {
  GridSpec g(6, 8);
  DynamicsParams p = quiet(0.1);
  p.process_noise_std = 0.2;
  p.forcing_noise_std = 0.3;
  Dynamics d(g, p);
  ForcingSeries rain = generate_forcing(g, 5, 3, 7);
  FieldState s{Eigen::VectorXd::Constant(g.size(), 0.5), 0};
  EXPECT_EQ(step_truth(d, s, rain, 42).values, step_truth(d, s, rain, 42).values);
  EXPECT_NE(step_truth(d, s, rain, 42).values, step_truth(d, s, rain, 43).values);
}

TEST(Dynamics, ClampKeepsDepthNonNegative) {
  GridSpec g(5, 5);
  DynamicsParams p = quiet(0.1);
  p.process_noise_std = 1.0;
  Dynamics d(g, p);
  FieldState s{Eigen::VectorXd::Zero(g.size()), 0};
  for (int k = 0; k < 10; ++k) {
    s = step_truth(d, s, {}, k);
    EXPECT_GE(s.values.minCoeff(), 0.0);
    EXPECT_TRUE(s.values.allFinite());
  }
}

TEST(Dynamics, UnstableParamsRejectedAtConstruction) {
  GridSpec g(4, 4);
  EXPECT_THROW(Dynamics(g, quiet(0.3)), std::invalid_argument);
  DynamicsParams p = quiet(0.1);
  p.advection_x = 1.5;
  EXPECT_THROW(Dynamics(g, p), std::invalid_argument);
  p = quiet(0.1);
  p.decay = 1.0;
  EXPECT_THROW(Dynamics(g, p), std::invalid_argument);
  EXPECT_THROW(GridSpec(1, 5), std::invalid_argument);
}

TEST(Dynamics, ForcingDepositsRain) {
  GridSpec g(7, 7);
  ForcingSeries rain;
  rain.horizon = 5;
  rain.events.push_back({1, 2, g.index(3, 3), 1.0, 0.4});
  Dynamics d(g, quiet(0.0));
  FieldState s{Eigen::VectorXd::Zero(g.size()), 0};
  s = step_truth(d, s, rain, 0);
  EXPECT_EQ(s.values.sum(), 0.0);
  s = step_truth(d, s, rain, 0);
  EXPECT_NEAR(s.values[g.index(3, 3)], 0.4, 1e-12);
  EXPECT_NEAR(s.values[g.index(3, 4)], 0.2, 1e-12);
  EXPECT_EQ(s.values[g.index(4, 4)], 0.0);
}

TEST(Forcing, NoEventsGivesEmptySeries) {
  EXPECT_TRUE(generate_forcing(GridSpec(5, 5), 10, 0, 1).empty());
}

TEST(Forcing, DeterministicAndInsideBounds) {
  GridSpec g(9, 6);
  const ForcingSeries a = generate_forcing(g, 20, 3, 77);
  EXPECT_EQ(a, generate_forcing(g, 20, 3, 77));
  ASSERT_EQ(a.events.size(), 3u);
  for (const auto& ev : a.events) {
    EXPECT_TRUE(g.contains(ev.center));
    EXPECT_GE(ev.intensity, 0.0);
    EXPECT_LE(ev.t_start, ev.t_end);
    EXPECT_LE(ev.t_end, a.horizon);
  }
}

TEST(Forcing, PerturbedForecastKeepsGeometry) {
  GridSpec g(8, 8);
  const ForcingSeries a = generate_forcing(g, 20, 4, 3);
  const ForcingSeries b = perturb_forcing(a, 0.3, 9);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    EXPECT_EQ(a.events[k].center, b.events[k].center);
    EXPECT_EQ(a.events[k].t_start, b.events[k].t_start);
    EXPECT_GT(b.events[k].intensity, 0.0);
  }
  EXPECT_EQ(perturb_forcing(a, 0.0, 9), a);
}

TEST(InitialEnsemble, ZeroSpreadCopiesMean) {
  FieldState m{Eigen::VectorXd::LinSpaced(12, 0.0, 1.0), 4};
  const Ensemble e = spawn_initial_ensemble(m, 0.0, 5, 1);
  EXPECT_EQ(e.t, 4);
  for (int j = 0; j < e.size(); ++j) EXPECT_EQ(Eigen::VectorXd(e.members.col(j)), m.values);
}

TEST(InitialEnsemble, SampleStdMatchesSpread) {
  FieldState m{Eigen::VectorXd::Constant(6, 50.0), 0};
  const Ensemble e = spawn_initial_ensemble(m, 1.0, 10000, 8);
  for (int i = 0; i < e.dim(); ++i) {
    const Eigen::RowVectorXd row = e.members.row(i);
    const double mu = row.mean();
    const double sd = std::sqrt((row.array() - mu).square().sum() / (row.size() - 1));
    EXPECT_GE(sd, 0.95);
    EXPECT_LE(sd, 1.05);
  }
}

TEST(InitialEnsemble, DeterministicAndValidated) {
  FieldState m{Eigen::VectorXd::Constant(4, 1.0), 0};
  EXPECT_EQ(spawn_initial_ensemble(m, 0.5, 7, 3).members, spawn_initial_ensemble(m, 0.5, 7, 3).members);
  EXPECT_THROW(spawn_initial_ensemble(m, 0.5, 1, 3), std::invalid_argument);
  EXPECT_THROW(spawn_initial_ensemble(m, -1.0, 4, 3), std::invalid_argument);
  EXPECT_GE(spawn_initial_ensemble(m, 5.0, 50, 3).members.minCoeff(), 0.0);
}

TEST(FieldIo, RoundTripsPlainTextMatrix) {
  GridSpec g(3, 4);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(g.size(), -1.25, 7.5);
  std::stringstream ss;
  write_field(ss, g, v);
  std::string line;
  int rows = 0;
  std::stringstream copy(ss.str());
  while (std::getline(copy, line)) {
    std::istringstream ls(line);
    double x;
    int cols = 0;
    while (ls >> x) ++cols;
    EXPECT_EQ(cols, g.cols);
    ++rows;
  }
  EXPECT_EQ(rows, g.rows);
  EXPECT_LT((read_field(ss, g) - v).cwiseAbs().maxCoeff(), 1e-9);
}
