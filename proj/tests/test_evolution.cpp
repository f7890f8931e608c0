#include <gtest/gtest.h>

#include <cmath>

#include "mems4/evolution.hpp"

using namespace mems4;

namespace {

RadialField bump(const GridPtr& grid, double depth) {
  return RadialField::sample(grid, [depth](double r) { return -depth * (1 - r * r) * (1 - r * r); });
}

EvolutionOptions fixed_step(double dt) {
  EvolutionOptions o;
  o.adaptive = false;
  o.dt_initial = dt;
  return o;
}

}  // namespace

TEST(Bounds, GeneralBoundFormula) {
  ModelParams p;
  p.lambda = 10.0;
  const double m1 = 31.0;
  const double c = 3.0 * std::cbrt(m1 * m1 * p.lambda / 4.0) - m1;
  EXPECT_NEAR(touchdown_bound_general(p, m1, 0.0, 0.0), 1.0 / c, 1e-12);
  p.gamma = 2.0;
  EXPECT_NEAR(touchdown_bound_general(p, m1, -0.1, 0.5), (1.0 - 0.1 + 4.0 * (0.5 + c)) / c, 1e-12);
  p.lambda = 1.0;
  EXPECT_THROW((void)touchdown_bound_general(p, m1, 0.0, 0.0), Error);
}

TEST(Bounds, SharpBoundFormula) {
  ModelParams p;
  p.lambda = 5.5;
  EXPECT_NEAR(touchdown_bound_sharp(p, 5.0, 0.0, 0.0), 1.0 / 0.5, 1e-12);
  p.gamma = 1.0;
  // K0 = 0, K1 = |0.5 g(0)| = 0.5.
  EXPECT_NEAR(touchdown_bound_sharp(p, 5.0, 0.0, 0.0), 1.5 / 0.5, 1e-12);
  EXPECT_THROW((void)touchdown_bound_sharp(p, 6.0, 0.0, 0.0), Error);
}

TEST(Steps, ImplicitEulerSatisfiesItsEquation) {
  const auto grid = build_grid(60, 1);
  const auto opA = assemble_A(*grid, 1.0, 2.0);
  ModelParams p;
  p.T = 2.0;
  p.lambda = 3.0;
  EvolutionState s{0.0, bump(grid, 0.2), RadialField(grid), 1e-3};
  const auto un = step_parabolic(s, p, opA, 1e-3, {});
  ASSERT_TRUE(un.has_value());
  const auto au = opA.apply(un->unknowns());
  for (int i = 0; i < 60; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double lhs = ((*un)[k] - s.u[k]) / 1e-3;
    const double rhs = -(au[k] + p.lambda * g((*un)[k]));
    EXPECT_NEAR(lhs, rhs, 1e-8 * (std::abs(au[k]) + 1.0));
  }
}

TEST(Energy, LinearDampedWaveIdentityIsExact) {
  // With lambda = 0 the midpoint rule dissipates exactly dt |v_mid|^2.
  const auto grid = build_grid(60, 2);
  ModelParams p;
  p.d = 2;
  p.gamma = 1.0;
  const auto bd = bound_data(grid, 1.0, 0.0);
  const auto tr = run(p, bump(grid, 0.3), RadialField(grid), 1.0, bd, fixed_step(0.01));
  EXPECT_EQ(tr.verdict, Verdict::survived);
  EXPECT_LT(std::abs(tr.energy_drift()), 1e-11 * std::abs(tr.samples.front().E));
}

TEST(Energy, GradientFlowDecreases) {
  const auto grid = build_grid(60, 1);
  ModelParams p;
  p.lambda = 5.0;
  const auto bd = bound_data(grid, 1.0, 0.0);
  const auto tr = run(p, bump(grid, 0.3), std::nullopt, 0.5, bd, fixed_step(1e-3));
  for (std::size_t k = 1; k < tr.samples.size(); ++k)
    EXPECT_LE(tr.samples[k].E, tr.samples[k - 1].E + 1e-12);
  // The potential is concave, so backward Euler only balances the energy to
  // first order in dt.
  const auto a = run(p, bump(grid, 0.3), std::nullopt, 0.1, bd, fixed_step(1e-3));
  const auto b = run(p, bump(grid, 0.3), std::nullopt, 0.1, bd, fixed_step(5e-4));
  ASSERT_EQ(a.verdict, Verdict::survived);
  ASSERT_EQ(b.verdict, Verdict::survived);
  const double order = std::log2(a.energy_drift() / b.energy_drift());
  EXPECT_GT(order, 0.8);
  EXPECT_LT(order, 1.5);
}

TEST(Energy, DriftIsSecondOrderInTimeStep) {
  const auto grid = build_grid(100, 1);
  ModelParams p;
  p.gamma = 1.0;
  const auto bd = bound_data(grid, 1.0, 0.0);
  p.lambda = 0.1 * bd.m1;
  const auto a = run(p, RadialField(grid), RadialField(grid), 2.0, bd, fixed_step(0.02));
  const auto b = run(p, RadialField(grid), RadialField(grid), 2.0, bd, fixed_step(0.01));
  ASSERT_EQ(a.verdict, Verdict::survived);
  ASSERT_EQ(b.verdict, Verdict::survived);
  const double order = std::log2(std::abs(a.energy_drift()) / std::abs(b.energy_drift()));
  EXPECT_NEAR(order, 2.0, 0.2);
  EXPECT_LE(std::abs(b.energy_drift()), 1e-4 * std::abs(b.samples.front().E));
}

TEST(Touchdown, AboveThresholdWithinGeneralBound) {
  for (int d : {1, 2}) {
    const auto grid = build_grid(100, d);
    ModelParams p;
    p.d = d;
    const auto bd = bound_data(grid, 1.0, 0.0);
    p.lambda = 2.0 * touchdown_threshold(bd.m1);
    const auto tr = run(p, RadialField(grid), std::nullopt, 10.0, bd);
    ASSERT_EQ(tr.verdict, Verdict::touched_down);
    ASSERT_TRUE(tr.bounds.general.has_value());
    EXPECT_LE(tr.t_td_lo, *tr.bounds.general);
    EXPECT_LE(tr.t_td_lo, tr.t_td_hi);
    EXPECT_LE(tr.max_dN_rate(), -tr.bounds.chi_min + 1e-3);
    EXPECT_LE(tr.final_state.u.min(), -1.0 + 1e-3);
  }
}

TEST(Touchdown, HyperbolicRunTouchesDown) {
  const auto grid = build_grid(100, 1);
  ModelParams p;
  p.gamma = 1.0;
  const auto bd = bound_data(grid, 1.0, 0.0);
  p.lambda = 3.0 * touchdown_threshold(bd.m1);
  const auto tr = run(p, RadialField(grid), RadialField(grid), 20.0, bd);
  ASSERT_EQ(tr.verdict, Verdict::touched_down);
  EXPECT_LE(tr.t_td_lo, *tr.bounds.general);
}

TEST(GlobalExistence, SmallVoltageSettlesOnStationarySolution) {
  const auto grid = build_grid(100, 2);
  ModelParams p;
  p.d = 2;
  const auto bd = bound_data(grid, 1.0, 0.0);
  p.lambda = bd.m1 / 100.0;
  const auto tr = run(p, RadialField(grid), std::nullopt, 50.0, bd);
  EXPECT_EQ(tr.verdict, Verdict::small_data_global);
  EXPECT_GT(tr.final_state.u.min(), -0.5);
  const auto st = newton_solve(RadialField(grid), p.lambda, assemble_A(*grid, 1.0, 0.0)).u;
  EXPECT_LT(sup_distance(st, tr.final_state.u), 1e-4);
}

TEST(Run, RejectsInconsistentInput) {
  const auto grid = build_grid(20, 1);
  const auto bd = bound_data(grid, 1.0, 0.0);
  ModelParams p;
  p.lambda = 1.0;
  EXPECT_THROW((void)run(p, RadialField(grid), RadialField(grid), 1.0, bd), Error);  // u1 without inertia
  p.gamma = 1.0;
  EXPECT_THROW((void)run(p, RadialField(grid), std::nullopt, 1.0, bd), Error);
  p.d = 2;
  EXPECT_THROW((void)run(p, RadialField(grid), RadialField(grid), 1.0, bd), Error);
}
