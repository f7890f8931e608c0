#include <gtest/gtest.h>

#include <cmath>

#include "mems4/stationary.hpp"

using namespace mems4;

namespace {

struct Case {
  int d;
  double T;
};

const Case kCases[] = {{1, 0.0}, {1, 50.0}, {2, 0.0}, {2, 50.0}};

Branch branch_for(Case c, int n) {
  ModelParams p;
  p.d = c.d;
  p.T = c.T;
  Branch br = continue_branch(p, build_grid(n, c.d));
  attach_fold(br);
  return br;
}

}  // namespace

TEST(Newton, LinearResponseAtSmallVoltage) {
  const double lambda = 1e-2;
  for (auto [d, denom] : {std::pair{1, 24.0}, {2, 64.0}}) {
    const auto grid = build_grid(200, d);
    const auto res = newton_solve(RadialField(grid), lambda, assemble_A(*grid, 1.0, 0.0));
    EXPECT_NEAR(res.u.center(), -lambda / denom, 0.05 * lambda / denom) << "d=" << d;
  }
}

TEST(Newton, SolvesTheDiscreteEquation) {
  const auto grid = build_grid(100, 2);
  const auto opA = assemble_A(*grid, 1.0, 3.0);
  const auto res = newton_solve(RadialField(grid), 5.0, opA);
  const auto f = residual(res.u, 5.0, opA);
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  // Relative to the size of the terms being balanced.
  EXPECT_LT(scale, 1e-7 * opA.band.max_abs() * res.u.max_abs());
  EXPECT_LE(res.iterations, 10);
  EXPECT_LT(res.u.center(), 0.0);
}

TEST(Newton, FailsAboveTheFold) {
  const auto grid = build_grid(100, 1);
  const auto opA = assemble_A(*grid, 1.0, 0.0);
  const double m1 = clamped_principal(opA, grid).value;
  EXPECT_THROW((void)newton_solve(RadialField(grid), 1.2 * m1, opA), Error);
}

TEST(Certificates, StableSolutionPasses) {
  const auto grid = build_grid(100, 1);
  const auto opA = assemble_A(*grid, 1.0, 0.0);
  const auto e = clamped_principal(opA, grid);
  const auto u = newton_solve(RadialField(grid), 2.0, opA).u;
  const auto c = certify(u, 2.0, e.value, e.vector);
  EXPECT_TRUE(c.all());
  EXPECT_EQ(c.flags(), Certificates::kAll);
  EXPECT_EQ(c.lap_sign_changes, 1);
  EXPECT_GT(c.rayleigh_value, 0.0);
  EXPECT_LE(c.rayleigh_value, e.value);
}

TEST(Certificates, DetectViolations) {
  const auto grid = build_grid(50, 1);
  const auto opA = assemble_A(*grid, 1.0, 0.0);
  const auto e = clamped_principal(opA, grid);
  const auto positive = RadialField::sample(grid, [](double r) { return 0.1 * (1 - r * r); });
  EXPECT_FALSE(certify(positive, 1.0, e.value, e.vector).bounds);
  const auto wavy = RadialField::sample(grid, [](double r) { return -0.3 * (1 - r) * (1.2 + std::cos(9 * r)); });
  EXPECT_FALSE(certify(wavy, 1.0, e.value, e.vector).monotone);
  const auto flat = RadialField::sample(grid, [](double r) { return -0.5 * (1 - r * r) * (1 - r * r); });
  EXPECT_FALSE(certify(flat, 10.0 * e.value, e.value, e.vector).rayleigh);
}

TEST(Branch, FoldStructure) {
  for (const Case c : kCases) {
    const Branch br = branch_for(c, 100);
    SCOPED_TRACE("d=" + std::to_string(c.d) + " T=" + std::to_string(c.T));
    EXPECT_EQ(br.status, BranchStatus::completed);
    EXPECT_EQ(br.rejected_certificates, 0);
    for (const auto& p : br.points) EXPECT_EQ(p.certificates.flags(), Certificates::kAll);
    ASSERT_TRUE(br.fold.has_value());
    EXPECT_LT(br.fold->lambda, br.m1);
    EXPECT_LE(std::abs(br.fold->mu1), 1e-3 * br.m1);
    EXPECT_LT(br.fold->curvature, 0.0);
    EXPECT_TRUE(br.fold->phi_single_signed);
    // The fold is the largest voltage on the branch.
    for (const auto& p : br.points) EXPECT_LE(p.lambda, br.fold->lambda * (1 + 1e-9));
    ASSERT_TRUE(br.endpoint_gap.has_value());
    EXPECT_LE(*br.endpoint_gap, 5e-2);
  }
}

TEST(Branch, NoSolutionJustAboveFold) {
  const Branch br = branch_for({1, 0.0}, 100);
  const auto opA = assemble_A(*br.grid, 1.0, 0.0);
  EXPECT_THROW((void)newton_solve(br.fold->u, 1.01 * br.fold->lambda, opA), Error);
  EXPECT_NO_THROW((void)newton_solve(br.fold->u, 0.99 * br.fold->lambda, opA));
}

TEST(Branch, FoldConvergesUnderRefinement) {
  const Branch a = branch_for({2, 0.0}, 100);
  const Branch b = branch_for({2, 0.0}, 200);
  EXPECT_LE(std::abs(a.fold->lambda - b.fold->lambda), 0.01 * b.fold->lambda);
}

TEST(Branch, TwoSolutionsBelowFold) {
  for (const Case c : {kCases[0], kCases[3]}) {
    const Branch br = branch_for(c, 100);
    const auto pair = two_solutions_at(0.5 * br.fold->lambda, br);
    EXPECT_GT(pair.mu1_stable, 0.0);
    EXPECT_LT(pair.mu1_unstable, 0.0);
    EXPECT_GT(sup_distance(pair.stable, pair.unstable), 1e-2);
    for (std::size_t i = 0; i < pair.stable.size(); ++i) EXPECT_LE(pair.unstable[i], pair.stable[i] + 1e-14);
    EXPECT_THROW((void)two_solutions_at(1.1 * br.fold->lambda, br), Error);
  }
}

TEST(Branch, EndpointGapShrinksWithStoppingThresholds) {
  ModelParams p;
  const auto grid = build_grid(100, 1);
  ContinuationOptions coarse;
  coarse.lambda_stop = 1e-2;
  coarse.eps_min = 1e-2;
  ContinuationOptions fine;
  const Branch a = continue_branch(p, grid, coarse);
  const Branch b = continue_branch(p, grid, fine);
  ASSERT_TRUE(a.endpoint_gap && b.endpoint_gap);
  EXPECT_LT(*b.endpoint_gap, *a.endpoint_gap);
}
