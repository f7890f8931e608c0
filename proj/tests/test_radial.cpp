#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mems4/radial.hpp"

using namespace mems4;

namespace {

// Exact A u for u = (1 - r^2)^2: Lap u = 4(d+2) r^2 - 4d, Lap^2 u = 8 d (d+2).
double exact_Au(double r, int d, double B, double T) {
  return B * 8.0 * d * (d + 2) - T * (4.0 * (d + 2) * r * r - 4.0 * d);
}

struct Err {
  double err;
  double floor;
};

Err manufactured_error(int n, int d, double B, double T) {
  const auto grid = build_grid(n, d);
  const auto u = RadialField::sample(grid, [](double r) { return (1 - r * r) * (1 - r * r); });
  const auto opA = assemble_A(*grid, B, T);
  const auto Au = opA.apply(u.unknowns());
  Err e{0.0, 64.0 * std::numeric_limits<double>::epsilon() * opA.band.max_abs()};
  for (int i = 2; i <= n - 2; ++i) e.err = std::max(e.err, std::abs(Au[i] - exact_Au(grid->r(i), d, B, T)));
  return e;
}

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  return x;
}

}  // namespace

TEST(Grid, CellMeasuresSumToBall) {
  EXPECT_NEAR(weighted_integral(RadialField::sample(build_grid(37, 1), [](double) { return 1.0; })), 2.0, 1e-14);
  EXPECT_NEAR(weighted_integral(RadialField::sample(build_grid(37, 2), [](double) { return 1.0; })), std::numbers::pi,
              1e-13);
}

TEST(Grid, RejectsTinyGrids) {
  EXPECT_THROW((void)build_grid(7, 1), Error);
  EXPECT_THROW((void)build_grid(20, 3), Error);
}

TEST(Laplacian, ExactOnQuadratics) {
  for (int d : {1, 2}) {
    const auto grid = build_grid(16, d);
    const auto lu = laplacian_apply(RadialField::sample(grid, [](double r) { return 3.0 * r * r - 1.0; }));
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(lu[static_cast<std::size_t>(i)], 6.0 * d, 1e-9) << "d=" << d << " i=" << i;
  }
}

TEST(Operator, IsPentadiagonal) {
  const auto opA = assemble_A(*build_grid(20, 2), 1.0, 3.0);
  EXPECT_EQ(opA.band.lower(), 2);
  EXPECT_EQ(opA.band.upper(), 2);
  EXPECT_EQ(opA.n_unknowns(), 20);
}

TEST(Operator, SelfAdjointInWeightedProduct) {
  for (int d : {1, 2})
    for (double T : {0.0, 7.0}) {
      const auto grid = build_grid(64, d);
      const auto opA = assemble_A(*grid, 1.3, T);
      const auto x = random_vector(64, 1);
      const auto y = random_vector(64, 2);
      const double xay = weighted_dot(*grid, x, opA.apply(y));
      const double axy = weighted_dot(*grid, opA.apply(x), y);
      EXPECT_NEAR(xay, axy, 1e-12 * std::abs(xay)) << "d=" << d << " T=" << T;
    }
}

TEST(Operator, EnergyFormMatchesOperator) {
  for (int d : {1, 2}) {
    const auto grid = build_grid(50, d);
    const auto opA = assemble_A(*grid, 2.0, 5.0);
    const auto u = RadialField::from_unknowns(grid, random_vector(50, 3));
    const auto v = RadialField::from_unknowns(grid, random_vector(50, 4));
    const double form = inner_h2(u, v, 2.0, 5.0);
    EXPECT_NEAR(form, weighted_dot(*grid, u.unknowns(), opA.apply(v.unknowns())), 1e-11 * std::abs(form));
    EXPECT_GT(inner_h2(u, u, 2.0, 5.0), 0.0);
  }
}

TEST(Operator, SecondOrderOnManufacturedSolution) {
  struct Case {
    int d;
    double B, T;
  };
  for (const auto& c : {Case{1, 1, 0}, Case{1, 1, 1}, Case{2, 1, 0}, Case{2, 1, 50}}) {
    const Err e1 = manufactured_error(100, c.d, c.B, c.T);
    const Err e2 = manufactured_error(200, c.d, c.B, c.T);
    if (e2.err <= e2.floor && e1.err <= e1.floor) continue;  // exact up to rounding
    EXPECT_GE(std::log2(e1.err / e2.err), 1.9) << "d=" << c.d << " T=" << c.T;
  }
}

TEST(Operator, StretchingTermIsMinusLaplacian) {
  const auto grid = build_grid(30, 2);
  const auto a0 = assemble_A(*grid, 1.0, 0.0);
  const auto a1 = assemble_A(*grid, 1.0, 4.0);
  const auto lap = assemble_laplacian(*grid);
  const auto x = random_vector(30, 5);
  const auto y0 = a0.apply(x), y1 = a1.apply(x), l = lap.apply(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y1[i] - y0[i], -4.0 * l[i], 1e-9 * std::abs(y0[i]) + 1e-9);
}
