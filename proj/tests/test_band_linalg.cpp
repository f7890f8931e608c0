#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "mems4/band_linalg.hpp"

using namespace mems4;

namespace {

// Symmetric W^(1/2) A W^(-1/2), whose spectrum equals that of A.
Eigen::VectorXd dense_spectrum(const DiscreteOperator& op, const RadialGrid& g) {
  const int n = op.n_unknowns();
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = std::sqrt(g.weight(i) / g.weight(j)) * op.band(i, j);
  S = 0.5 * (S + S.transpose()).eval();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

// First positive root of cos(2b) cosh(2b) = 1 by bisection on [1, 3].
double clamped_beam_beta() {
  auto f = [](double b) { return std::cos(2 * b) * std::cosh(2 * b) - 1.0; };
  double lo = 2.0, hi = 2.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(BandLU, MatchesDenseSolve) {
  const auto grid = build_grid(40, 2);
  const auto op = shifted(assemble_A(*grid, 1.0, 2.0), -500.0);  // indefinite
  const int n = op.n_unknowns();
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = op.band(i, j);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b(i) = dist(rng);
  const Eigen::VectorXd ref = M.fullPivLu().solve(b);
  const auto x = lu_solve(lu_factor(op), std::vector<double>(b.data(), b.data() + n));
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], ref(i), 1e-9 * ref.cwiseAbs().maxCoeff());
}

TEST(BandLU, DetectsSingularMatrix) {
  BandMatrix a(4, 1, 1);
  a.at(0, 0) = 1.0;
  a.at(1, 1) = 1.0;
  a.at(3, 3) = 1.0;
  try {
    (void)BandLU(a);
    FAIL() << "expected singular";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::singular);
  }
}

TEST(Inertia, CountsMatchDenseSpectrum) {
  for (int d : {1, 2}) {
    const auto grid = build_grid(40, d);
    const auto op = assemble_A(*grid, 1.0, 10.0);
    const auto ev = dense_spectrum(op, *grid);
    for (int k : {0, 1, 3, 10}) {
      const double sigma = k == 0 ? 0.5 * ev(0) : 0.5 * (ev(k - 1) + ev(k));
      EXPECT_EQ(count_eigenvalues_below(op, *grid, sigma), k) << "d=" << d;
    }
  }
}

TEST(Eigen, PrincipalAndSecondMatchDense) {
  for (int d : {1, 2})
    for (double T : {0.0, 50.0}) {
      const auto grid = build_grid(60, d);
      const auto op = assemble_A(*grid, 1.0, T);
      const auto ev = dense_spectrum(op, *grid);
      const EigenPair e1 = principal_eigen(op, grid, 0.0);
      const EigenPair e2 = second_eigen(op, grid, e1);
      EXPECT_NEAR(e1.value, ev(0), 1e-8 * ev(0)) << "d=" << d << " T=" << T;
      EXPECT_NEAR(e2.value, ev(1), 1e-8 * ev(1)) << "d=" << d << " T=" << T;
      double l1 = 0.0;
      for (int i = 0; i < 60; ++i) {
        EXPECT_GT(e1.vector[static_cast<std::size_t>(i)], 0.0);
        l1 += grid->weight(i) * e1.vector[static_cast<std::size_t>(i)];
      }
      EXPECT_NEAR(l1, 1.0, 1e-12);
    }
}

TEST(Eigen, PrincipalFoundFromPoorShift) {
  const auto grid = build_grid(60, 1);
  const auto op = assemble_A(*grid, 1.0, 0.0);
  const auto ev = dense_spectrum(op, *grid);
  // A shift near the third eigenvalue still returns the lowest one.
  EXPECT_NEAR(principal_eigen(op, grid, ev(2) - 1.0).value, ev(0), 1e-8 * ev(0));
}

TEST(Eigen, LinearizationWithPotentialMatchesDense) {
  const auto grid = build_grid(50, 2);
  const auto opA = assemble_A(*grid, 1.0, 1.0);
  const auto u = RadialField::sample(grid, [](double r) { return -0.6 * (1 - r * r) * (1 - r * r); });
  const double lambda = 20.0;
  const auto ev = dense_spectrum(assemble_A_plus_potential(opA, lambda, u), *grid);
  EXPECT_NEAR(linearized_eigen(u, lambda, opA).value, ev(0), 1e-7 * std::abs(ev(0)));
  EXPECT_NEAR(mu1(u, lambda, opA), ev(0), 1e-7 * std::abs(ev(0)));
}

TEST(Eigen, ClampedBeamTranscendentalRoot) {
  const double beta = clamped_beam_beta();
  EXPECT_NEAR(beta, 2.36502, 1e-5);
  const auto grid = build_grid(400, 1);
  const double m1 = principal_eigen(assemble_A(*grid, 1.0, 0.0), grid, 0.0).value;
  EXPECT_NEAR(m1, std::pow(beta, 4), 0.01 * std::pow(beta, 4));
}
