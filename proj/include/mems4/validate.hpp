#pragma once

// Self-check suites behind `mems4 validate`. Each check reports PASS, FAIL or
// SKIP with a one-line detail; convergence checks are skipped on coarse grids.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mems4/band_linalg.hpp"
#include "mems4/bessel.hpp"
#include "mems4/closed_form.hpp"
#include "mems4/evolution.hpp"
#include "mems4/io.hpp"
#include "mems4/model.hpp"
#include "mems4/radial.hpp"
#include "mems4/stationary.hpp"

namespace mems4 {

enum class CheckStatus { pass, fail, skip };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::skip: return "SKIP";
  }
  return "?";
}

struct CheckResult {
  std::string suite;
  std::string name;
  CheckStatus status = CheckStatus::skip;
  std::string detail;
};

struct ValidationConfig {
  int d = 1;
  double B = 1.0;
  double T = 0.0;
  int n = 200;
  int min_convergence_n = 50;  // convergence suites need at least this many cells
  /// Derivative of the nonlinearity used by the mu1 suite; replaceable for mutation tests.
  std::function<double(double)> g_prime_fn = [](double x) { return g_prime(x); };
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

// Sup error of A_h (1-r^2)^2 against the exact image on rows 2..n-2, the rows
// whose stencil reaches neither the axis closure nor the boundary ghost.
inline double interior_operator_error(int n, int d, double B, double T, double* noise = nullptr) {
  const auto grid = build_grid(n, d);
  const auto opA = assemble_A(*grid, B, T);
  const auto u = RadialField::sample(grid, [](double r) { return (1.0 - r * r) * (1.0 - r * r); });
  const auto au = opA.apply(u);
  double err = 0.0;
  for (int i = 2; i <= n - 2; ++i) {
    const double r = grid->r(i);
    const double exact = d == 1 ? 24.0 * B - T * (12.0 * r * r - 4.0) : 64.0 * B - T * (16.0 * r * r - 8.0);
    err = std::max(err, std::abs(au[static_cast<std::size_t>(i)] - exact));
  }
  if (noise) *noise = 64.0 * std::numeric_limits<double>::epsilon() * opA.band.max_abs();
  return err;
}

// First root of cos k cosh k = 1 by bisection on [4, 5]; the clamped beam on
// (-1, 1) has m1 = (k/2)^4.
inline double clamped_beam_m1() {
  double lo = 4.0, hi = 5.0;
  auto f = [](double k) { return std::cos(k) * std::cosh(k) - 1.0; };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  const double beta = 0.25 * (lo + hi);
  return beta * beta * beta * beta;
}

}  // namespace detail

[[nodiscard]] inline std::vector<CheckResult> run_validation(const ValidationConfig& cfg) {
  std::vector<CheckResult> out;
  auto add = [&](std::string suite, std::string name, bool ok, std::string detail) {
    out.push_back({std::move(suite), std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail)});
  };
  auto skip = [&](std::string suite, std::string name, std::string why) {
    out.push_back({std::move(suite), std::move(name), CheckStatus::skip, std::move(why)});
  };
  auto guard = [&](const std::string& suite, const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(suite, name, false, std::string("exception: ") + e.what());
    }
  };
  const bool coarse = cfg.n < cfg.min_convergence_n;
  const auto grid = build_grid(cfg.n, cfg.d);
  const auto opA = assemble_A(*grid, cfg.B, cfg.T);

  guard("model", "nonlinearity", [&] {
    const double h = 1e-5;
    double worst = 0.0;
    for (double x : {-0.9, -0.5, 0.0, 0.7}) {
      worst = std::max(worst, std::abs((g(x + h) - g(x - h)) / (2 * h) - g_prime(x)) / std::abs(g_prime(x)));
      worst = std::max(worst, std::abs((g_prime(x + h) - g_prime(x - h)) / (2 * h) - g_second(x)) / g_second(x));
    }
    const double zl = z_lambda(1.0, 1.0);
    add("model", "nonlinearity", worst < 1e-6 && std::abs(chi_min(1.0, 1.0) - (3.0 * std::cbrt(0.25) - 1.0)) < 1e-12 &&
                                     std::abs(zl - (std::cbrt(2.0) - 1.0)) < 1e-15,
        "max relative derivative defect " + detail::fmt(worst));
  });

  guard("radial", "self_adjoint", [&] {
    // (x, A y)_W = (A x, y)_W for two smooth clamped fields.
    const auto x = RadialField::sample(grid, [](double r) { return std::cos(2.0 * r) * (1 - r * r) * (1 - r * r); });
    const auto y = RadialField::sample(grid, [](double r) { return (1.0 + r) * (1 - r * r) * (1 - r * r); });
    const auto ax = opA.apply(x);
    const auto ay = opA.apply(y);
    const double a = weighted_dot(*grid, x.values(), ay.values());
    const double b = weighted_dot(*grid, ax.values(), y.values());
    const double c = inner_h2(x, y, cfg.B, cfg.T);
    double mag = 0.0;  // scale of the sums, so cancellation does not count as asymmetry
    for (int i = 0; i < cfg.n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      mag += grid->weight(i) * std::abs(x[k] * ay[k]);
    }
    const double rel = std::max(std::abs(a - b), std::abs(a - c)) / mag;
    add("radial", "self_adjoint", rel < 1e-9, "relative asymmetry " + detail::fmt(rel));
  });

  if (coarse) {
    skip("radial", "convergence_order", "n below " + std::to_string(cfg.min_convergence_n));
  } else {
    guard("radial", "convergence_order", [&] {
      double noise1 = 0.0, noise2 = 0.0;
      const double e1 = detail::interior_operator_error(cfg.n, cfg.d, cfg.B, cfg.T, &noise1);
      const double e2 = detail::interior_operator_error(2 * cfg.n, cfg.d, cfg.B, cfg.T, &noise2);
      if (e1 <= noise1 && e2 <= noise2) {
        add("radial", "convergence_order", true, "exact to rounding (" + detail::fmt(e1) + ")");
      } else {
        const double order = std::log2(e1 / e2);
        add("radial", "convergence_order", order >= 1.9, "observed order " + detail::fmt(order));
      }
    });
  }

  double m1 = 0.0;
  RadialField phi1;
  // Eigenvalues of opA are resolved only to about eps |opA|.
  const double eig_floor = 64.0 * std::numeric_limits<double>::epsilon() * opA.band.max_abs();
  guard("eigen", "principal", [&] {
    const EigenPair e = principal_eigen(opA, grid, 0.0);
    m1 = e.value;
    phi1 = e.vector;
    bool positive = true;
    for (int i = 0; i < cfg.n; ++i) positive = positive && e.vector[static_cast<std::size_t>(i)] > 0.0;
    const EigenPair e2 = second_eigen(opA, grid, e);
    add("eigen", "principal", positive && e2.value > e.value && count_eigenvalues_below(opA, *grid, m1 + std::max(1e-8 * m1, eig_floor)) == 1,
        "m1 " + detail::fmt(m1) + ", second " + detail::fmt(e2.value));
  });
  if (coarse || cfg.d != 1 || cfg.T != 0.0) {
    skip("eigen", "beam_oracle", coarse ? "n below " + std::to_string(cfg.min_convergence_n) : "oracle needs d = 1, T = 0");
  } else {
    const double ref = cfg.B * detail::clamped_beam_m1();
    add("eigen", "beam_oracle", std::abs(m1 - ref) <= 0.01 * ref, "m1 " + detail::fmt(m1) + " vs " + detail::fmt(ref));
  }

  guard("eigen", "mu1", [&] {
    // At a stable point 0 < mu1 < m1 because g' < 0; at u = 0, mu1 = m1 - 2 lambda.
    const double lam = 0.05 * m1;
    const auto u = newton_solve(RadialField(grid), lam, opA).u;
    auto mu_with = [&](const RadialField& v) {
      DiscreteOperator J = opA;
      std::vector<double> pot(static_cast<std::size_t>(cfg.n));
      for (std::size_t i = 0; i < pot.size(); ++i) pot[i] = lam * cfg.g_prime_fn(v[i]);
      J.band.add_diagonal(pot);
      return principal_eigen(J, grid, std::min(0.0, m1 - 4.0 * lam)).value;
    };
    const double mu = mu_with(u);
    const double mu0 = mu_with(RadialField(grid));
    const bool ok = mu > 0.0 && mu < m1 && std::abs(mu0 - (m1 - 2.0 * lam)) <= std::max(1e-7 * m1, eig_floor);
    add("eigen", "mu1", ok, "mu1(u_lambda) " + detail::fmt(mu) + ", mu1(0) - (m1 - 2 lambda) " +
                                detail::fmt(mu0 - (m1 - 2.0 * lam)));
  });

  guard("closed_form", "bessel_wronskian", [&] {
    double worst = 0.0;
    for (double x = 0.05; x <= 60.0; x += 0.05) worst = std::max(worst, bessel::wronskian_defect(x));
    add("closed_form", "bessel_wronskian", worst <= 1e-10, "max defect " + detail::fmt(worst));
  });
  guard("closed_form", "omega_invariants", [&] {
    const OmegaProfile w(cfg.d, cfg.B, cfg.T);
    const OmegaChecks c = check_invariants(w);
    add("closed_form", "omega_invariants", c.pass(1e-10),
        std::string("basis ") + to_string(w.basis()) + ", boundary defect " + detail::fmt(c.boundary_defect));
  });

  guard("stationary", "linear_response", [&] {
    const double lam = 1e-2;
    const auto u = newton_solve(RadialField(grid), lam, opA).u;
    const auto lr = linear_response(grid, cfg.B, cfg.T);
    const double rel = std::abs(u.center() + lam * lr.center()) / (lam * lr.center());
    add("stationary", "linear_response", rel <= 0.05, "relative gap to -lambda A^-1[1] " + detail::fmt(rel));
  });

  guard("stationary", "branch", [&] {
    ModelParams p;
    p.d = cfg.d;
    p.B = cfg.B;
    p.T = cfg.T;
    Branch br = continue_branch(p, grid);
    attach_fold(br);
    const FoldRecord& f = *br.fold;
    bool certs = br.rejected_certificates == 0;
    for (const auto& pt : br.points) certs = certs && pt.certificates.all();
    add("stationary", "branch_certificates", certs,
        std::to_string(br.points.size()) + " points, " + std::to_string(br.rejected_certificates) + " rejected");
    add("stationary", "fold", f.lambda < br.m1 && std::abs(f.mu1) <= 1e-3 * br.m1 && f.curvature < 0.0 && f.phi_single_signed,
        "lambda* " + detail::fmt(f.lambda) + ", mu1 " + detail::fmt(f.mu1) + ", curvature " + detail::fmt(f.curvature));
    const SolutionPair sp = two_solutions_at(0.5 * f.lambda, br);
    bool ordered = true;
    bool distinct = false;
    for (std::size_t i = 0; i < sp.stable.size(); ++i) {
      ordered = ordered && sp.unstable[i] <= sp.stable[i] + 1e-12;
      distinct = distinct || sp.unstable[i] < sp.stable[i] - 1e-6;
    }
    add("stationary", "two_solutions", ordered && distinct && sp.mu1_stable > 0.0,
        "mu1 stable " + detail::fmt(sp.mu1_stable) + ", unstable " + detail::fmt(sp.mu1_unstable));
    if (coarse)
      skip("stationary", "endpoint_gap", "n below " + std::to_string(cfg.min_convergence_n));
    else if (br.endpoint_gap)
      add("stationary", "endpoint_gap", *br.endpoint_gap <= 5e-2, "sup |U_end - omega| " + detail::fmt(*br.endpoint_gap));

    // Touchdown above lambda*, parabolic, zero data.
    const BoundData bd = bound_data(br);
    ModelParams q = p;
    q.lambda = 1.1 * f.lambda;
    const auto tr = run(q, RadialField(grid), std::nullopt, 10.0 / (q.lambda - f.lambda), bd);
    add("evolution", "sharp_bound", tr.verdict == Verdict::touched_down && tr.t_td_hi <= *tr.bounds.sharp,
        std::string(to_string(tr.verdict)) + " at " + detail::fmt(tr.t_td_hi) + ", bound " +
            detail::fmt(tr.bounds.sharp.value_or(NAN)));
  });

  guard("evolution", "energy", [&] {
    ModelParams q;
    q.d = cfg.d;
    q.B = cfg.B;
    q.T = cfg.T;
    q.gamma = 1.0;
    q.lambda = 0.05 * m1;
    const BoundData bd{m1, phi1, std::nullopt, std::nullopt};
    EvolutionOptions o;
    o.adaptive = false;
    o.dt_initial = 2e-3;
    const auto tr = run(q, RadialField(grid), RadialField(grid), 1.0, bd, o);
    const double drift = std::abs(tr.energy_drift());
    add("evolution", "energy", drift <= 1e-4 * std::abs(tr.samples.front().E),
        "drift " + detail::fmt(drift) + " of |E(0)| " + detail::fmt(std::abs(tr.samples.front().E)));
  });

  guard("io", "csv_roundtrip", [&] {
    io::CsvTable t;
    t.header = {"a", "b"};
    t.add_row({0.1, -1e-300});
    t.add_row({1.0 / 3.0, 6.02214076e23});
    t.add_row({std::numbers::pi, -0.0});
    const auto back = io::CsvTable::parse(t.render());
    bool same = back.header == t.header && back.rows.size() == t.rows.size();
    for (std::size_t i = 0; same && i < t.rows.size(); ++i)
      for (std::size_t j = 0; j < 2; ++j)
        same = same && std::signbit(back.rows[i][j]) == std::signbit(t.rows[i][j]) && back.rows[i][j] == t.rows[i][j];
    add("io", "csv_roundtrip", same, same ? "bit-exact" : "mismatch");
  });
  return out;
}

}  // namespace mems4
