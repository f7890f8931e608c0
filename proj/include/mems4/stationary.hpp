#pragma once

// Stationary solutions A_h u + lambda g(u) = 0 and the solution curve
// s -> (Lambda(s), U(s)) from (0, 0) through the fold to the end point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mems4/band_linalg.hpp"
#include "mems4/closed_form.hpp"
#include "mems4/error.hpp"
#include "mems4/model.hpp"
#include "mems4/radial.hpp"

namespace mems4 {

/// A_h u + lambda g(u) on the n unknowns.
[[nodiscard]] inline std::vector<double> residual(const RadialField& u, double lambda, const DiscreteOperator& opA) {
  std::vector<double> f = opA.apply(u.unknowns());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += lambda * g(u[i]);
  return f;
}

namespace detail {

inline double inf_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Largest t in {1, 1/2, 1/4, ...} with 1 + u + t du >= keep (1 + u) at every node.
inline double damping_factor(std::span<const double> u, std::span<const double> du, double keep = 0.1) {
  double t = 1.0;
  for (int k = 0; k < 60; ++k) {
    bool ok = true;
    for (std::size_t i = 0; i < du.size() && ok; ++i) {
      const double gap = 1.0 + u[i];
      const double next = gap + t * du[i];
      ok = next >= keep * gap && admissible(next - 1.0);
    }
    if (ok) return t;
    t *= 0.5;
  }
  return 0.0;
}

// Rounding level of the residual: A_h amplifies nodal errors by ||A_h||.
inline double residual_noise(const DiscreteOperator& opA, const RadialField& u, double lambda) {
  double gmax = 0.0;
  for (double v : u.unknowns()) gmax = std::max(gmax, g(v));
  return 64.0 * std::numeric_limits<double>::epsilon() * (opA.band.max_abs() * u.max_abs() + lambda * gmax);
}

// Newton steps contract quadratically until they reach the rounding floor
// of the residual; a step that is already small and no longer contracting
// is at that floor.
class StepMonitor {
 public:
  explicit StepMonitor(double tol) : tol_(tol) {}
  bool converged(double step, double scale) {
    const bool done = step <= tol_ * scale || (step <= kFloor * scale && step >= 0.5 * prev_);
    prev_ = step;
    return done;
  }

 private:
  static constexpr double kFloor = 1e-7;
  double tol_;
  double prev_ = std::numeric_limits<double>::infinity();
};

}  // namespace detail

struct NewtonOptions {
  double tol = 1e-10;      // on ||du||_inf relative to max(1, ||u||_inf), or the rounding floor
  int max_iterations = 30;
};

struct NewtonResult {
  RadialField u;
  int iterations = 0;
  double residual = 0.0;  // ||A_h u + lambda g(u)||_inf
};

/// Damped Newton at fixed lambda. The residual of a converged iterate sits
/// at the rounding level eps ||A_h|| ||u||, which grows like n^4; convergence
/// is therefore declared on the Newton step.
[[nodiscard]] inline NewtonResult newton_solve(const RadialField& u0, double lambda, const DiscreteOperator& opA,
                                               const NewtonOptions& opts = {}) {
  RadialField u = u0;
  u[u.size() - 1] = 0.0;
  for (double v : u.values())
    if (!admissible(v)) throw Error(Errc::domain, "newton_solve: initial guess not admissible");
  detail::StepMonitor monitor(opts.tol);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    auto f = residual(u, lambda, opA);
    const auto J = assemble_A_plus_potential(opA, lambda, u);
    const BandLU lu = lu_factor(J);
    lu.solve_in_place(f);
    for (double& v : f) v = -v;
    const double t = detail::damping_factor(u.unknowns(), f);
    if (t == 0.0) throw Error(Errc::no_convergence, "newton_solve: damping underflow");
    auto x = u.unknowns();
    for (std::size_t i = 0; i < f.size(); ++i) x[i] += t * f[i];
    const double step = t * detail::inf_norm(f);
    if (t == 1.0 && monitor.converged(step, std::max(1.0, u.max_abs()))) {
      const auto r = residual(u, lambda, opA);
      return {u, it, detail::inf_norm(r)};
    }
  }
  throw Error(Errc::no_convergence, "newton_solve: iteration limit reached");
}

// ---------------------------------------------------------------------------
// Certificates

struct Certificates {
  bool bounds = true;          // -1 < u <= 0
  bool monotone = true;        // minimum at r = 0 and non-decreasing profile
  bool rayleigh = true;        // 0 <= lambda (g(u), phi1)_W <= m1
  bool sign_change = true;     // at most one sign change of Lap_h u on nodes 1..n, exactly one if u != 0
  bool finite_integral = true; // int (1+u)^-3 finite
  double rayleigh_value = 0.0;
  double inv_cube_integral = 0.0;
  double i_d_center = 0.0;        // I_d(1 + u(0))
  double lambda_i_d = 0.0;        // lambda I_d(1 + u(0))
  int lap_sign_changes = 0;

  enum Bit : unsigned { kBounds = 1, kMonotone = 2, kRayleigh = 4, kSignChange = 8, kFinite = 16 };
  static constexpr unsigned kAll = 31;

  [[nodiscard]] unsigned flags() const {
    return (bounds ? kBounds : 0u) | (monotone ? kMonotone : 0u) | (rayleigh ? kRayleigh : 0u) |
           (sign_change ? kSignChange : 0u) | (finite_integral ? kFinite : 0u);
  }
  [[nodiscard]] bool all() const { return flags() == kAll; }
};

struct CertifyOptions {
  double monotone_slack = 1e-8;
  double lap_zero_rel = 1e-9;  // |Lap_h u| below this times max |Lap_h u| counts as zero
};

/// phi1 is the principal eigenvector of A_h with sum w |phi1| = 1.
[[nodiscard]] inline Certificates certify(const RadialField& u, double lambda, double m1, const RadialField& phi1,
                                          const CertifyOptions& opts = {}) {
  const RadialGrid& grid = *u.grid();
  const int n = grid.n();
  Certificates c;
  for (double v : u.values()) c.bounds = c.bounds && v > -1.0 && v <= 0.0;
  const double u0 = u.center();
  for (int i = 1; i <= n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (u[k] < u0 - opts.monotone_slack || u[k] < u[k - 1] - opts.monotone_slack) c.monotone = false;
  }
  if (!c.bounds) {
    c.rayleigh = c.finite_integral = false;
    return c;
  }

  double gphi = 0.0;
  double cube = 0.0;
  for (int i = 0; i <= n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double gap = 1.0 + u[k];
    gphi += grid.weight(i) * phi1[k] / (gap * gap);
    cube += grid.weight(i) / (gap * gap * gap);
  }
  c.rayleigh_value = lambda * gphi;
  c.rayleigh = c.rayleigh_value >= 0.0 && c.rayleigh_value <= m1 * (1.0 + 1e-10);
  c.inv_cube_integral = cube;
  c.finite_integral = std::isfinite(cube);
  c.i_d_center = i_d(1.0 + u0, grid.d());
  c.lambda_i_d = lambda * c.i_d_center;

  const RadialField lap = laplacian_apply(u);
  double lmax = 0.0;
  for (int i = 1; i <= n; ++i) lmax = std::max(lmax, std::abs(lap[static_cast<std::size_t>(i)]));
  int last = 0;
  for (int i = 1; i <= n; ++i) {
    const double v = lap[static_cast<std::size_t>(i)];
    if (std::abs(v) <= opts.lap_zero_rel * lmax) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last != 0 && s != last) ++c.lap_sign_changes;
    last = s;
  }
  c.sign_change = lmax == 0.0 ? true : c.lap_sign_changes == 1;
  return c;
}

// ---------------------------------------------------------------------------
// Continuation

struct BranchPoint {
  double s = 0.0;
  double lambda = 0.0;
  RadialField u;
  double mu1 = 0.0;
  double min_u = 0.0;  // U(s)(0)
  int newton_iters = 0;
  Certificates certificates;
};

struct FoldRecord {
  double s = 0.0;
  double lambda = 0.0;
  RadialField u;
  double mu1 = 0.0;
  double curvature = 0.0;  // d^2 Lambda / ds^2 of the local quadratic fit
  RadialField phi_star;    // principal eigenvector of the linearisation, sum w |phi| = 1
  bool phi_single_signed = false;
  std::size_t index = 0;   // branch point with the largest lambda near the fold
};

enum class BranchStatus { completed, stalled, point_limit };

inline const char* to_string(BranchStatus s) {
  switch (s) {
    case BranchStatus::completed: return "completed";
    case BranchStatus::stalled: return "stalled";
    case BranchStatus::point_limit: return "point_limit";
  }
  return "?";
}

struct Branch {
  ModelParams params;
  GridPtr grid;
  double m1 = 0.0;
  RadialField phi1;
  std::vector<BranchPoint> points;
  std::vector<std::size_t> fold_brackets;  // indices i with Lambda increasing into i and decreasing out of it
  std::optional<FoldRecord> fold;
  std::optional<double> endpoint_gap;
  BranchStatus status = BranchStatus::completed;
  std::string stop_reason;
  int rejected_certificates = 0;  // corrector results discarded because a certificate failed
  int pac_start = -1;             // first point computed by pseudo-arclength
};

struct ContinuationOptions {
  double lambda_stop = 1e-3;
  double eps_min = 1e-3;
  double ds_min = 1e-6;
  double ds_max = 0.1;
  double ds_initial = 0.02;
  double dlambda_initial_rel = 0.02;  // natural phase step, times m1
  double dlambda_min_rel = 1e-3;      // below this natural continuation hands over, times m1
  double switch_mu_rel = 0.25;        // hand over once mu1 < this times m1
  double grow = 1.3;
  int fast_iterations = 4;
  int max_corrector_iterations = 10;
  double newton_tol = 1e-10;
  EigenOptions eigen;
  std::size_t max_points = 50000;
  bool compare_endpoint = true;
  CertifyOptions certify;
};

namespace detail {

struct Tangent {
  std::vector<double> du;  // unknowns
  double dlambda = 0.0;
};

inline Tangent secant(const RadialGrid& g, const BranchPoint& a, const BranchPoint& b) {
  Tangent t;
  t.du.resize(static_cast<std::size_t>(g.n()));
  for (std::size_t i = 0; i < t.du.size(); ++i) t.du[i] = b.u[i] - a.u[i];
  t.dlambda = b.lambda - a.lambda;
  const double norm = std::sqrt(weighted_dot(g, t.du, t.du) + t.dlambda * t.dlambda);
  if (norm > 0.0) {
    for (double& v : t.du) v /= norm;
    t.dlambda /= norm;
  }
  return t;
}

inline double arc_distance(const RadialGrid& g, const RadialField& ua, double la, const RadialField& ub, double lb) {
  double s = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    s += g.weight(i) * (ua[k] - ub[k]) * (ua[k] - ub[k]);
  }
  return std::sqrt(s + (la - lb) * (la - lb));
}

struct Corrected {
  RadialField u;
  double lambda = 0.0;
  int iterations = 0;
};

// Bordered Newton for F(u, lambda) = 0 on the hyperplane through the predictor
// (up, lp) orthogonal to the tangent t in the (W, 1) metric.
inline std::optional<Corrected> pac_correct(const DiscreteOperator& opA, RadialField u, double lambda,
                                            const Tangent& t, int max_iterations, double tol) {
  const RadialGrid& g = *u.grid();
  const std::size_t n = static_cast<std::size_t>(g.n());
  for (double v : u.unknowns())
    if (!admissible(v)) return std::nullopt;
  const RadialField up = u;
  const double lp = lambda;
  StepMonitor monitor(tol);
  try {
    for (int it = 1; it <= max_iterations; ++it) {
      auto a = residual(u, lambda, opA);
      std::vector<double> b(n);
      for (std::size_t i = 0; i < n; ++i) b[i] = mems4::g(u[i]);
      double N = t.dlambda * (lambda - lp);
      for (std::size_t i = 0; i < n; ++i) N += g.weight(static_cast<int>(i)) * t.du[i] * (u[i] - up[i]);
      const BandLU lu = lu_factor(assemble_A_plus_potential(opA, lambda, u));
      lu.solve_in_place(a);
      lu.solve_in_place(b);
      const double denom = t.dlambda - weighted_dot(g, t.du, b);
      if (!(std::abs(denom) > 1e-14)) return std::nullopt;
      const double dl = (-N + weighted_dot(g, t.du, a)) / denom;
      std::vector<double> du(n);
      for (std::size_t i = 0; i < n; ++i) du[i] = -a[i] - dl * b[i];
      const double damp = damping_factor(u.unknowns(), du);
      if (damp == 0.0) return std::nullopt;
      auto x = u.unknowns();
      for (std::size_t i = 0; i < n; ++i) x[i] += damp * du[i];
      lambda += damp * dl;
      const double step = damp * std::max(inf_norm(du), std::abs(dl) / std::max(1.0, std::abs(lambda)));
      if (damp == 1.0 && monitor.converged(step, std::max(1.0, u.max_abs()))) return Corrected{std::move(u), lambda, it};
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

inline std::optional<NewtonResult> try_newton(const RadialField& u0, double lambda, const DiscreteOperator& opA,
                                              int max_iterations, double tol) {
  try {
    return newton_solve(u0, lambda, opA, {tol, max_iterations});
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Principal eigenpair of A_h, normalised to sum w |phi| = 1.
[[nodiscard]] inline EigenPair clamped_principal(const DiscreteOperator& opA, const GridPtr& grid,
                                                 const EigenOptions& eopts = {}) {
  return principal_eigen(opA, grid, 0.0, eopts);
}

/// Traces the curve from (0, 0) through the fold until lambda < lambda_stop
/// or 1 + u(0) < eps_min. Natural continuation in lambda while the stable
/// branch is well conditioned, then pseudo-arclength with a secant predictor.
[[nodiscard]] inline Branch continue_branch(const ModelParams& params, const GridPtr& grid,
                                            const ContinuationOptions& opts = {}) {
  require(params.d == grid->d(), Errc::invalid_argument, "grid dimension differs from params.d");
  ModelParams p = params;
  p.lambda = 0.0;
  p.validate();
  const RadialGrid& g = *grid;
  const auto opA = assemble_A(g, p.B, p.T);
  const EigenPair base = clamped_principal(opA, grid, opts.eigen);

  Branch br;
  br.params = p;
  br.grid = grid;
  br.m1 = base.value;
  br.phi1 = base.vector;
  const double m1 = br.m1;

  std::vector<double> eig_start(base.vector.unknowns().begin(), base.vector.unknowns().end());
  double last_mu = m1;

  auto make_point = [&](double s, double lambda, RadialField u, int iters) -> std::optional<BranchPoint> {
    BranchPoint pt;
    pt.s = s;
    pt.lambda = lambda;
    pt.newton_iters = iters;
    pt.min_u = u.center();
    pt.certificates = certify(u, lambda, m1, br.phi1, opts.certify);
    if (!pt.certificates.all()) {
      ++br.rejected_certificates;
      return std::nullopt;
    }
    try {
      const double shift = std::min(last_mu, 0.0) - 0.1 * m1 - 0.5 * std::abs(last_mu);
      const EigenPair e = linearized_eigen(u, lambda, opA, shift, eig_start, opts.eigen);
      pt.mu1 = e.value;
      eig_start.assign(e.vector.unknowns().begin(), e.vector.unknowns().end());
    } catch (const Error&) {
      return std::nullopt;
    }
    pt.u = std::move(u);
    return pt;
  };

  auto finished = [&](const BranchPoint& pt) -> bool {
    if (pt.lambda < opts.lambda_stop && br.pac_start >= 0) {
      br.stop_reason = "lambda below lambda_stop";
      return true;
    }
    if (1.0 + pt.min_u < opts.eps_min) {
      br.stop_reason = "1 + u(0) below eps_min";
      return true;
    }
    return false;
  };

  {
    auto first = make_point(0.0, 0.0, RadialField(grid), 0);
    first->mu1 = m1;
    br.points.push_back(std::move(*first));
  }

  // Natural continuation.
  double dl = opts.dlambda_initial_rel * m1;
  const double dl_min = opts.dlambda_min_rel * m1;
  while (br.points.back().mu1 > opts.switch_mu_rel * m1 && dl >= dl_min) {
    const BranchPoint& cur = br.points.back();
    std::vector<double> rhs(static_cast<std::size_t>(g.n()));
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -mems4::g(cur.u[i]);
    std::vector<double> udot;
    try {
      udot = lu_factor(assemble_A_plus_potential(opA, cur.lambda, cur.u)).solve(rhs);
    } catch (const Error&) {
      break;
    }
    RadialField pred = cur.u;
    for (std::size_t i = 0; i < udot.size(); ++i) pred[i] += dl * udot[i];
    bool admissible_pred = true;
    for (double v : pred.values()) admissible_pred = admissible_pred && admissible(v);
    std::optional<NewtonResult> nr;
    if (admissible_pred)
      nr = detail::try_newton(pred, cur.lambda + dl, opA, opts.max_corrector_iterations, opts.newton_tol);
    std::optional<BranchPoint> pt;
    if (nr) {
      const double s = cur.s + detail::arc_distance(g, cur.u, cur.lambda, nr->u, cur.lambda + dl);
      pt = make_point(s, cur.lambda + dl, nr->u, nr->iterations);
    }
    if (!pt || pt->mu1 <= 0.0) {
      dl *= 0.5;
      continue;
    }
    last_mu = pt->mu1;
    const int iters = pt->newton_iters;
    br.points.push_back(std::move(*pt));
    if (iters <= opts.fast_iterations) dl *= opts.grow;
    if (br.points.size() >= opts.max_points) break;
  }

  // Pseudo-arclength continuation.
  if (br.points.size() < 2) throw Error(Errc::stall, "continuation could not leave lambda = 0");
  br.pac_start = static_cast<int>(br.points.size());
  double ds = std::clamp(detail::arc_distance(g, br.points[br.points.size() - 2].u, br.points[br.points.size() - 2].lambda,
                                              br.points.back().u, br.points.back().lambda),
                         opts.ds_min, opts.ds_max);
  br.status = BranchStatus::completed;
  while (true) {
    if (br.points.size() >= opts.max_points) {
      br.status = BranchStatus::point_limit;
      br.stop_reason = "point limit reached";
      break;
    }
    const BranchPoint& prev = br.points[br.points.size() - 2];
    const BranchPoint& cur = br.points.back();
    const auto t = detail::secant(g, prev, cur);
    // Aim the predictor no further than half of a stopping threshold, so the
    // last point reflects lambda_stop and eps_min instead of one long step.
    double step = ds;
    if (t.dlambda < 0.0 && cur.lambda > opts.lambda_stop)
      step = std::min(step, (cur.lambda - 0.5 * opts.lambda_stop) / -t.dlambda);
    const double gap = 1.0 + cur.u.center();
    if (t.du[0] < 0.0 && gap > opts.eps_min) step = std::min(step, (gap - 0.5 * opts.eps_min) / -t.du[0]);
    RadialField pred = cur.u;
    for (std::size_t i = 0; i < t.du.size(); ++i) pred[i] += step * t.du[i];
    const double lpred = cur.lambda + step * t.dlambda;

    std::optional<BranchPoint> pt;
    if (lpred > 0.0) {
      auto c = detail::pac_correct(opA, pred, lpred, t, opts.max_corrector_iterations, opts.newton_tol);
      if (c && c->lambda > 0.0) {
        // Reject corrections that turn back on the curve.
        double dot = t.dlambda * (c->lambda - cur.lambda);
        for (int i = 0; i < g.n(); ++i) {
          const auto k = static_cast<std::size_t>(i);
          dot += g.weight(i) * t.du[k] * (c->u[k] - cur.u[k]);
        }
        const double len = detail::arc_distance(g, cur.u, cur.lambda, c->u, c->lambda);
        if (dot > 0.5 * len) pt = make_point(cur.s + len, c->lambda, std::move(c->u), c->iterations);
      }
    }
    if (!pt) {
      ds *= 0.5;
      if (ds < opts.ds_min) {
        br.status = BranchStatus::stalled;
        br.stop_reason = "step size underflow";
        break;
      }
      continue;
    }
    last_mu = pt->mu1;
    const int iters = pt->newton_iters;
    br.points.push_back(std::move(*pt));
    const std::size_t k = br.points.size() - 1;
    if (k >= 2 && br.points[k - 1].lambda > br.points[k - 2].lambda && br.points[k].lambda < br.points[k - 1].lambda)
      br.fold_brackets.push_back(k - 1);
    if (finished(br.points.back())) break;
    if (iters <= opts.fast_iterations) ds = std::min(ds * opts.grow, opts.ds_max);
  }

  if (opts.compare_endpoint && br.status == BranchStatus::completed) {
    const OmegaProfile w(p.d, p.B, p.T);
    br.endpoint_gap = sup_distance(br.points.back().u, w.sample(grid));
  }
  return br;
}

// ---------------------------------------------------------------------------
// Fold

struct FoldOptions {
  int refinements = 8;
  double shrink = 0.25;
  double tol = 1e-12;  // relative change of s*
};

namespace detail {

// Quadratic through three (s, lambda) samples: returns vertex s and 2a.
inline std::pair<double, double> quadratic_vertex(const double s[3], const double l[3]) {
  const double d01 = (l[1] - l[0]) / (s[1] - s[0]);
  const double d12 = (l[2] - l[1]) / (s[2] - s[1]);
  const double a = (d12 - d01) / (s[2] - s[0]);
  const double b = d01 - a * (s[0] + s[1]);
  if (!(a < 0.0)) return {std::numeric_limits<double>::quiet_NaN(), 2.0 * a};
  return {-b / (2.0 * a), 2.0 * a};
}

}  // namespace detail

/// Refines the first fold of the branch: fits lambda(s) by a parabola through
/// three points, corrects a point at the vertex by pseudo-arclength from the
/// nearest branch point, and repeats with shrinking spacing.
[[nodiscard]] inline FoldRecord locate_fold(const Branch& br, const FoldOptions& fopts = {},
                                            const ContinuationOptions& copts = {}) {
  if (br.fold_brackets.empty()) throw Error(Errc::no_fold, "no fold in computed range");
  const std::size_t k = br.fold_brackets.front();
  require(k >= 1 && k + 1 < br.points.size(), Errc::no_fold, "fold bracket at the end of the branch");
  const RadialGrid& g = *br.grid;
  const auto opA = assemble_A(g, br.params.B, br.params.T);

  const BranchPoint& base = br.points[k];
  const auto t = detail::secant(g, br.points[k - 1], br.points[k + 1]);
  // Points on the curve parametrised by sigma = projection onto t from base.
  auto at = [&](double sigma) -> std::optional<detail::Corrected> {
    RadialField pred = base.u;
    for (std::size_t i = 0; i < t.du.size(); ++i) pred[i] += sigma * t.du[i];
    return detail::pac_correct(opA, pred, base.lambda + sigma * t.dlambda, t, 30, copts.newton_tol);
  };

  double s[3] = {br.points[k - 1].s - base.s, 0.0, br.points[k + 1].s - base.s};
  double l[3] = {br.points[k - 1].lambda, base.lambda, br.points[k + 1].lambda};
  // Re-express the neighbours in the sigma coordinate.
  for (int j : {0, 2}) {
    const BranchPoint& q = br.points[j == 0 ? k - 1 : k + 1];
    double proj = t.dlambda * (q.lambda - base.lambda);
    for (int i = 0; i < g.n(); ++i) {
      const auto kk = static_cast<std::size_t>(i);
      proj += g.weight(i) * t.du[kk] * (q.u[kk] - base.u[kk]);
    }
    s[j] = proj;
  }
  auto [sv, curv] = detail::quadratic_vertex(s, l);
  if (!std::isfinite(sv)) throw Error(Errc::no_fold, "fold fit is not concave");
  double delta = 0.5 * std::min(std::abs(s[0]), std::abs(s[2]));
  std::optional<detail::Corrected> centre;
  for (int it = 0; it < fopts.refinements; ++it) {
    delta *= fopts.shrink;
    const double ss[3] = {sv - delta, sv, sv + delta};
    double ll[3];
    std::optional<detail::Corrected> mid;
    bool ok = true;
    for (int j = 0; j < 3 && ok; ++j) {
      auto c = at(ss[j]);
      if (!c) {
        ok = false;
        break;
      }
      ll[j] = c->lambda;
      if (j == 1) mid = std::move(c);
    }
    if (!ok) break;
    centre = std::move(mid);
    const auto [nv, nc] = detail::quadratic_vertex(ss, ll);
    if (!std::isfinite(nv)) break;
    const double change = std::abs(nv - sv);
    sv = nv;
    // Later fits resolve the vertex but their lambda differences approach
    // the corrector tolerance; the widest triple gives the curvature.
    if (it == 0) curv = nc;
    if (change <= fopts.tol * std::max(1.0, std::abs(base.s))) break;
  }
  auto fin = at(sv);
  if (fin) centre = std::move(fin);
  if (!centre) throw Error(Errc::no_convergence, "fold correction failed");

  FoldRecord f;
  f.index = k;
  f.s = base.s + sv;
  f.lambda = centre->lambda;
  f.u = std::move(centre->u);
  f.curvature = curv;
  const EigenPair e = linearized_eigen(f.u, f.lambda, opA, -0.1 * br.m1, std::nullopt, copts.eigen);
  f.mu1 = e.value;
  f.phi_star = e.vector;
  f.phi_single_signed = true;
  for (double v : f.phi_star.unknowns()) f.phi_single_signed = f.phi_single_signed && v >= 0.0;
  return f;
}

/// Runs locate_fold and stores the result on the branch.
inline void attach_fold(Branch& br, const FoldOptions& fopts = {}, const ContinuationOptions& copts = {}) {
  if (!br.fold_brackets.empty()) br.fold = locate_fold(br, fopts, copts);
}

struct SolutionPair {
  RadialField stable;
  RadialField unstable;
  double mu1_stable = 0.0;
  double mu1_unstable = 0.0;
};

/// The two branch solutions at lambda in (0, lambda*): one on each side of the fold.
[[nodiscard]] inline SolutionPair two_solutions_at(double lambda, const Branch& br) {
  require(br.fold.has_value() || !br.fold_brackets.empty(), Errc::no_fold, "branch has no fold");
  const std::size_t kf = br.fold ? br.fold->index : br.fold_brackets.front();
  const double lstar = br.fold ? br.fold->lambda : br.points[kf].lambda;
  require(lambda > 0.0 && lambda < lstar, Errc::invalid_argument, "lambda must lie in (0, lambda*)");
  const auto opA = assemble_A(*br.grid, br.params.B, br.params.T);

  auto bracket = [&](std::size_t from, std::size_t to, int dir) -> std::optional<RadialField> {
    for (std::size_t i = from; i != to; i += static_cast<std::size_t>(dir)) {
      const auto& a = br.points[i];
      const auto& b = br.points[i + static_cast<std::size_t>(dir)];
      const double lo = std::min(a.lambda, b.lambda);
      const double hi = std::max(a.lambda, b.lambda);
      if (lambda < lo || lambda > hi) continue;
      const double th = hi == lo ? 0.0 : (lambda - a.lambda) / (b.lambda - a.lambda);
      RadialField u = a.u;
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = (1.0 - th) * a.u[j] + th * b.u[j];
      return u;
    }
    return std::nullopt;
  };
  auto lo = bracket(0, kf, 1);
  std::optional<RadialField> hi;
  if (kf + 1 < br.points.size()) {
    // Walk forward from the fold.
    for (std::size_t i = kf; i + 1 < br.points.size(); ++i) {
      const auto& a = br.points[i];
      const auto& b = br.points[i + 1];
      if (a.lambda >= lambda && b.lambda <= lambda) {
        const double th = (lambda - a.lambda) / (b.lambda - a.lambda);
        RadialField u = a.u;
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = (1.0 - th) * a.u[j] + th * b.u[j];
        hi = std::move(u);
        break;
      }
    }
  }
  if (!lo || !hi) throw Error(Errc::not_applicable, "branch does not bracket lambda on both sides of the fold");
  SolutionPair out;
  out.stable = newton_solve(*lo, lambda, opA).u;
  out.unstable = newton_solve(*hi, lambda, opA).u;
  out.mu1_stable = mu1(out.stable, lambda, opA);
  out.mu1_unstable = mu1(out.unstable, lambda, opA);
  return out;
}

}  // namespace mems4
