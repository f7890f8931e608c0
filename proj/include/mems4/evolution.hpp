#pragma once

// Time integration of
//   gamma^2 u_tt + u_t + A u = -lambda g(u),   u(0) = u0, u_t(0) = u1,
// with implicit Euler for gamma = 0 and the implicit midpoint rule otherwise.
// Touchdown is declared once min u <= -1 + eps_td; the step size is chosen
// so that min u loses at most a fixed fraction of the remaining gap per step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mems4/band_linalg.hpp"
#include "mems4/error.hpp"
#include "mems4/model.hpp"
#include "mems4/radial.hpp"
#include "mems4/stationary.hpp"

namespace mems4 {

struct EvolutionState {
  double t = 0.0;
  RadialField u;
  RadialField v;  // u_t; only used when gamma > 0
  double dt = 0.0;
};

struct EvolutionOptions {
  double dt_initial = 1e-4;
  double dt_min = 1e-14;
  double dt_max = 1e-2;
  bool adaptive = true;
  double max_gap_loss = 0.1;  // per step, fraction of 1 + min u
  double grow = 1.25;
  double eps_td = 1e-3;
  double newton_tol = 1e-12;
  int newton_iterations = 25;
  std::size_t max_steps = 10'000'000;
  double steady_tol = 1e-9;   // ||u_t||_inf below this at the horizon counts as settled
};

/// Analytic inputs of the bounds: (m1, phi1) of A_h and, when known, the fold
/// (lambda*, phi_*). Both eigenvectors satisfy sum w |phi| = 1.
struct BoundData {
  double m1 = 0.0;
  RadialField phi1;
  std::optional<double> lambda_star;
  std::optional<RadialField> phi_star;
};

[[nodiscard]] inline BoundData bound_data(const GridPtr& grid, double B, double T) {
  const auto opA = assemble_A(*grid, B, T);
  const EigenPair e = clamped_principal(opA, grid);
  return {e.value, e.vector, std::nullopt, std::nullopt};
}

[[nodiscard]] inline BoundData bound_data(const Branch& br) {
  BoundData b{br.m1, br.phi1, std::nullopt, std::nullopt};
  if (br.fold) {
    b.lambda_star = br.fold->lambda;
    b.phi_star = br.fold->phi_star;
  }
  return b;
}

struct Functionals {
  double N = 0.0;
  std::optional<double> M;
  double E = 0.0;
};

/// E = gamma^2/2 (v, v)_W + 1/2 <u, u> - lambda (1, 1/(1+u))_W. For gamma = 0
/// the kinetic part is absent and E is the Lyapunov functional.
[[nodiscard]] inline double energy(const EvolutionState& s, const ModelParams& p) {
  const RadialGrid& g = *s.u.grid();
  double pot = 0.0;
  for (int i = 0; i <= g.n(); ++i) pot += g.weight(i) / (1.0 + s.u[static_cast<std::size_t>(i)]);
  double e = 0.5 * inner_h2(s.u, s.u, p.B, p.T) - p.lambda * pot;
  if (p.gamma > 0.0 && s.v.size() == s.u.size()) e += 0.5 * p.gamma * p.gamma * l2_norm(s.v) * l2_norm(s.v);
  return e;
}

[[nodiscard]] inline Functionals functionals(const EvolutionState& s, const RadialField& phi1,
                                             const std::optional<RadialField>& phi_star, const ModelParams& p) {
  const RadialGrid& g = *s.u.grid();
  Functionals f;
  f.N = weighted_dot(g, phi1.values(), s.u.values());
  if (phi_star) f.M = weighted_dot(g, phi_star->values(), s.u.values());
  f.E = energy(s, p);
  return f;
}

/// tau_m <= [1 + N0 + gamma^2 (|N0'| + chi(z_lambda))] / chi(z_lambda), for lambda > 4 m1 / 27.
[[nodiscard]] inline double touchdown_bound_general(const ModelParams& p, double m1, double N0, double dN0) {
  if (!(p.lambda > touchdown_threshold(m1))) throw Error(Errc::not_applicable, "bound needs lambda > 4 m1 / 27");
  const double c = chi_min(m1, p.lambda);
  return (1.0 + N0 + p.gamma * p.gamma * (std::abs(dN0) + c)) / c;
}

/// tau_m <= (1 + K1) / ((lambda - lambda*) g(K0)) with K0 = M0 + gamma^2 |M0'| and
/// K1 = M0 + gamma^2 |M0' + (lambda - lambda*) g(K0)|, for lambda > lambda*.
[[nodiscard]] inline double touchdown_bound_sharp(const ModelParams& p, double lambda_star, double M0, double dM0) {
  if (!(p.lambda > lambda_star)) throw Error(Errc::not_applicable, "bound needs lambda > lambda*");
  const double g2 = p.gamma * p.gamma;
  const double k0 = M0 + g2 * std::abs(dM0);
  const double dl = p.lambda - lambda_star;
  const double gk = g(k0);
  const double k1 = M0 + g2 * std::abs(dM0 + dl * gk);
  return (1.0 + k1) / (dl * gk);
}

namespace detail {

inline bool all_admissible(const RadialField& u) {
  for (double x : u.values())
    if (!admissible(x)) return false;
  return true;
}

}  // namespace detail

/// One implicit Euler step (I/dt + A_h) u+ + lambda g(u+) = u/dt. Returns
/// nullopt when Newton fails; the caller shrinks dt.
[[nodiscard]] inline std::optional<RadialField> step_parabolic(const EvolutionState& s, const ModelParams& p,
                                                               const DiscreteOperator& opA, double dt,
                                                               const EvolutionOptions& opts = {}) {
  const std::size_t n = static_cast<std::size_t>(opA.n_unknowns());
  RadialField x = s.u;
  detail::StepMonitor monitor(opts.newton_tol);
  try {
    for (int it = 0; it < opts.newton_iterations; ++it) {
      std::vector<double> f = opA.apply(x.unknowns());
      for (std::size_t i = 0; i < n; ++i) f[i] += (x[i] - s.u[i]) / dt + p.lambda * g(x[i]);
      DiscreteOperator J = shifted(opA, 1.0 / dt);
      if (p.lambda != 0.0) {
        std::vector<double> pot(n);
        for (std::size_t i = 0; i < n; ++i) pot[i] = p.lambda * g_prime(x[i]);
        J.band.add_diagonal(pot);
      }
      lu_factor(J).solve_in_place(f);
      for (double& v : f) v = -v;
      const double damp = detail::damping_factor(x.unknowns(), f);
      if (damp == 0.0) return std::nullopt;
      for (std::size_t i = 0; i < n; ++i) x[i] += damp * f[i];
      if (damp == 1.0 && monitor.converged(damp * detail::inf_norm(f), std::max(1.0, x.max_abs()))) return x;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

/// One implicit midpoint step for gamma^2 v' + v + A_h u = -lambda g(u), u' = v.
/// v+ = 2 (u+ - u)/dt - v is eliminated, leaving a Newton solve for u+.
[[nodiscard]] inline std::optional<std::pair<RadialField, RadialField>> step_hyperbolic(
    const EvolutionState& s, const ModelParams& p, const DiscreteOperator& opA, double dt,
    const EvolutionOptions& opts = {}) {
  const std::size_t n = static_cast<std::size_t>(opA.n_unknowns());
  const double g2 = p.gamma * p.gamma;
  RadialField x = s.u;
  for (std::size_t i = 0; i < n; ++i) x[i] += dt * s.v[i];
  if (!detail::all_admissible(x)) x = s.u;
  detail::StepMonitor monitor(opts.newton_tol);
  RadialField m(s.u.grid());
  try {
    for (int it = 0; it < opts.newton_iterations; ++it) {
      for (std::size_t i = 0; i <= n; ++i) m[i] = 0.5 * (x[i] + s.u[i]);
      std::vector<double> f = opA.apply(m.unknowns());
      for (std::size_t i = 0; i < n; ++i) {
        const double du = x[i] - s.u[i];
        f[i] += g2 * (2.0 * du / dt - 2.0 * s.v[i]) / dt + du / dt + p.lambda * g(m[i]);
      }
      DiscreteOperator J = opA;
      J.band.scale(0.5);
      J.band.add_identity(2.0 * g2 / (dt * dt) + 1.0 / dt);
      if (p.lambda != 0.0) {
        std::vector<double> pot(n);
        for (std::size_t i = 0; i < n; ++i) pot[i] = 0.5 * p.lambda * g_prime(m[i]);
        J.band.add_diagonal(pot);
      }
      lu_factor(J).solve_in_place(f);
      for (double& v : f) v = -v;
      // The midpoint, not the endpoint, enters g.
      std::vector<double> half(f);
      for (double& v : half) v *= 0.5;
      const double damp = detail::damping_factor(m.unknowns(), half);
      if (damp == 0.0) return std::nullopt;
      for (std::size_t i = 0; i < n; ++i) x[i] += damp * f[i];
      if (!detail::all_admissible(x)) return std::nullopt;
      if (damp == 1.0 && monitor.converged(damp * detail::inf_norm(f), std::max(1.0, x.max_abs()))) {
        RadialField v(s.u.grid());
        for (std::size_t i = 0; i < n; ++i) v[i] = 2.0 * (x[i] - s.u[i]) / dt - s.v[i];
        return std::make_pair(std::move(x), std::move(v));
      }
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

enum class Verdict { touched_down, survived, small_data_global, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::touched_down: return "touched_down";
    case Verdict::survived: return "survived";
    case Verdict::small_data_global: return "small_data_global";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct TraceSample {
  double t = 0.0;
  double min_u = 0.0;
  double N = 0.0;
  double M = std::numeric_limits<double>::quiet_NaN();
  double E = 0.0;
  double dt = 0.0;          // step that produced this sample (0 for the first)
  double dissipation = 0.0; // dt ||v_mid||^2_W over that step (||u+ - u||^2_W / dt for gamma = 0)
};

struct TraceBounds {
  std::optional<double> general;  // N-functional bound, lambda > 4 m1 / 27
  std::optional<double> sharp;    // M-functional bound, lambda > lambda*
  double chi_min = std::numeric_limits<double>::quiet_NaN();
  double N0 = 0.0;
  double dN0 = 0.0;
  std::optional<double> M0;
  std::optional<double> dM0;
};

struct EvolutionTrace {
  ModelParams params;
  std::vector<TraceSample> samples;
  Verdict verdict = Verdict::inconclusive;
  double t_td_lo = std::numeric_limits<double>::quiet_NaN();  // touchdown bracket
  double t_td_hi = std::numeric_limits<double>::quiet_NaN();
  TraceBounds bounds;
  EvolutionState final_state;
  std::string note;

  /// max over steps of (N_k+1 - N_k)/dt_k.
  [[nodiscard]] double max_dN_rate() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < samples.size(); ++k)
      m = std::max(m, (samples[k].N - samples[k - 1].N) / samples[k].dt);
    return m;
  }
  /// E(end) - E(0) + sum of dissipation: the part of the energy change not
  /// accounted for by damping.
  [[nodiscard]] double energy_drift() const {
    if (samples.empty()) return 0.0;
    double d = 0.0;
    for (const auto& s : samples) d += s.dissipation;
    return samples.back().E - samples.front().E + d;
  }
  [[nodiscard]] double max_step_energy_excess() const {
    double m = 0.0;
    for (std::size_t k = 1; k < samples.size(); ++k)
      m = std::max(m, samples[k].E - samples[k - 1].E + samples[k].dissipation);
    return m;
  }
};

/// Integrates to the horizon or to touchdown, sampling N, M, E at every step.
[[nodiscard]] inline EvolutionTrace run(const ModelParams& params, const RadialField& u0,
                                        const std::optional<RadialField>& u1, double horizon, const BoundData& bd,
                                        const EvolutionOptions& opts = {}) {
  params.validate();
  const GridPtr& grid = u0.grid();
  require(params.d == grid->d(), Errc::invalid_argument, "grid dimension differs from params.d");
  require(horizon > 0.0, Errc::invalid_argument, "horizon must be positive");
  require(detail::all_admissible(u0), Errc::domain, "initial deflection must exceed -1");
  require((params.gamma > 0.0) == u1.has_value(), Errc::invalid_argument, "u1 is required exactly when gamma > 0");
  const RadialGrid& g = *grid;
  const auto opA = assemble_A(g, params.B, params.T);
  const bool hyper = params.gamma > 0.0;

  EvolutionTrace tr;
  tr.params = params;
  EvolutionState s;
  s.u = u0;
  s.u[s.u.size() - 1] = 0.0;
  if (hyper) {
    s.v = *u1;
    s.v[s.v.size() - 1] = 0.0;
  }
  s.dt = opts.dt_initial;

  auto sample = [&](double dt, double diss) {
    const auto f = functionals(s, bd.phi1, bd.phi_star, params);
    TraceSample ts{s.t, s.u.min(), f.N, f.M.value_or(std::numeric_limits<double>::quiet_NaN()), f.E, dt, diss};
    tr.samples.push_back(ts);
  };
  sample(0.0, 0.0);

  // Bounds from the data; the time derivatives at 0 are int phi u1.
  tr.bounds.N0 = tr.samples.front().N;
  tr.bounds.dN0 = hyper ? weighted_dot(g, bd.phi1.values(), s.v.values()) : 0.0;
  if (params.lambda > touchdown_threshold(bd.m1)) {
    tr.bounds.chi_min = chi_min(bd.m1, params.lambda);
    tr.bounds.general = touchdown_bound_general(params, bd.m1, tr.bounds.N0, tr.bounds.dN0);
  }
  if (bd.phi_star) {
    tr.bounds.M0 = tr.samples.front().M;
    tr.bounds.dM0 = hyper ? weighted_dot(g, bd.phi_star->values(), s.v.values()) : 0.0;
    if (bd.lambda_star && params.lambda > *bd.lambda_star)
      tr.bounds.sharp = touchdown_bound_sharp(params, *bd.lambda_star, *tr.bounds.M0, *tr.bounds.dM0);
  }

  const double td_level = -1.0 + opts.eps_td;
  double dt = opts.dt_initial;
  std::size_t steps = 0;
  const double t_end_slack = 1e-12 * horizon;
  while (horizon - s.t > t_end_slack) {
    if (++steps > opts.max_steps) {
      tr.note = "step limit reached";
      break;
    }
    // Avoid a sliver step at the horizon: v+ = 2 (u+ - u)/dt - v amplifies rounding.
    const double rem = horizon - s.t;
    const double h = rem <= dt * (1.0 + 1e-6) ? rem : (rem < 2.0 * dt ? 0.5 * rem : dt);
    std::optional<RadialField> un;
    RadialField vn;
    if (hyper) {
      auto r = step_hyperbolic(s, params, opA, h, opts);
      if (r) {
        un = std::move(r->first);
        vn = std::move(r->second);
      }
    } else {
      un = step_parabolic(s, params, opA, h, opts);
    }
    const double gap = 1.0 + s.u.min();
    bool accept = un.has_value();
    if (accept && opts.adaptive) {
      const double loss = s.u.min() - un->min();
      accept = loss <= opts.max_gap_loss * gap || un->min() <= td_level;
    }
    if (!accept) {
      if (!opts.adaptive && !un) {
        tr.note = "fixed-step solve failed";
        break;
      }
      dt = 0.5 * h;
      if (dt < opts.dt_min) {
        if (gap <= 10.0 * opts.eps_td) {
          tr.verdict = Verdict::touched_down;
          tr.t_td_lo = s.t;
          tr.t_td_hi = s.t + 2.0 * dt;
          tr.note = "step size collapse near touchdown";
        } else {
          tr.note = "step size collapse";
        }
        tr.final_state = s;
        return tr;
      }
      continue;
    }

    // Dissipation over the step: dt ||(u+ - u)/dt||^2_W.
    double diss = 0.0;
    for (int i = 0; i <= g.n(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double rate = ((*un)[k] - s.u[k]) / h;
      diss += g.weight(i) * rate * rate;
    }
    diss *= h;
    double rate_max = 0.0;
    for (std::size_t k = 0; k < s.u.size(); ++k) rate_max = std::max(rate_max, std::abs((*un)[k] - s.u[k]) / h);
    const double loss = s.u.min() - un->min();
    s.u = std::move(*un);
    if (hyper) s.v = std::move(vn);
    s.t += h;
    s.dt = h;
    sample(h, diss);

    if (s.u.min() <= td_level) {
      tr.verdict = Verdict::touched_down;
      tr.t_td_lo = s.t - h;
      tr.t_td_hi = s.t;
      tr.final_state = s;
      return tr;
    }
    if (horizon - s.t <= t_end_slack) {
      const bool steady = rate_max <= opts.steady_tol && (!hyper || l2_norm(s.v) <= opts.steady_tol);
      tr.verdict = steady ? Verdict::small_data_global : Verdict::survived;
      break;
    }
    if (opts.adaptive && loss <= 0.5 * opts.max_gap_loss * gap) dt = std::min(h * opts.grow, opts.dt_max);
    else if (opts.adaptive) dt = h;
  }
  tr.final_state = s;
  return tr;
}

}  // namespace mems4
