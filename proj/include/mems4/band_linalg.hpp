#pragma once

// Banded LU with partial pivoting, a Sylvester-inertia count for weighted
// self-adjoint band operators, and shift-invert inverse iteration for the
// principal eigenpair.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <tuple>
#include <span>
#include <vector>

#include "mems4/error.hpp"
#include "mems4/radial.hpp"

namespace mems4 {

class BandLU {
 public:
  BandLU() = default;

  explicit BandLU(const BandMatrix& a) : n_(a.size()), kl_(a.lower()), ku_(a.upper()) {
    width_ = 2 * kl_ + ku_ + 1;
    lu_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(width_), 0.0);
    piv_.assign(static_cast<std::size_t>(n_), 0);
    double scale = a.max_abs();
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) at(i, j) = a(i, j);
    if (scale == 0.0) throw Error(Errc::singular, "zero matrix");
    const double tiny = scale * std::numeric_limits<double>::epsilon() * 1e-2;

    const int uw = kl_ + ku_;  // bandwidth of U after pivoting
    for (int k = 0; k < n_; ++k) {
      const int last = std::min(n_ - 1, k + kl_);
      int p = k;
      double best = std::abs(at(k, k));
      for (int i = k + 1; i <= last; ++i) {
        if (std::abs(at(i, k)) > best) {
          best = std::abs(at(i, k));
          p = i;
        }
      }
      if (best <= tiny) throw Error(Errc::singular, "zero pivot in band LU");
      piv_[static_cast<std::size_t>(k)] = p;
      const int jend = std::min(n_ - 1, k + uw);
      if (p != k)
        for (int j = k; j <= jend; ++j) std::swap(at(k, j), at(p, j));
      const double pivot = at(k, k);
      for (int i = k + 1; i <= last; ++i) {
        const double m = at(i, k) / pivot;
        at(i, k) = m;
        if (m == 0.0) continue;
        for (int j = k + 1; j <= jend; ++j) at(i, j) -= m * at(k, j);
      }
    }
  }

  [[nodiscard]] int size() const noexcept { return n_; }

  void solve_in_place(std::span<double> b) const {
    require(b.size() == static_cast<std::size_t>(n_), Errc::invalid_argument, "rhs length mismatch");
    for (int k = 0; k < n_; ++k) {
      const int p = piv_[static_cast<std::size_t>(k)];
      if (p != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
      const double bk = b[static_cast<std::size_t>(k)];
      for (int i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) b[static_cast<std::size_t>(i)] -= at(i, k) * bk;
    }
    const int uw = kl_ + ku_;
    for (int k = n_ - 1; k >= 0; --k) {
      double s = b[static_cast<std::size_t>(k)];
      for (int j = k + 1; j <= std::min(n_ - 1, k + uw); ++j) s -= at(k, j) * b[static_cast<std::size_t>(j)];
      b[static_cast<std::size_t>(k)] = s / at(k, k);
    }
  }

  [[nodiscard]] std::vector<double> solve(std::span<const double> rhs) const {
    std::vector<double> x(rhs.begin(), rhs.end());
    solve_in_place(x);
    return x;
  }

 private:
  // Row i stores columns i - kl .. i + ku + kl.
  [[nodiscard]] double& at(int i, int j) {
    return lu_[static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j - i + kl_)];
  }
  [[nodiscard]] double at(int i, int j) const {
    return lu_[static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j - i + kl_)];
  }

  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  int width_ = 0;
  std::vector<double> lu_;
  std::vector<int> piv_;
};

[[nodiscard]] inline BandLU lu_factor(const DiscreteOperator& op) { return BandLU(op.band); }

[[nodiscard]] inline std::vector<double> lu_solve(const BandLU& lu, std::span<const double> rhs) { return lu.solve(rhs); }

/// Number of eigenvalues of op below sigma, for op self-adjoint in (.,.)_W.
/// Counts negative pivots of the symmetric band LDL^T of W (op - sigma I).
[[nodiscard]] inline int count_eigenvalues_below(const DiscreteOperator& op, const RadialGrid& grid, double sigma) {
  const BandMatrix& a = op.band;
  const int n = a.size();
  const int p = std::max(a.lower(), a.upper());
  // Lower band of K = W (A - sigma I), symmetrised to absorb rounding.
  std::vector<double> l(static_cast<std::size_t>(n) * static_cast<std::size_t>(p + 1), 0.0);
  auto L = [&](int i, int j) -> double& {
    return l[static_cast<std::size_t>(i) * static_cast<std::size_t>(p + 1) + static_cast<std::size_t>(i - j)];
  };
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - p); j <= i; ++j) {
      double kij = 0.5 * (grid.weight(i) * a(i, j) + grid.weight(j) * a(j, i));
      if (i == j) kij -= sigma * grid.weight(i);
      L(i, j) = kij;
    }
  }
  std::vector<double> dvals(static_cast<std::size_t>(n));
  int negatives = 0;
  const double tiny = std::numeric_limits<double>::min() * 1e4;
  for (int j = 0; j < n; ++j) {
    double dj = L(j, j);
    for (int k = std::max(0, j - p); k < j; ++k) dj -= L(j, k) * L(j, k) * dvals[static_cast<std::size_t>(k)];
    if (std::abs(dj) < tiny) dj = -tiny;
    dvals[static_cast<std::size_t>(j)] = dj;
    if (dj < 0.0) ++negatives;
    for (int i = j + 1; i <= std::min(n - 1, j + p); ++i) {
      double s = L(i, j);
      for (int k = std::max(0, i - p); k < j; ++k) s -= L(i, k) * L(j, k) * dvals[static_cast<std::size_t>(k)];
      L(i, j) = s / dj;
    }
  }
  return negatives;
}

struct EigenPair {
  double value = 0.0;
  RadialField vector;   // normalised: sum_i w_i |v_i| = 1, v_0 >= 0
  double residual = 0.0; // ||op v - value v||_W / ||v||_W
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-9;     // relative eigenvalue increment at convergence
  int max_iterations = 200;
  bool verify_principal = true;  // inertia check (needs W-self-adjoint op)
};

namespace detail {

inline double wnorm(const RadialGrid& g, std::span<const double> x) { return std::sqrt(weighted_dot(g, x, x)); }

inline void normalise_w2(const RadialGrid& g, std::vector<double>& x) {
  const double s = wnorm(g, x);
  require(s > 0.0 && std::isfinite(s), Errc::no_convergence, "eigenvector iterate vanished");
  for (double& v : x) v /= s;
}

inline void w_orthogonalise(const RadialGrid& g, std::vector<double>& x, std::span<const double> against) {
  const double c = weighted_dot(g, x, against) / weighted_dot(g, against, against);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * against[i];
}

// Rayleigh quotient and residual for a W-normalised iterate.
inline std::pair<double, double> rayleigh(const DiscreteOperator& op, const RadialGrid& g, std::span<const double> x) {
  const auto ax = op.apply(x);
  const double rho = weighted_dot(g, x, ax) / weighted_dot(g, x, x);
  std::vector<double> r(ax.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ax[i] - rho * x[i];
  return {rho, wnorm(g, r) / wnorm(g, x)};
}

// Gershgorin lower bound of the W-symmetrised operator W^{1/2} A W^{-1/2}.
inline double gershgorin_lower(const DiscreteOperator& op, const RadialGrid& g) {
  const BandMatrix& a = op.band;
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.size(); ++i) {
    double off = 0.0;
    for (int j = std::max(0, i - a.lower()); j <= std::min(a.size() - 1, i + a.upper()); ++j)
      if (j != i) off += std::abs(a(i, j)) * std::sqrt(g.weight(i) / g.weight(j));
    lo = std::min(lo, a(i, i) - off);
  }
  return lo;
}

inline std::vector<double> default_start(const RadialGrid& g) {
  std::vector<double> x(static_cast<std::size_t>(g.n()));
  for (int i = 0; i < g.n(); ++i) {
    const double s = 1.0 - g.r(i) * g.r(i);
    x[static_cast<std::size_t>(i)] = s * s;
  }
  return x;
}

struct IterationResult {
  std::vector<double> x;
  double rho = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Inverse iteration from a fixed shift; Rayleigh-quotient shifts once the
// iterate has settled. Optional W-orthogonal deflation.
inline IterationResult inverse_iteration(const DiscreteOperator& op, const RadialGrid& g, double shift,
                                         std::vector<double> x, const EigenOptions& opts, bool rq_acceleration,
                                         std::span<const double> deflate = {}) {
  IterationResult res;
  if (!deflate.empty()) w_orthogonalise(g, x, deflate);
  normalise_w2(g, x);
  auto [rho, resid] = rayleigh(op, g, x);
  double sigma = shift;
  std::optional<BandLU> lu;
  const double scale = std::max(1.0, std::abs(rho));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double op_max = op.band.max_abs();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (!lu) {
      for (int attempt = 0;; ++attempt) {
        try {
          lu.emplace(shifted(op, -sigma).band);
          break;
        } catch (const Error& e) {
          if (e.code() != Errc::singular || attempt > 8) throw;
          sigma -= 1e-7 * std::max(1.0, std::abs(sigma)) * (attempt + 1);  // shift hit an eigenvalue
        }
      }
    }
    // With (op - sigma) y = x, the Rayleigh quotient of y is sigma + (y, x)/(y, y)
    // and its residual is |x - (rho - sigma) y| / |y|.
    const std::vector<double> xin = x;
    lu->solve_in_place(x);
    const double yy = weighted_dot(g, x, x);
    const double theta = weighted_dot(g, x, xin) / yy;
    const double prev = rho;
    rho = sigma + theta;
    {
      std::vector<double> r(x.size());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = xin[i] - theta * x[i];
      resid = wnorm(g, r) / std::sqrt(yy);
    }
    if (!deflate.empty()) w_orthogonalise(g, x, deflate);
    normalise_w2(g, x);
    res.iterations = it;
    const double inc = std::abs(rho - prev);
    // The solve's backward error is of order eps |op|, which bounds how well rho can settle.
    const double noise = 64.0 * eps * std::max({1.0, std::abs(rho), std::abs(sigma), op_max});
    if (inc <= std::max(opts.tol * std::max(1.0, std::abs(rho)), noise) && resid <= std::sqrt(opts.tol) * scale) {
      res.converged = true;
      break;
    }
    if (rq_acceleration && resid <= 1e-2 * std::max(scale, std::abs(rho - sigma))) {
      const double next = rho - 1e-9 * std::max(1.0, std::abs(rho));
      if (next != sigma) {
        sigma = next;
        lu.reset();
      }
    }
  }
  res.x = std::move(x);
  res.rho = rho;
  res.residual = resid;
  return res;
}

inline EigenPair finish_pair(const RadialGrid& g, GridPtr grid, IterationResult&& r) {
  double l1 = 0.0;
  for (int i = 0; i < g.n(); ++i) l1 += g.weight(i) * std::abs(r.x[static_cast<std::size_t>(i)]);
  double sign = r.x.front() < 0.0 ? -1.0 : 1.0;
  for (double& v : r.x) v *= sign / l1;
  EigenPair out;
  out.value = r.rho;
  out.vector = RadialField::from_unknowns(std::move(grid), r.x);
  out.residual = r.residual;
  out.iterations = r.iterations;
  return out;
}

}  // namespace detail

/// Smallest eigenpair of op (self-adjoint in (.,.)_W), by shift-invert
/// inverse iteration from `shift` with Rayleigh-quotient acceleration. When
/// the result fails the inertia check (some eigenvalue lies below it), the
/// shift is re-selected by inertia bisection and the iteration repeated.
[[nodiscard]] inline EigenPair principal_eigen(const DiscreteOperator& op, const GridPtr& grid, double shift,
                                               const EigenOptions& opts = {},
                                               std::optional<std::vector<double>> start = std::nullopt) {
  const RadialGrid& g = *grid;
  require(op.n_unknowns() == g.n(), Errc::invalid_argument, "operator/grid size mismatch");
  require(opts.tol > 0.0, Errc::invalid_argument, "tolerance must be positive");
  std::vector<double> x0 = start ? std::move(*start) : detail::default_start(g);

  auto is_principal = [&](const detail::IterationResult& r) {
    if (!opts.verify_principal) return true;
    const double margin = std::max(1e-7 * std::max(1.0, std::abs(r.rho)), 10.0 * r.residual);
    return count_eigenvalues_below(op, g, r.rho - margin) == 0;
  };

  auto first = detail::inverse_iteration(op, g, shift, x0, opts, true);
  if (first.converged && is_principal(first)) return detail::finish_pair(g, grid, std::move(first));

  // Bisection on the inertia count isolates the lowest eigenvalue in
  // [lo, hi]; any Rayleigh quotient is an upper bound.
  double lo = detail::gershgorin_lower(op, g) - 1.0;
  double hi = detail::rayleigh(op, g, x0).first + 1e-12;
  if (first.converged) hi = std::min(hi, first.rho + 1e-9 * std::max(1.0, std::abs(first.rho)));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_eigenvalues_below(op, g, mid) >= 1)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-4 * std::max(1.0, std::abs(hi)) && count_eigenvalues_below(op, g, hi) == 1) break;
  }
  auto second = detail::inverse_iteration(op, g, lo, x0, opts, true);
  if (!second.converged) throw Error(Errc::no_convergence, "principal eigenpair did not converge");
  return detail::finish_pair(g, grid, std::move(second));
}

/// Second eigenpair by inverse iteration deflated against `first`.
[[nodiscard]] inline EigenPair second_eigen(const DiscreteOperator& op, const GridPtr& grid, const EigenPair& first,
                                            const EigenOptions& opts = {}) {
  const RadialGrid& g = *grid;
  std::vector<double> against(first.vector.unknowns().begin(), first.vector.unknowns().end());
  std::vector<double> x0(static_cast<std::size_t>(g.n()));
  for (int i = 0; i < g.n(); ++i) x0[static_cast<std::size_t>(i)] = std::cos(3.0 * g.r(i)) * (1.0 - g.r(i));
  // Shift at the first eigenvalue: the deflated iteration converges to the next one up.
  auto r = detail::inverse_iteration(op, g, first.value, x0, opts, false, against);
  if (!r.converged) r = detail::inverse_iteration(op, g, r.rho, r.x, opts, true, against);
  if (!r.converged) throw Error(Errc::no_convergence, "second eigenpair did not converge");
  EigenPair out;
  out.value = r.rho;
  out.residual = r.residual;
  out.iterations = r.iterations;
  out.vector = RadialField::from_unknowns(grid, r.x);
  return out;
}

/// Principal eigenpair of the linearisation A_h + lambda g'(u) at u.
[[nodiscard]] inline EigenPair linearized_eigen(const RadialField& u, double lambda, const DiscreteOperator& opA,
                                                std::optional<double> shift = std::nullopt,
                                                std::optional<std::vector<double>> start = std::nullopt,
                                                const EigenOptions& opts = {}) {
  const auto J = assemble_A_plus_potential(opA, lambda, u);
  double s = 0.0;
  if (shift) {
    s = *shift;
  } else if (lambda > 0.0) {
    // Weyl: lambda_min(A + D) >= lambda_min(A) + min D, and lambda_min(A) > 0.
    double dmin = 0.0;
    for (double v : u.unknowns()) dmin = std::min(dmin, lambda * g_prime(v));
    s = dmin;
  }
  return principal_eigen(J, u.grid(), s, opts, std::move(start));
}

/// mu_1(u): smallest eigenvalue of A_h + lambda g'(u).
[[nodiscard]] inline double mu1(const RadialField& u, double lambda, const DiscreteOperator& opA) {
  return linearized_eigen(u, lambda, opA).value;
}

}  // namespace mems4
