#pragma once

// Uniform radial grid on [0, 1], ball quadrature, and the banded
// finite-difference realisations of the radial Laplacian and of
// A = B Lap^2 - T Lap with clamped closure.
//
// Unknowns are u_0 .. u_{n-1}; u_n = 0 is eliminated and d_r u(1) = 0 enters
// through the reflection ghost u_{n+1} = u_{n-1}. The axis row uses the limit
// Lap u(0) = d u''(0) with the symmetry ghost u_{-1} = u_1.
//
// The quadrature weights are the cell measures |{x : |x| in cell_i}|. With
// these weights the Dirichlet Laplacian L_D is self-adjoint in the weighted
// inner product (u, v)_W = sum_i w_i u_i v_i, and so is the composite A_h.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "mems4/error.hpp"
#include "mems4/model.hpp"

namespace mems4 {

class RadialGrid {
 public:
  RadialGrid(int n, int d) : n_(n), d_(d) {
    require(n >= 8, Errc::invalid_argument, "grid needs n >= 8 intervals");
    require(d == 1 || d == 2, Errc::invalid_argument, "d must be 1 or 2");
    h_ = 1.0 / n;
    r_.resize(n + 1);
    w_.resize(n + 1);
    const double cd = sphere_constant(d);
    for (int i = 0; i <= n; ++i) {
      r_[i] = i * h_;
      const double hi = std::min(r_[i] + 0.5 * h_, 1.0);
      const double lo = std::max(r_[i] - 0.5 * h_, 0.0);
      w_[i] = cd * (std::pow(hi, d) - std::pow(lo, d)) / d;
    }
  }

  /// c_d with int_{B_1} f dx = c_d int_0^1 f(r) r^{d-1} dr.
  static double sphere_constant(int d) { return d == 1 ? 2.0 : 2.0 * std::numbers::pi; }

  [[nodiscard]] int n() const noexcept { return n_; }
  [[nodiscard]] int d() const noexcept { return d_; }
  [[nodiscard]] double h() const noexcept { return h_; }
  [[nodiscard]] double r(int i) const { return r_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] double weight(int i) const { return w_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::span<const double> nodes() const noexcept { return r_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return w_; }
  [[nodiscard]] double measure() const noexcept { return d_ == 1 ? 2.0 : std::numbers::pi; }

  /// c_d r_{i+1/2}^{d-1}: weight of the face between nodes i and i+1.
  [[nodiscard]] double face_weight(int i) const {
    return sphere_constant(d_) * std::pow((i + 0.5) * h_, d_ - 1);
  }

  /// Weight of the boundary Laplacian value (Lu)_n in the discrete H^2 form;
  /// chosen so that the form equals (u, A_h u)_W exactly.
  [[nodiscard]] double boundary_laplacian_weight() const { return 0.5 * h_ * face_weight(n_ - 1); }

 private:
  int n_;
  int d_;
  double h_;
  std::vector<double> r_;
  std::vector<double> w_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

[[nodiscard]] inline GridPtr build_grid(int n, int d) { return std::make_shared<const RadialGrid>(n, d); }

/// Nodal values of a radial profile at r_0 .. r_n.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridPtr grid)
      : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->n() + 1), 0.0) {}
  RadialField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == static_cast<std::size_t>(grid_->n() + 1), Errc::invalid_argument,
            "field length must be n+1");
  }

  /// Samples f at every node.
  template <class F>
  static RadialField sample(GridPtr grid, F&& f) {
    RadialField out(grid);
    for (int i = 0; i <= grid->n(); ++i) out.values_[static_cast<std::size_t>(i)] = f(grid->r(i));
    return out;
  }

  /// Builds a clamped field from the n unknowns (u_n = 0 appended).
  static RadialField from_unknowns(GridPtr grid, std::span<const double> x) {
    require(x.size() == static_cast<std::size_t>(grid->n()), Errc::invalid_argument, "unknown vector length must be n");
    RadialField out(grid);
    std::copy(x.begin(), x.end(), out.values_.begin());
    return out;
  }

  [[nodiscard]] const GridPtr& grid() const noexcept { return grid_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] double& operator[](std::size_t i) { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] std::span<const double> unknowns() const { return std::span(values_).first(values_.size() - 1); }
  [[nodiscard]] std::span<double> unknowns() { return std::span(values_).first(values_.size() - 1); }
  [[nodiscard]] double center() const { return values_.front(); }
  [[nodiscard]] double min() const { return *std::min_element(values_.begin(), values_.end()); }
  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

[[nodiscard]] inline double sup_distance(const RadialField& a, const RadialField& b) {
  require(a.size() == b.size(), Errc::invalid_argument, "grid mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Square matrix with kl sub- and ku super-diagonals, stored row by row.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(kl + ku + 1), 0.0) {}

  [[nodiscard]] int size() const noexcept { return n_; }
  [[nodiscard]] int lower() const noexcept { return kl_; }
  [[nodiscard]] int upper() const noexcept { return ku_; }

  [[nodiscard]] bool in_band(int i, int j) const noexcept {
    return i >= 0 && j >= 0 && i < n_ && j < n_ && j - i <= ku_ && i - j <= kl_;
  }
  [[nodiscard]] double operator()(int i, int j) const { return in_band(i, j) ? data_[index(i, j)] : 0.0; }
  [[nodiscard]] double& at(int i, int j) {
    require(in_band(i, j), Errc::invalid_argument, "band index out of range");
    return data_[index(i, j)];
  }

  void add_diagonal(std::span<const double> diag) {
    require(diag.size() == static_cast<std::size_t>(n_), Errc::invalid_argument, "diagonal length mismatch");
    for (int i = 0; i < n_; ++i) data_[index(i, i)] += diag[static_cast<std::size_t>(i)];
  }
  void add_identity(double alpha) {
    for (int i = 0; i < n_; ++i) data_[index(i, i)] += alpha;
  }
  void scale(double alpha) {
    for (double& v : data_) v *= alpha;
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    require(x.size() >= static_cast<std::size_t>(n_) && y.size() >= static_cast<std::size_t>(n_),
            Errc::invalid_argument, "apply: vector too short");
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      const int j0 = std::max(0, i - kl_);
      const int j1 = std::min(n_ - 1, i + ku_);
      for (int j = j0; j <= j1; ++j) s += data_[index(i, j)] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
  }
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(static_cast<std::size_t>(n_));
    apply(x, y);
    return y;
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  [[nodiscard]] std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(kl_ + ku_ + 1) + static_cast<std::size_t>(j - i + kl_);
  }

  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  std::vector<double> data_;
};

enum class OperatorKind { laplacian, biharmonic_composite, A, A_plus_potential, shifted };

/// Banded operator acting on the n interior unknowns of a clamped field.
struct DiscreteOperator {
  BandMatrix band;
  OperatorKind kind = OperatorKind::A;

  [[nodiscard]] int n_unknowns() const noexcept { return band.size(); }
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const { return band.apply(x); }
  [[nodiscard]] RadialField apply(const RadialField& u) const {
    return RadialField::from_unknowns(u.grid(), band.apply(u.unknowns()));
  }
};

namespace detail {

// Three-point coefficients of row i of the radial Laplacian (rows 0..n),
// ghosts already folded in. Row n uses the reflection u_{n+1} = u_{n-1}.
struct LapRow {
  double lower = 0.0;
  double diag = 0.0;
  double upper = 0.0;
};

inline LapRow laplacian_row(const RadialGrid& g, int i) {
  const double h2 = g.h() * g.h();
  const int d = g.d();
  if (i == 0) return {0.0, -2.0 * d / h2, 2.0 * d / h2};
  if (i == g.n()) return {2.0 / h2, -2.0 / h2, 0.0};
  const double drift = (d - 1) / (2.0 * g.h() * g.r(i));
  return {1.0 / h2 - drift, -2.0 / h2, 1.0 / h2 + drift};
}

}  // namespace detail

/// Discrete radial Laplacian at every node 0..n of a field with the ghost
/// u_{n+1} = u_{n-1} (encodes d_r u(1) = 0).
[[nodiscard]] inline RadialField laplacian_apply(const RadialField& u) {
  const RadialGrid& g = *u.grid();
  RadialField out(u.grid());
  for (int i = 0; i <= g.n(); ++i) {
    const auto row = detail::laplacian_row(g, i);
    const auto k = static_cast<std::size_t>(i);
    double s = row.diag * u[k];
    if (i > 0) s += row.lower * u[k - 1];
    if (i < g.n()) s += row.upper * u[k + 1];
    out[k] = s;
  }
  return out;
}

/// Dirichlet Laplacian L_D on the unknowns (u_n = 0).
[[nodiscard]] inline DiscreteOperator assemble_laplacian(const RadialGrid& g) {
  const int n = g.n();
  BandMatrix L(n, 1, 1);
  for (int i = 0; i < n; ++i) {
    const auto row = detail::laplacian_row(g, i);
    if (i > 0) L.at(i, i - 1) = row.lower;
    L.at(i, i) = row.diag;
    if (i + 1 < n) L.at(i, i + 1) = row.upper;
  }
  return {std::move(L), OperatorKind::laplacian};
}

/// A_h = B L o L - T L in mixed form: w = L u on nodes 0..n (boundary value
/// from the ghost), then L w on rows 0..n-1. Pentadiagonal.
[[nodiscard]] inline DiscreteOperator assemble_A(const RadialGrid& g, double B, double T) {
  require(B > 0.0 && T >= 0.0, Errc::invalid_argument, "assemble_A needs B > 0, T >= 0");
  const int n = g.n();
  std::vector<detail::LapRow> rows(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) rows[static_cast<std::size_t>(i)] = detail::laplacian_row(g, i);
  auto coef = [&](int i, int j) -> double {  // L_{ij}, rows 0..n, columns 0..n
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (j == i - 1) return row.lower;
    if (j == i) return row.diag;
    if (j == i + 1) return row.upper;
    return 0.0;
  };

  BandMatrix A(n, 2, 2);
  for (int i = 0; i < n; ++i) {
    for (int k = std::max(0, i - 2); k <= std::min(n - 1, i + 2); ++k) {
      double s = 0.0;
      for (int j = std::max(0, i - 1); j <= std::min(n, i + 1); ++j) s += coef(i, j) * coef(j, k);
      A.at(i, k) = B * s - T * coef(i, k);
    }
  }
  return {std::move(A), OperatorKind::A};
}

/// A_h + lambda diag(g'(u)): the linearisation of u -> A_h u + lambda g(u).
[[nodiscard]] inline DiscreteOperator assemble_A_plus_potential(const DiscreteOperator& opA, double lambda,
                                                                const RadialField& u) {
  const int n = opA.n_unknowns();
  require(u.size() == static_cast<std::size_t>(n + 1), Errc::invalid_argument, "grid mismatch");
  DiscreteOperator out = opA;
  out.kind = OperatorKind::A_plus_potential;
  if (lambda == 0.0) return out;
  std::vector<double> pot(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pot[static_cast<std::size_t>(i)] = lambda * g_prime(u[static_cast<std::size_t>(i)]);
  out.band.add_diagonal(pot);
  return out;
}

[[nodiscard]] inline DiscreteOperator shifted(const DiscreteOperator& op, double alpha) {
  DiscreteOperator out = op;
  out.band.add_identity(alpha);
  out.kind = OperatorKind::shifted;
  return out;
}

/// (a, b)_W over the first min(|a|, |b|) nodes.
[[nodiscard]] inline double weighted_dot(const RadialGrid& g, std::span<const double> a, std::span<const double> b) {
  const std::size_t m = std::min(a.size(), b.size());
  require(m <= static_cast<std::size_t>(g.n() + 1), Errc::invalid_argument, "vector longer than grid");
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += g.weight(static_cast<int>(i)) * a[i] * b[i];
  return s;
}

[[nodiscard]] inline double weighted_integral(const RadialField& f) {
  const RadialGrid& g = *f.grid();
  double s = 0.0;
  for (int i = 0; i <= g.n(); ++i) s += g.weight(i) * f[static_cast<std::size_t>(i)];
  return s;
}

[[nodiscard]] inline double l2_norm(const RadialField& f) {
  return std::sqrt(weighted_dot(*f.grid(), f.values(), f.values()));
}

/// Discrete <u, v> = int B Lap u Lap v + T grad u . grad v dx. Laplacian part
/// by nodal quadrature of (Lu)(Lv), gradient part by midpoint quadrature of
/// the face differences. For clamped fields this equals (u, A_h v)_W.
[[nodiscard]] inline double inner_h2(const RadialField& u, const RadialField& v, double B, double T) {
  require(u.grid() == v.grid() || u.size() == v.size(), Errc::invalid_argument, "grid mismatch");
  const RadialGrid& g = *u.grid();
  const int n = g.n();
  const RadialField lu = laplacian_apply(u);
  const RadialField lv = laplacian_apply(v);
  double bend = 0.0;
  for (int i = 0; i < n; ++i) bend += g.weight(i) * lu[static_cast<std::size_t>(i)] * lv[static_cast<std::size_t>(i)];
  bend += g.boundary_laplacian_weight() * lu[static_cast<std::size_t>(n)] * lv[static_cast<std::size_t>(n)];
  double stretch = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double du = (u[k + 1] - u[k]) / g.h();
    const double dv = (v[k + 1] - v[k]) / g.h();
    stretch += g.face_weight(i) * g.h() * du * dv;
  }
  return B * bend + T * stretch;
}

}  // namespace mems4
