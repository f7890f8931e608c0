#pragma once

// End-point profile omega of the solution curve and the small-lambda linear
// response A_h^{-1}[1].
//
// omega solves B Lap^2 omega - T Lap omega = 0 on 0 < |x| < 1 with
// omega(0) = -1, grad omega(0) = 0 and clamped conditions at |x| = 1. With
// mu = sqrt(T/B) the radial homogeneous solutions are
//
//   d = 1, T = 0 : 1, r, r^2, r^3
//   d = 1, T > 0 : 1, r, cosh(mu r), sinh(mu r)
//   d = 2, T = 0 : 1, ln r, r^2, r^2 ln r
//   d = 2, T > 0 : 1, ln r, I_0(mu r), K_0(mu r)
//
// The first row of every 4x4 system is the regularity constraint at the
// origin (bounded value and gradient); for d = 2, T > 0 it pairs the ln r and
// K_0 coefficients.

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>

#include "mems4/band_linalg.hpp"
#include "mems4/bessel.hpp"
#include "mems4/error.hpp"
#include "mems4/radial.hpp"

namespace mems4 {

enum class OmegaBasis { poly_d1, cosh_d1, log_d2, bessel_d2 };

inline const char* to_string(OmegaBasis b) {
  switch (b) {
    case OmegaBasis::poly_d1: return "poly_d1";
    case OmegaBasis::cosh_d1: return "cosh_d1";
    case OmegaBasis::log_d2: return "log_d2";
    case OmegaBasis::bessel_d2: return "bessel_d2";
  }
  return "?";
}

class OmegaProfile {
 public:
  OmegaProfile(int d, double B, double T) : d_(d), B_(B), T_(T) {
    require(d == 1 || d == 2, Errc::invalid_argument, "d must be 1 or 2");
    require(B > 0.0 && T >= 0.0, Errc::invalid_argument, "omega needs B > 0, T >= 0");
    mu_ = std::sqrt(T / B);
    if (d == 1)
      basis_ = T == 0.0 ? OmegaBasis::poly_d1 : OmegaBasis::cosh_d1;
    else
      basis_ = T == 0.0 ? OmegaBasis::log_d2 : OmegaBasis::bessel_d2;
    solve();
  }

  [[nodiscard]] int d() const noexcept { return d_; }
  [[nodiscard]] double B() const noexcept { return B_; }
  [[nodiscard]] double T() const noexcept { return T_; }
  [[nodiscard]] double mu() const noexcept { return mu_; }
  [[nodiscard]] OmegaBasis basis() const noexcept { return basis_; }

  /// Coefficients of the basis functions listed at the top of this file.
  /// For large mu these over- or underflow; evaluation uses a scaled form.
  [[nodiscard]] std::array<double, 4> coefficients() const {
    auto c = s_;
    if (basis_ == OmegaBasis::cosh_d1) {
      // a e^{mu(r-1)} + b e^{-mu r} = (a e^{-mu} + b) cosh + (a e^{-mu} - b) sinh
      const double ae = s_[2] * std::exp(-mu_);
      c[2] = ae + s_[3];
      c[3] = ae - s_[3];
    } else if (basis_ == OmegaBasis::bessel_d2) {
      c[2] = s_[2] / bessel::i0(mu_);
    }
    return c;
  }

  /// |row . c - rhs| of the regularity row of the solved system.
  [[nodiscard]] double constraint_residual() const noexcept { return constraint_residual_; }

  [[nodiscard]] double value(double r) const {
    require(r >= 0.0 && r <= 1.0, Errc::domain, "omega is defined on [0, 1]");
    const auto& c = s_;
    switch (basis_) {
      case OmegaBasis::poly_d1: return c[0] + r * (c[1] + r * (c[2] + r * c[3]));
      case OmegaBasis::cosh_d1:
        return c[0] + c[1] * r + c[2] * std::exp(mu_ * (r - 1.0)) + c[3] * std::exp(-mu_ * r);
      case OmegaBasis::log_d2: {
        if (r == 0.0) return c[0];
        const double lr = std::log(r);
        return c[0] + c[1] * lr + c[2] * r * r + c[3] * r * r * lr;
      }
      case OmegaBasis::bessel_d2: {
        double v = c[0] + c[2] * i0_ratio(r) + c[3] * bessel::log_plus_k0(r, mu_);
        if (r > 0.0) v += (c[1] - c[3]) * std::log(r);
        return v;
      }
    }
    return 0.0;
  }

  [[nodiscard]] double derivative(double r) const {
    require(r >= 0.0 && r <= 1.0, Errc::domain, "omega is defined on [0, 1]");
    const auto& c = s_;
    switch (basis_) {
      case OmegaBasis::poly_d1: return c[1] + r * (2.0 * c[2] + 3.0 * r * c[3]);
      case OmegaBasis::cosh_d1:
        return c[1] + mu_ * (c[2] * std::exp(mu_ * (r - 1.0)) - c[3] * std::exp(-mu_ * r));
      case OmegaBasis::log_d2: {
        if (r == 0.0) return 0.0;
        const double lr = std::log(r);
        return c[1] / r + 2.0 * c[2] * r + c[3] * (2.0 * r * lr + r);
      }
      case OmegaBasis::bessel_d2: {
        if (r == 0.0) return 0.0;
        return c[2] * mu_ * i1_ratio(r) + c[3] * mu_ * bessel::inv_minus_k1(mu_ * r) + (c[1] - c[3]) / r;
      }
    }
    return 0.0;
  }

  [[nodiscard]] RadialField sample(const GridPtr& grid) const {
    return RadialField::sample(grid, [this](double r) { return value(r); });
  }

 private:
  // I_0(mu r) / I_0(mu) and I_1(mu r) / I_0(mu)
  [[nodiscard]] double i0_ratio(double r) const {
    if (r == 0.0) return std::exp(-mu_) / bessel::i0_scaled(mu_);
    return bessel::i0_scaled(mu_ * r) / bessel::i0_scaled(mu_) * std::exp(mu_ * (r - 1.0));
  }
  [[nodiscard]] double i1_ratio(double r) const {
    return bessel::i1_scaled(mu_ * r) / bessel::i0_scaled(mu_) * std::exp(mu_ * (r - 1.0));
  }

  // Solves for scaled coefficients: the cosh/sinh pair is carried as
  // e^{mu(r-1)}, e^{-mu r} and I_0(mu r) as I_0(mu r) / I_0(mu), so the
  // system stays well conditioned for large mu.
  void solve() {
    std::array<std::array<double, 4>, 4> m{};
    std::array<double, 4> rhs{0.0, -1.0, 0.0, 0.0};
    const double mu = mu_;
    switch (basis_) {
      case OmegaBasis::poly_d1:
        m[0] = {0, 1, 0, 0};  // omega'(0) = 0
        m[1] = {1, 0, 0, 0};  // omega(0) = -1
        m[2] = {1, 1, 1, 1};
        m[3] = {0, 1, 2, 3};
        break;
      case OmegaBasis::cosh_d1: {
        const double e = std::exp(-mu);
        m[0] = {0, 1, mu * e, -mu};
        m[1] = {1, 0, e, 1};
        m[2] = {1, 1, 1, e};
        m[3] = {0, 1, mu, -mu * e};
        break;
      }
      case OmegaBasis::log_d2:
        m[0] = {0, 1, 0, 0};  // no ln r mode
        m[1] = {1, 0, 0, 0};
        m[2] = {1, 0, 1, 0};
        m[3] = {0, 1, 2, 1};
        break;
      case OmegaBasis::bessel_d2: {
        // ln r + K_0(mu r) -> -(ln(mu/2) + gamma_E) as r -> 0.
        const double c0 = -(std::log(0.5 * mu) + std::numbers::egamma);
        m[0] = {0, 1, 0, -1};
        m[1] = {1, 0, i0_ratio(0.0), c0};  // combined limit, valid once row 0 holds
        m[2] = {1, 0, 1, bessel::k0(mu)};
        m[3] = {0, 1, mu * i1_ratio(1.0), -mu * bessel::k1(mu)};
        break;
      }
    }
    const auto a = m;
    s_ = solve4(m, rhs);
    double r0 = -rhs[0];
    for (std::size_t j = 0; j < 4; ++j) r0 += a[0][j] * s_[j];
    constraint_residual_ = std::abs(r0);
  }

  static std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> b) {
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < 4; ++i)
        if (std::abs(m[i][k]) > std::abs(m[p][k])) p = i;
      if (std::abs(m[p][k]) < 1e-300) throw Error(Errc::singular, "omega boundary system is singular");
      std::swap(m[k], m[p]);
      std::swap(b[k], b[p]);
      for (std::size_t i = k + 1; i < 4; ++i) {
        const double f = m[i][k] / m[k][k];
        for (std::size_t j = k; j < 4; ++j) m[i][j] -= f * m[k][j];
        b[i] -= f * b[k];
      }
    }
    std::array<double, 4> x{};
    for (std::size_t k = 4; k-- > 0;) {
      double s = b[k];
      for (std::size_t j = k + 1; j < 4; ++j) s -= m[k][j] * x[j];
      x[k] = s / m[k][k];
    }
    return x;
  }

  int d_;
  double B_;
  double T_;
  double mu_ = 0.0;
  OmegaBasis basis_ = OmegaBasis::poly_d1;
  std::array<double, 4> s_{};
  double constraint_residual_ = 0.0;
};

struct OmegaChecks {
  double boundary_defect = 0.0;  // max of |omega(0)+1|, |omega'(0)|, |omega(1)|, |omega'(1)|
  double min_interior = 0.0;     // min of omega over the open interval samples
  double max_decrease = 0.0;     // largest drop between consecutive samples
  [[nodiscard]] bool pass(double tol) const {
    return boundary_defect <= tol && min_interior > -1.0 && max_decrease <= tol;
  }
};

[[nodiscard]] inline OmegaChecks check_invariants(const OmegaProfile& w, int samples = 10000) {
  OmegaChecks c;
  c.boundary_defect = std::max({std::abs(w.value(0.0) + 1.0), std::abs(w.derivative(0.0)), std::abs(w.value(1.0)),
                                std::abs(w.derivative(1.0))});
  c.min_interior = std::numeric_limits<double>::infinity();
  double prev = w.value(0.0);
  for (int k = 1; k <= samples; ++k) {
    const double r = static_cast<double>(k) / samples;
    const double v = w.value(r);
    if (k < samples) c.min_interior = std::min(c.min_interior, v);
    c.max_decrease = std::max(c.max_decrease, prev - v);
    prev = v;
  }
  return c;
}

[[nodiscard]] inline OmegaProfile omega_profile(int d, double B, double T) { return OmegaProfile(d, B, T); }

/// Unit-load deflection A_h^{-1}[1]; the stable branch starts as u ~ -lambda A_h^{-1}[1].
[[nodiscard]] inline RadialField linear_response(const GridPtr& grid, double B, double T) {
  const auto opA = assemble_A(*grid, B, T);
  const BandLU lu = lu_factor(opA);
  std::vector<double> ones(static_cast<std::size_t>(grid->n()), 1.0);
  return RadialField::from_unknowns(grid, lu.solve(ones));
}

}  // namespace mems4
