#pragma once

// Model constants and the singular nonlinearity g(u) = (1+u)^-2 of
//   gamma^2 u_tt + u_t + B Lap^2 u - T Lap u = -lambda g(u)   in the unit ball,
//   u = d_nu u = 0                                           on the sphere.

#include <cmath>

#include "mems4/error.hpp"

namespace mems4 {

struct ModelParams {
  int d = 1;           // spatial dimension, 1 or 2
  double B = 1.0;      // bending
  double T = 0.0;      // stretching
  double lambda = 0.0; // voltage parameter
  double gamma = 0.0;  // inertia; 0 selects the parabolic model

  void validate() const {
    require(d == 1 || d == 2, Errc::invalid_argument, "d must be 1 or 2");
    require(B > 0.0, Errc::invalid_argument, "B must be positive");
    require(T >= 0.0, Errc::invalid_argument, "T must be nonnegative");
    require(lambda >= 0.0, Errc::invalid_argument, "lambda must be nonnegative");
    require(gamma >= 0.0, Errc::invalid_argument, "gamma must be nonnegative");
  }
};

/// Values with 1 + xi <= guard_band are treated as having touched down.
inline constexpr double guard_band = 1e-12;

[[nodiscard]] inline bool admissible(double xi) noexcept { return xi > -1.0 + guard_band; }

namespace detail {
inline double checked_gap(double xi) {
  if (!admissible(xi)) throw Error(Errc::domain, "deflection at or below -1 (touchdown)");
  return 1.0 + xi;
}
}  // namespace detail

[[nodiscard]] inline double g(double xi) {
  const double z = detail::checked_gap(xi);
  return 1.0 / (z * z);
}

[[nodiscard]] inline double g_prime(double xi) {
  const double z = detail::checked_gap(xi);
  return -2.0 / (z * z * z);
}

[[nodiscard]] inline double g_second(double xi) {
  const double z = detail::checked_gap(xi);
  const double z2 = z * z;
  return 6.0 / (z2 * z2);
}

/// chi(z) = m1 z + lambda g(z); the source of the N(t) differential inequality.
[[nodiscard]] inline double chi(double z, double m1, double lambda) {
  return m1 * z + lambda * g(z);
}

/// Unique minimiser of chi on (-1, inf).
[[nodiscard]] inline double z_lambda(double m1, double lambda) {
  require(m1 > 0.0 && lambda > 0.0, Errc::invalid_argument, "z_lambda needs m1 > 0 and lambda > 0");
  return std::cbrt(2.0 * lambda / m1) - 1.0;
}

/// chi(z_lambda) = 3 (m1^2 lambda / 4)^(1/3) - m1, positive iff lambda > 4 m1 / 27.
[[nodiscard]] inline double chi_min(double m1, double lambda) {
  return chi(z_lambda(m1, lambda), m1, lambda);
}

[[nodiscard]] inline double touchdown_threshold(double m1) { return 4.0 * m1 / 27.0; }

/// I_1(z) = z^(-4/3) - 1 and I_2(z) = -ln z on (0, 1]; both vanish at z = 1.
[[nodiscard]] inline double i_d(double z, int d) {
  require(d == 1 || d == 2, Errc::invalid_argument, "d must be 1 or 2");
  if (!(z > 0.0 && z <= 1.0)) throw Error(Errc::domain, "i_d needs 0 < z <= 1");
  return d == 1 ? std::pow(z, -4.0 / 3.0) - 1.0 : -std::log(z);
}

}  // namespace mems4
