#pragma once

// Modified Bessel functions I_0, I_1, K_0, K_1 for x > 0.
//
//   I_nu : ascending series for x <= 25, Hankel asymptotic series beyond.
//   K_nu : logarithmic series for x <= 2; for 2 < x <= 25 the integral
//          K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoidal
//          rule (spectrally accurate for this integrand); asymptotic beyond.
//
// Also the regular combinations ln r + K_0(mu r) and 1/z - K_1(z) whose
// singular parts cancel, evaluated without cancellation near the origin.

#include <cmath>
#include <limits>
#include <numbers>

#include "mems4/error.hpp"

namespace mems4::bessel {

struct IK {
  double i0 = 0.0;
  double i1 = 0.0;
  double k0 = 0.0;
  double k1 = 0.0;
};

namespace detail {

inline constexpr double kSeriesLimitI = 25.0;
inline constexpr double kSeriesLimitK = 2.0;
inline constexpr double kAsymptoticK = 25.0;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// sum_{k>=kstart} (x^2/4)^k / (k! (k+nu)!) times (x/2)^nu
inline double i_series(double x, int nu, bool skip_first = false) {
  const double q = 0.25 * x * x;
  double term = nu == 0 ? 1.0 : 0.5 * x;
  double sum = skip_first ? 0.0 : term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (k + nu));
    sum += term;
    if (term < kEps * 1e-2 * std::abs(sum)) break;
  }
  return sum;
}

// e^{-x} I_nu(x) (large x)
inline double i_asymptotic_scaled(double x, int nu) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < kEps * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

// e^{x} K_nu(x) (large x)
inline double k_asymptotic_scaled(double x, int nu) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < kEps * std::abs(sum)) break;
  }
  return sum * std::sqrt(std::numbers::pi / (2.0 * x));
}

// e^{x} K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
inline double k_integral_scaled(double x, int nu) {
  constexpr double step = 1.0 / 16.0;
  double sum = 0.5;  // t = 0 term, weight 1/2
  for (int k = 1; k < 4000; ++k) {
    const double t = k * step;
    const double f = std::exp(-x * (std::cosh(t) - 1.0)) * (nu == 0 ? 1.0 : std::cosh(t));
    sum += f;
    if (f < kEps * 1e-3 * sum) break;
  }
  return sum * step;
}

// Harmonic-number sums of the logarithmic K series.
// S0 = sum_{k>=1} H_k q^k / (k!)^2
inline double k0_tail(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double harmonic = 0.0;
  double sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    const double add = harmonic * term;
    sum += add;
    if (add < kEps * 1e-2 * sum) break;
  }
  return sum;
}

// S1 = (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
inline double k1_tail(double x) {
  const double q = 0.25 * x * x;
  const double euler = std::numbers::egamma;
  double term = 1.0;
  double hk = 0.0;  // H_k
  double sum = (-euler) + (1.0 - euler);
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    hk += 1.0 / k;
    const double psi_sum = (-euler + hk) + (-euler + hk + 1.0 / (k + 1));
    const double add = psi_sum * term;
    sum += add;
    if (std::abs(add) < kEps * 1e-2 * std::abs(sum)) break;
  }
  return 0.25 * x * sum;
}

}  // namespace detail

[[nodiscard]] inline double i0(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitI) return detail::i_series(x, 0);
  return std::exp(x) * detail::i_asymptotic_scaled(x, 0);
}

[[nodiscard]] inline double i1(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitI) return detail::i_series(x, 1);
  return std::exp(x) * detail::i_asymptotic_scaled(x, 1);
}

/// e^{-x} I_0(x)
[[nodiscard]] inline double i0_scaled(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitI) return std::exp(-x) * detail::i_series(x, 0);
  return detail::i_asymptotic_scaled(x, 0);
}

/// e^{-x} I_1(x)
[[nodiscard]] inline double i1_scaled(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitI) return std::exp(-x) * detail::i_series(x, 1);
  return detail::i_asymptotic_scaled(x, 1);
}

[[nodiscard]] inline double k0(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitK)
    return -(std::log(0.5 * x) + std::numbers::egamma) * detail::i_series(x, 0) + detail::k0_tail(x);
  if (x <= detail::kAsymptoticK) return std::exp(-x) * detail::k_integral_scaled(x, 0);
  return std::exp(-x) * detail::k_asymptotic_scaled(x, 0);
}

[[nodiscard]] inline double k1(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain, "bessel argument must be positive");
  if (x <= detail::kSeriesLimitK) return 1.0 / x + std::log(0.5 * x) * detail::i_series(x, 1) - detail::k1_tail(x);
  if (x <= detail::kAsymptoticK) return std::exp(-x) * detail::k_integral_scaled(x, 1);
  return std::exp(-x) * detail::k_asymptotic_scaled(x, 1);
}

[[nodiscard]] inline IK evaluate(double x) { return {i0(x), i1(x), k0(x), k1(x)}; }

/// |I_0 K_1 + I_1 K_0 - 1/x|, a self-test of the four evaluations.
[[nodiscard]] inline double wronskian_defect(double x) {
  const IK v = evaluate(x);
  return std::abs(v.i0 * v.k1 + v.i1 * v.k0 - 1.0 / x);
}

/// ln r + K_0(mu r); finite at r = 0 with value -(ln(mu/2) + gamma_E).
[[nodiscard]] inline double log_plus_k0(double r, double mu) {
  require(mu > 0.0 && r >= 0.0, Errc::domain, "log_plus_k0 needs r >= 0, mu > 0");
  const double z = mu * r;
  const double c = std::log(0.5 * mu) + std::numbers::egamma;
  if (z == 0.0) return -c;
  if (z > detail::kSeriesLimitK) return std::log(r) + k0(z);
  const double i0m1 = detail::i_series(z, 0, true);  // I_0 - 1
  return -std::log(r) * i0m1 - c * (1.0 + i0m1) + detail::k0_tail(z);
}

/// 1/z - K_1(z); vanishes like -(z/2) ln z at the origin.
[[nodiscard]] inline double inv_minus_k1(double z) {
  require(z >= 0.0, Errc::domain, "inv_minus_k1 needs z >= 0");
  if (z == 0.0) return 0.0;
  if (z > detail::kSeriesLimitK) return 1.0 / z - k1(z);
  return -std::log(0.5 * z) * detail::i_series(z, 1) + detail::k1_tail(z);
}

}  // namespace mems4::bessel
