#pragma once

// Exponentially scaled modified Bessel functions of the first kind, orders 0
// and 1, and the ratio I0/I1.
//
// Everything is returned in scaled form e^{-z} I(z): the Kac densities always
// pair e^{-at} with I(beta r) where beta r <= at, so the scaled value times
// e^{-(at - beta r)} never overflows even for at in the thousands.
//
// Evaluation uses the ascending power series for z <= 18 and the Hankel
// asymptotic expansion above. Both reach ~1e-15 relative accuracy at the
// crossover.

#include <cmath>
#include <numbers>

#include "kacflow/error.hpp"

namespace kacflow::specfun {

inline constexpr double kSeriesCrossover = 18.0;
inline constexpr double kRatioSmallArg = 1e-3;

namespace detail {

inline void check_arg(double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) {
    throw DomainError("modified Bessel argument must be finite and nonnegative");
  }
}

// sum_k q^k / (k!)^2 with q = z^2/4, i.e. I0(z).
inline double series_i0(double z) {
  const double q = 0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// sum_k q^k / (k! (k+1)!), i.e. 2 I1(z) / z.
inline double series_i1_over_half_z(double z) {
  const double q = 0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Hankel expansion of e^{-z} I_nu(z) for nu = 0, 1; sum stops at the
// smallest term.
inline double asymptotic_scaled(double z, int nu) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (odd * odd - mu) / (8.0 * k * z);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace detail

// Power-series and asymptotic branches, exposed for cross-checking.
inline double series_i0e(double z) { return std::exp(-z) * detail::series_i0(z); }
inline double series_i1e(double z) {
  return std::exp(-z) * 0.5 * z * detail::series_i1_over_half_z(z);
}
inline double asymptotic_i0e(double z) { return detail::asymptotic_scaled(z, 0); }
inline double asymptotic_i1e(double z) { return detail::asymptotic_scaled(z, 1); }

// e^{-z} I0(z).
inline double bessel_i0e(double z) {
  detail::check_arg(z);
  return z <= kSeriesCrossover ? series_i0e(z) : asymptotic_i0e(z);
}

// e^{-z} I1(z).
inline double bessel_i1e(double z) {
  detail::check_arg(z);
  return z <= kSeriesCrossover ? series_i1e(z) : asymptotic_i1e(z);
}

// e^{-z} I1(z) / z, continuous at z = 0 with value 1/2.
inline double bessel_i1e_over_z(double z) {
  detail::check_arg(z);
  if (z <= kSeriesCrossover) return std::exp(-z) * 0.5 * detail::series_i1_over_half_z(z);
  return asymptotic_i1e(z) / z;
}

// I0(z) / I1(z) for z > 0.
inline double bessel_ratio_i0_over_i1(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("I0/I1 ratio requires a finite positive argument");
  }
  if (z < kRatioSmallArg) return 2.0 / z + 0.25 * z;
  return bessel_i0e(z) / bessel_i1e(z);
}

// z I0(z) / I1(z), continuous at z = 0 with value 2. This is the combination
// that enters the Kac velocity denominator.
inline double bessel_z_ratio(double z) {
  detail::check_arg(z);
  if (z < kRatioSmallArg) return 2.0 + 0.25 * z * z;
  return z * bessel_i0e(z) / bessel_i1e(z);
}

}  // namespace kacflow::specfun
