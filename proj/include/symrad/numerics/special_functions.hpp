#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "symrad/errors.hpp"

namespace symrad::numerics {

namespace detail {

// E1(t) for t > 6 by the continued fraction
//   E1(t) = e^{-t} / (t + 1 - 1^2/(t + 3 - 2^2/(t + 5 - ...)))
// evaluated with the modified Lentz algorithm.
inline double expint_e1_continued_fraction(double t) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double b = t + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h * std::exp(-t);
  }
  throw NumericError("expint_Ei: continued fraction did not converge");
}

// gamma + ln t + sum_{k>=1} (-t)^k / (k k!)
inline double expint_ei_series(double x) {
  const double t = -x;
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 500; ++k) {
    term *= x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::max(1.0, std::abs(sum))) break;
  }
  return std::numbers::egamma + std::log(t) + sum;
}

}  // namespace detail

/// Exponential integral Ei(x) = int_{-inf}^{x} e^t / t dt, for x < 0 only.
inline double expint_Ei(double x) {
  if (!(x < 0.0)) {
    throw DomainError("expint_Ei: argument must be strictly negative, got " +
                      std::to_string(x));
  }
  if (std::isinf(x)) return 0.0;
  if (x >= -6.0) return detail::expint_ei_series(x);
  return -detail::expint_e1_continued_fraction(-x);
}

/// Modified Bessel function I0(x), x >= 0, by its power series
/// sum_k (x/2)^{2k} / (k!)^2.
inline double bessel_I0(double x) {
  if (!(x >= 0.0)) {
    throw DomainError("bessel_I0: argument must be non-negative");
  }
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (std::isinf(sum)) return sum;
    const double ratio = q / ((k + 1.0) * (k + 1.0));
    // Remaining tail is bounded by term * ratio / (1 - ratio) once ratio < 1.
    if (ratio < 1.0 && term * ratio / (1.0 - ratio) <= 1e-16 * sum) break;
  }
  return sum;
}

/// e^{-x} I0(x), finite for all x >= 0. Uses the series below 500 and the
/// large-argument asymptotic expansion above.
inline double bessel_I0_scaled(double x) {
  if (!(x >= 0.0)) {
    throw DomainError("bessel_I0_scaled: argument must be non-negative");
  }
  if (x <= 500.0) return bessel_I0(x) * std::exp(-x);
  // e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double f = 2.0 * k - 1.0;
    term *= f * f / (k * 8.0 * x);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace symrad::numerics
