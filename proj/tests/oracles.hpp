#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

namespace oracle {

using Complex = std::complex<double>;

/// Ei(-x) = -int_x^inf e^{-t}/t dt for x > 0, by adaptive quadrature.
inline double ei_negative_quadrature(double x) {
  // Split at x + 1 to keep the endpoint singularity structure mild.
  boost::math::quadrature::tanh_sinh<double> ts;
  const double head = ts.integrate(
      [](double t) { return std::exp(-t) / t; }, x, x + 1.0);
  boost::math::quadrature::exp_sinh<double> es;
  const double tail = es.integrate(
      [x](double u) { return std::exp(-(x + 1.0 + u)) / (x + 1.0 + u); }, 0.0,
      std::numeric_limits<double>::infinity());
  return -(head + tail);
}

/// I0 by its power series with an explicit remainder bound; long double.
inline double bessel_i0_series(double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 20000; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    const long double r = q / ((k + 1.0L) * (k + 1.0L));
    if (r < 0.5L && term * r / (1.0L - r) < 1e-19L * sum) break;
  }
  return static_cast<double>(sum);
}

/// int_0^inf f(x) dx by adaptive Gauss-Kronrod on [0, inf).
template <class F>
double integrate_half_line(F f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 25, 1e-13);
}

/// Random Hermitian matrix with i.i.d. entries.
inline Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(nd(gen), nd(gen));
  return (a + a.adjoint()) * 0.5;
}

inline Eigen::MatrixXcd random_pd(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(nd(gen), nd(gen));
  return a * a.adjoint() + Eigen::MatrixXcd::Identity(n, n);
}

inline Eigen::VectorXcd random_vector(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(nd(gen), nd(gen));
  return v;
}

inline Eigen::VectorXcd random_unit_vector(int n, std::mt19937_64& gen) {
  Eigen::VectorXcd v = random_vector(n, gen);
  return v / v.norm();
}

/// Angle between two complex directions, insensitive to global phase.
inline double direction_angle(const Eigen::VectorXcd& a,
                              const Eigen::VectorXcd& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c));
}

}  // namespace oracle
