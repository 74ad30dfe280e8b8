#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

inline double pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Double-exponential quadrature on a finite interval.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, 1e-13);
}

inline double cdf(double x) {
  if (x < -12.0) return 0.0;
  if (x > 12.0) return 1.0;
  return 0.5 + (x > 0 ? 1.0 : -1.0) * integrate(pdf, 0.0, std::abs(x));
}

// P(G1 <= x, G2 <= y) with corr, by integrating the conditional law of G2 given G1.
inline double bvn(double x, double y, double corr) {
  const double s = std::sqrt(1.0 - corr * corr);
  const double lo = -12.0;
  const double hi = std::min(x, 12.0);
  return integrate(
      [&](double t) { return pdf(t) * 0.5 * std::erfc(-(y - corr * t) / (s * std::sqrt(2.0))); },
      lo, hi);
}

// Damped fixed-point iteration for 1/m = lambda + p / (1 + phi m).
inline double stieltjes_fixed_point(double p, double phi, double lambda) {
  double m = 1.0 / (lambda + p);
  for (int i = 0; i < 200000; ++i) {
    const double next = 1.0 / (lambda + p / (1.0 + phi * m));
    const double upd = 0.5 * m + 0.5 * next;
    if (std::abs(upd - m) < 1e-15 * std::max(1.0, m)) return upd;
    m = upd;
  }
  return m;
}

// Central difference with one Richardson step (h and h/2).
inline double derivative(const std::function<double(double)>& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
}

}  // namespace oracle
