#pragma once

// Reference values computed independently of the library: adaptive
// Gauss-Kronrod / tanh-sinh quadrature and bracketing root finders from
// Boost.Math, plus closed forms.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double pi = std::numbers::pi;
inline constexpr double egamma = std::numbers::egamma;

/// Adaptive 61-point Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &err);
}

/// Adaptive Gauss-Kronrod with the interval split at the given points.
inline double integrate_split(const std::function<double(double)>& f, std::vector<double> cuts,
                              double tol = 1e-13) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) total += integrate(f, cuts[i], cuts[i + 1], tol);
  }
  return total;
}

/// Integral over (0, inf) by exp-sinh.
inline double integrate_half_line(const std::function<double(double)>& f, double tol = 1e-14) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate(f, tol);
}

/// Root of a monotone scalar function on [lo, hi] by TOMS 748.
inline double root(const std::function<double(double)>& f, double lo, double hi) {
  std::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (r.first + r.second);
}

/// T = 0 constant-kernel gap: root of 1 = U0 [asinh(b / D) - asinh(eps / D)].
inline double constant_gap_zero_T(double u0, double eps, double b) {
  auto f = [=](double d) { return u0 * (std::asinh(b / d) - std::asinh(eps / d)) - 1.0; };
  return root(f, 1e-12, 10.0 * b);
}

/// Constant-kernel gap at temperature T: 1 = U0 int tanh(E / 2T) / E dxi.
inline double constant_gap(double u0, double eps, double b, double t) {
  if (t == 0.0) return constant_gap_zero_T(u0, eps, b);
  auto g = [=](double d) {
    auto integrand = [=](double xi) {
      const double e = std::hypot(xi, d);
      return std::tanh(e / (2.0 * t)) / e;
    };
    return u0 * integrate_split(integrand, {eps, std::clamp(50.0 * t, eps, b), b}) - 1.0;
  };
  return root(g, 1e-14, constant_gap_zero_T(u0, eps, b) * (1.0 + 1e-12));
}

/// Constant-kernel T_c: root of U0 int tanh(xi / 2T) / xi dxi = 1.
inline double constant_tc(double u0, double eps, double b) {
  auto f = [=](double t) {
    auto integrand = [=](double xi) { return std::tanh(xi / (2.0 * t)) / xi; };
    return u0 * integrate_split(integrand, {eps, std::clamp(50.0 * t, eps, b), b}) - 1.0;
  };
  return root(f, 1e-6 * b, b);
}

}  // namespace oracle
