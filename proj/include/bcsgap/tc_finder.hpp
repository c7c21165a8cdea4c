#pragma once

// Transition temperature as the point where the spectral radius of the gap
// equation linearized at u = 0,
//
//   (A v)(x) = int U(x, xi) tanh(xi / 2T) / xi v(xi) dxi,
//
// crosses one.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/gap_solver.hpp"
#include "bcsgap/numeric.hpp"
#include "bcsgap/potential.hpp"
#include "bcsgap/quad.hpp"

namespace bcsgap {

struct SpectralEstimate {
  double radius = 0.0;
  /// Collatz-Wielandt bounds: lower <= radius <= upper.
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> eigenvector;
  std::size_t iterations = 0;
};

struct PowerOptions {
  double rel_tol = 1e-12;
  std::size_t max_iter = 100000;
};

/// Power iteration on A_ij = w_j U(xi_i, xi_j) tanh(xi_j / 2T) / xi_j from a
/// positive start. Stops once the Collatz-Wielandt bounds, min_i and max_i of
/// (A v)_i / v_i, agree to rel_tol.
inline SpectralEstimate linearized_spectrum(const KernelMatrix& kernel, const EnergyGrid& grid,
                                            double temperature, const PowerOptions& opt = {}) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("linearized_radius: temperature must be positive");
  }
  const std::size_t n = grid.size();
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xi = grid.node(j);
    col[j] = grid.weight(j) * numeric::tanh_sat(xi / (2.0 * temperature)) / xi;
  }

  SpectralEstimate est;
  std::vector<double> v(n, 1.0);
  std::vector<double> av(n);
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = kernel.row(i);
      numeric::CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j) acc.add(row[j] * col[j] * v[j]);
      av[i] = acc.value();
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = av[i] / v[i];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    const double norm = numeric::sup_norm(av);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("linearized_radius: degenerate iterate");
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / norm;
    if (hi - lo <= opt.rel_tol * hi) {
      est.radius = 0.5 * (lo + hi);
      est.lower = lo;
      est.upper = hi;
      est.eigenvector = v;
      est.iterations = it;
      return est;
    }
  }
  throw NumericalError("linearized_radius: power iteration stagnated after " +
                       std::to_string(opt.max_iter) + " iterations");
}

inline double linearized_radius(const KernelMatrix& kernel, const EnergyGrid& grid,
                                double temperature) {
  return linearized_spectrum(kernel, grid, temperature).radius;
}

inline double linearized_radius(const PotentialKernel& k, const EnergyGrid& grid,
                                double temperature) {
  return linearized_radius(KernelMatrix(k, grid), grid, temperature);
}

struct TcResult {
  double tc = 0.0;
  double spectral_radius_at_tc = 0.0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  std::size_t power_iterations = 0;
  std::size_t bisection_steps = 0;
};

struct TcOptions {
  /// Tolerance on |radius - 1|.
  double radius_tol = 1e-10;
  /// Relative width of the final temperature bracket.
  double rel_temperature_tol = 1e-10;
  std::size_t max_bisections = 400;
};

/// Bisection on radius(T) - 1 after bracketing by doubling or halving from
/// T = epsilon.
inline TcResult find_tc(const KernelMatrix& kernel, const EnergyGrid& grid,
                        const TcOptions& opt = {}) {
  if (!(opt.radius_tol > 0.0)) throw ParameterError("find_tc: tolerance must be positive");
  TcResult res;
  auto radius = [&](double t) {
    const SpectralEstimate e = linearized_spectrum(kernel, grid, t);
    res.power_iterations += e.iterations;
    return e.radius;
  };

  const double eps = grid.epsilon() > 0.0 ? grid.epsilon() : grid.node(0);
  const double lowest = eps / 100.0;
  const double highest = 1e3 * grid.omega_cut();
  double lo = eps;
  double hi = eps;
  if (radius(eps) > 1.0) {
    while (true) {
      lo = hi;
      hi *= 2.0;
      if (hi > highest) {
        throw BracketingError("find_tc: radius stays above 1 up to T = 1e3 * omega_cut");
      }
      if (radius(hi) < 1.0) break;
    }
  } else {
    while (true) {
      hi = lo;
      lo *= 0.5;
      if (lo < lowest) {
        throw NoTransitionError("find_tc: radius below 1 down to T = epsilon / 100; "
                                "kernel too weak for a transition");
      }
      if (radius(lo) > 1.0) break;
    }
  }

  for (std::size_t step = 1; step <= opt.max_bisections; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double r = radius(mid);
    res.bisection_steps = step;
    const bool width_ok = (hi - lo) <= opt.rel_temperature_tol * mid;
    if (std::abs(r - 1.0) <= opt.radius_tol && width_ok) {
      res.tc = mid;
      res.spectral_radius_at_tc = r;
      res.bracket_low = lo;
      res.bracket_high = hi;
      return res;
    }
    if (mid <= lo || mid >= hi) break;
    if (r > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("find_tc: bisection could not meet |radius - 1| <= " +
                       std::to_string(opt.radius_tol));
}

inline TcResult find_tc(const PotentialKernel& k, const EnergyGrid& grid, double tol = 1e-10) {
  TcOptions opt;
  opt.radius_tol = tol;
  return find_tc(KernelMatrix(k, grid), grid, opt);
}

}  // namespace bcsgap
