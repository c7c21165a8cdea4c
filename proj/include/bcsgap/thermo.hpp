#pragma once

// Thermodynamic potential, entropy and specific heat on the band.
//
// Omega(T) = -2 N0 int E dx + N0 int u^2 / E tanh(E / 2T) dx
//            - 4 N0 T int ln(1 + e^{-E/T}) dx,        E = sqrt(x^2 + u^2).
//
// Omega carries units of N0 * energy^2 (no volume normalization).

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/gap_solver.hpp"
#include "bcsgap/numeric.hpp"
#include "bcsgap/potential.hpp"
#include "bcsgap/quad.hpp"

namespace bcsgap {

struct MaterialSpec {
  double epsilon = 0.0;
  double omega_cut = 0.0;
  double n0 = 1.0;
  PotentialKernel kernel;
};

/// Throws ParameterError / PositivityError when the material is unusable on `grid`.
inline void validate_material(const MaterialSpec& m, const EnergyGrid& grid) {
  if (!(m.epsilon > 0.0) || !(m.epsilon < m.omega_cut) || !std::isfinite(m.omega_cut)) {
    throw ParameterError("material: require 0 < epsilon < omega_cut");
  }
  if (!(m.n0 > 0.0) || !std::isfinite(m.n0)) throw ParameterError("material: n0 must be > 0");
  if (!m.kernel.covers(m.epsilon, m.omega_cut)) {
    throw ParameterError("material: kernel band does not cover [epsilon, omega_cut]");
  }
  validate_kernel(m.kernel, grid);
}

namespace detail {

inline void check_band(const MaterialSpec& m, const EnergyGrid& grid) {
  const double slack = 1e-12 * m.omega_cut;
  if (std::abs(grid.epsilon() - m.epsilon) > slack ||
      std::abs(grid.omega_cut() - m.omega_cut) > slack) {
    throw ParameterError("thermo: grid band does not match the material band");
  }
}

}  // namespace detail

/// Omega + N0 (b^2 - eps^2): the part of Omega that depends on T or u.
/// Finite differences operate on this to avoid cancelling against the
/// dominant constant.
inline double omega_excess(const MaterialSpec& m, const EnergyGrid& grid, const GapSolution& sol) {
  detail::check_band(m, grid);
  const double t = sol.temperature;
  numeric::CompensatedSum acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    const double u = sol.values[i];
    const double e = std::hypot(x, u);
    const double u2 = u * u;
    // -2 (E - x) + u^2 / E collapses to -u^4 / (E (E + x)^2).
    double v = -u2 * u2 / (e * (e + x) * (e + x));
    if (t > 0.0) {
      v -= u2 / e * numeric::one_minus_tanh(e / (2.0 * t));
      v -= 4.0 * t * numeric::log1p_exp_neg(e / t);
    }
    acc.add(grid.weight(i) * v);
  }
  return m.n0 * acc.value();
}

inline double omega(const MaterialSpec& m, const EnergyGrid& grid, const GapSolution& sol) {
  return omega_excess(m, grid, sol) - m.n0 * (m.omega_cut * m.omega_cut - m.epsilon * m.epsilon);
}

/// Terms of dOmega/dT in the order of the analytic expansion. Term 7 is split
/// into its Fermi-energy piece (7a) and its d(u^2)/dT piece (7b).
struct OmegaSlope {
  std::array<double, 8> terms{};
  double total = 0.0;

  double term(int k) const { return terms[static_cast<std::size_t>(k - 1)]; }
  double term7() const { return terms[6] + terms[7]; }
  double term7_energy() const { return terms[6]; }
  double term7_du2() const { return terms[7]; }
};

/// Full analytic dOmega/dT with d(u^2)/dT taken from du2_dT(sweep, T, h).
inline OmegaSlope d_omega_dT_formula(const MaterialSpec& m, GapSweep& sweep, double temperature,
                                     double h) {
  if (!(temperature > 0.0)) throw ParameterError("d_omega_dT_formula: T must be positive");
  const EnergyGrid& grid = sweep.grid();
  detail::check_band(m, grid);
  const auto du2 = du2_dT(sweep, temperature, h);
  const GapSolution& sol = detail::require_converged(sweep.at(temperature));
  const double t = temperature;

  std::array<numeric::CompensatedSum, 8> acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid.weight(i);
    const double x = grid.node(i);
    const double u = sol.values[i];
    const double u2 = u * u;
    const double e = std::hypot(x, u);
    const double th = numeric::tanh_sat(e / (2.0 * t));
    const double s2 = numeric::sech2(e / (2.0 * t));
    const double f = numeric::fermi(e / t);
    const double d = du2[i];
    acc[0].add(-w * d / e);
    acc[1].add(w * d / e * th);
    acc[2].add(-0.5 * w * d * u2 / (e * e * e) * th);
    acc[3].add(w * d * u2 / (e * e) * s2 / (4.0 * t));
    acc[4].add(-w * u2 * s2 / (2.0 * t * t));
    acc[5].add(-4.0 * w * numeric::log1p_exp_neg(e / t));
    acc[6].add(-4.0 * w * f * e / t);
    acc[7].add(2.0 * w * f * d / e);
  }
  OmegaSlope out;
  numeric::CompensatedSum total;
  for (std::size_t k = 0; k < 8; ++k) {
    out.terms[k] = m.n0 * acc[k].value();
    total.add(out.terms[k]);
  }
  out.total = total.value();
  return out;
}

struct ThermoSteps {
  /// Relative step for first derivatives of Omega (h = rel * T).
  double first = 0.02;
  /// Relative step for the second derivative of Omega.
  double second = 0.05;
  /// Absolute step for d(u^2)/dT; <= 0 selects max(1e-4, 0.01 T).
  double du2 = 0.0;

  double du2_step(double t) const { return du2 > 0.0 ? du2 : default_du2_step(t); }
};

struct ThermoPoint {
  double temperature = 0.0;
  double omega = 0.0;
  double entropy_formula = std::numeric_limits<double>::quiet_NaN();
  double entropy_fd = std::numeric_limits<double>::quiet_NaN();
  double cv_fd = std::numeric_limits<double>::quiet_NaN();
  double consistency_gap = std::numeric_limits<double>::quiet_NaN();
  bool entropy_valid = false;
  bool cv_valid = false;
};

namespace detail {

inline double omega_at(const MaterialSpec& m, GapSweep& sweep, double t) {
  return omega_excess(m, sweep.grid(), require_converged(sweep.at(t)));
}

}  // namespace detail

/// -dOmega/dT by central differences at h and h/2 plus one Richardson step.
inline double entropy_fd(const MaterialSpec& m, GapSweep& sweep, double temperature, double h) {
  if (!(h > 0.0) || temperature - h < 0.0) {
    throw ParameterError("entropy_fd: need h > 0 and T - h >= 0");
  }
  auto central = [&](double step) {
    return (detail::omega_at(m, sweep, temperature + step) -
            detail::omega_at(m, sweep, temperature - step)) /
           (2.0 * step);
  };
  const double coarse = central(h);
  const double fine = central(0.5 * h);
  return -(4.0 * fine - coarse) / 3.0;
}

inline double entropy_formula(const MaterialSpec& m, GapSweep& sweep, double temperature,
                              double h_du2) {
  return -d_omega_dT_formula(m, sweep, temperature, h_du2).total;
}

inline double consistency_gap(double formula, double fd, double floor) {
  return std::abs(formula - fd) / std::max(std::abs(fd), floor);
}

/// Entropy by both routes. `h` is the step for the finite-difference route.
inline ThermoPoint entropy(const MaterialSpec& m, GapSweep& sweep, double temperature, double h,
                           const ThermoSteps& steps = {}) {
  ThermoPoint p;
  p.temperature = temperature;
  p.omega = omega(m, sweep.grid(), detail::require_converged(sweep.at(temperature)));
  p.entropy_formula = entropy_formula(m, sweep, temperature, steps.du2_step(temperature));
  p.entropy_fd = entropy_fd(m, sweep, temperature, h);
  p.consistency_gap =
      consistency_gap(p.entropy_formula, p.entropy_fd, 1e-14 * m.n0 * m.omega_cut);
  p.entropy_valid = true;
  return p;
}

/// -T d^2Omega/dT^2 from second differences at h and h/2 plus one Richardson step.
inline double specific_heat(const MaterialSpec& m, GapSweep& sweep, double temperature, double h) {
  if (!(h > 0.0) || temperature - h < 0.0) {
    throw ParameterError("specific_heat: need h > 0 and T - h >= 0");
  }
  const double mid = detail::omega_at(m, sweep, temperature);
  const double full = std::abs(omega(m, sweep.grid(), sweep.at(temperature)));
  const double guard = 100.0 * std::numeric_limits<double>::epsilon() * full;
  auto second = [&](double step) {
    const double num = detail::omega_at(m, sweep, temperature + step) - 2.0 * mid +
                       detail::omega_at(m, sweep, temperature - step);
    if (std::abs(num) < guard) {
      throw StepSizeError("specific_heat: second difference at h=" + std::to_string(step) +
                          " is below rounding level; increase h");
    }
    return num / (step * step);
  };
  const double coarse = second(h);
  const double fine = second(0.5 * h);
  return -temperature * (4.0 * fine - coarse) / 3.0;
}

/// T dS/dT with S from the analytic slope; cross-check for specific_heat.
inline double specific_heat_from_entropy(const MaterialSpec& m, GapSweep& sweep,
                                         double temperature, double h,
                                         const ThermoSteps& steps = {}) {
  if (!(h > 0.0) || temperature - h <= 0.0) {
    throw ParameterError("specific_heat_from_entropy: need h > 0 and T - h > 0");
  }
  auto s = [&](double t) { return entropy_formula(m, sweep, t, steps.du2_step(t)); };
  const double coarse = (s(temperature + h) - s(temperature - h)) / (2.0 * h);
  const double fine = (s(temperature + 0.5 * h) - s(temperature - 0.5 * h)) / h;
  return temperature * (4.0 * fine - coarse) / 3.0;
}

/// Every thermodynamic field at one temperature; a specific heat that cannot
/// be resolved is left NaN with cv_valid = false.
inline ThermoPoint thermo_point(const MaterialSpec& m, GapSweep& sweep, double temperature,
                                const ThermoSteps& steps = {}) {
  ThermoPoint p = entropy(m, sweep, temperature, steps.first * temperature, steps);
  try {
    p.cv_fd = specific_heat(m, sweep, temperature, steps.second * temperature);
    p.cv_valid = true;
  } catch (const StepSizeError&) {
    p.cv_valid = false;
  }
  return p;
}

}  // namespace bcsgap
