#pragma once

// Low-temperature forms of S, C_V and u_0 built from the T = 0 gap, the
// critical-field integral and the ratio H_c(0)^2 / (T_c C_V^N(T_c)).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/gap_solver.hpp"
#include "bcsgap/interp.hpp"
#include "bcsgap/numeric.hpp"
#include "bcsgap/potential.hpp"
#include "bcsgap/quad.hpp"
#include "bcsgap/thermo.hpp"

namespace bcsgap {

/// pi e^{-gamma}: weak-coupling value of u_0(0) / T_c for a constant kernel.
inline const double kGapToTcRatio = numeric::kPi * std::exp(-numeric::kEulerGamma);
/// 6 pi e^{-2 gamma}: half-line limit of the ratio for a constant kernel.
inline const double kUniversalRatio = 6.0 * numeric::kPi * std::exp(-2.0 * numeric::kEulerGamma);

namespace detail {

inline double quasiparticle_energy(const EnergyGrid& grid, const GapSolution& u0, std::size_t i) {
  return std::hypot(grid.node(i), u0.values[i]);
}

inline void check_zero_T(const EnergyGrid& grid, const GapSolution& u0) {
  if (u0.values.size() != grid.size()) {
    throw ParameterError("asymptotics: T = 0 solution does not match the grid");
  }
  if (u0.temperature != 0.0) throw ParameterError("asymptotics: expected the T = 0 solution");
}

}  // namespace detail

/// (4 N0 / T) int X exp(-X / T) dxi, X = sqrt(xi^2 + u_0(0, xi)^2).
inline double entropy_lowT(const MaterialSpec& m, const EnergyGrid& grid, const GapSolution& u0,
                           double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("entropy_lowT: T must be positive");
  detail::check_zero_T(grid, u0);
  numeric::CompensatedSum acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = detail::quasiparticle_energy(grid, u0, i);
    acc.add(grid.weight(i) * x * numeric::exp_neg(x / temperature));
  }
  return 4.0 * m.n0 / temperature * acc.value();
}

/// (4 N0 / T^2) int X^2 exp(-X / T) dxi.
inline double cv_lowT(const MaterialSpec& m, const EnergyGrid& grid, const GapSolution& u0,
                      double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("cv_lowT: T must be positive");
  detail::check_zero_T(grid, u0);
  numeric::CompensatedSum acc;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = detail::quasiparticle_energy(grid, u0, i);
    acc.add(grid.weight(i) * x * x * numeric::exp_neg(x / temperature));
  }
  return 4.0 * m.n0 / (temperature * temperature) * acc.value();
}

/// u_0(0, x_i) - 2 int U(x_i, xi) exp(-X / T) dxi at every node.
inline std::vector<double> gap_lowT(const KernelMatrix& kernel, const EnergyGrid& grid,
                                    const GapSolution& u0, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("gap_lowT: T must be positive");
  detail::check_zero_T(grid, u0);
  const std::size_t n = grid.size();
  std::vector<double> damp(n);
  for (std::size_t j = 0; j < n; ++j) {
    damp[j] = grid.weight(j) *
              numeric::exp_neg(detail::quasiparticle_energy(grid, u0, j) / temperature);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = kernel.row(i);
    numeric::CompensatedSum acc;
    for (std::size_t j = 0; j < n; ++j) acc.add(row[j] * damp[j]);
    out[i] = u0.values[i] - 2.0 * acc.value();
  }
  return out;
}

inline std::vector<double> gap_lowT(const PotentialKernel& k, const EnergyGrid& grid,
                                    const GapSolution& u0, double temperature) {
  return gap_lowT(KernelMatrix(k, grid), grid, u0, temperature);
}

// Constant-kernel closed forms from Laplace's method at the band bottom.

inline double entropy_lowT_closed(double n0, double gap0, double temperature) {
  return 2.0 * std::sqrt(2.0 * numeric::kPi) * n0 * std::pow(gap0, 1.5) /
         std::sqrt(temperature) * numeric::exp_neg(gap0 / temperature);
}

inline double cv_lowT_closed(double n0, double gap0, double temperature) {
  return 2.0 * std::sqrt(2.0 * numeric::kPi) * n0 * std::pow(gap0, 2.5) /
         std::pow(temperature, 1.5) * numeric::exp_neg(gap0 / temperature);
}

inline double gap_lowT_closed(double u_const, double gap0, double temperature) {
  return gap0 - u_const * std::sqrt(2.0 * numeric::kPi * temperature * gap0) *
                    numeric::exp_neg(gap0 / temperature);
}

/// u_0(0, x) on [epsilon, omega_cut]: monotone cubic through the grid values,
/// with the end values at epsilon and omega_cut evaluated from the gap
/// equation itself.
inline Pchip zero_T_profile(const PotentialKernel& k, const EnergyGrid& grid,
                            const GapSolution& u0) {
  detail::check_zero_T(grid, u0);
  const std::size_t n = grid.size();
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = u0.values[j];
    phi[j] = u == 0.0 ? 0.0 : grid.weight(j) * u / std::hypot(grid.node(j), u);
  }
  auto nystrom = [&](double x) {
    numeric::CompensatedSum acc;
    for (std::size_t j = 0; j < n; ++j) acc.add(eval_kernel(k, x, grid.node(j)) * phi[j]);
    return acc.value();
  };
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(n + 2);
  y.reserve(n + 2);
  x.push_back(grid.epsilon());
  y.push_back(nystrom(grid.epsilon()));
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(grid.node(i));
    y.push_back(u0.values[i]);
  }
  x.push_back(grid.omega_cut());
  y.push_back(nystrom(grid.omega_cut()));
  return Pchip(std::move(x), std::move(y));
}

/// {sqrt(eta^2 + a^2) - eta}^2 / sqrt(eta^2 + a^2), written without cancellation.
inline double hc_integrand(double eta, double a) {
  const double e = std::hypot(eta, a);
  const double s = e + eta;
  if (s == 0.0) return 0.0;
  const double a2 = a * a;
  return a2 * a2 / (s * s * e);
}

/// int_0^inf of hc_integrand for constant a; exactly a^2 / 2.
inline double hc_numerator_half_line(double a) {
  if (!(a > 0.0)) throw ParameterError("hc_numerator_half_line: a must be positive");
  return integrate_half_line([a](double eta) { return hc_integrand(eta, a); }, a);
}

/// int_lo^hi eta^2 / cosh^2 eta deta.
inline double cvn_integral(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo)) throw ParameterError("cvn_integral: need 0 <= lo < hi");
  // sech^2 underflows long before eta = 400.
  const double top = std::min(hi, 400.0);
  if (lo >= top) return 0.0;
  const auto panels = static_cast<std::size_t>(std::ceil(4.0 * (top - lo))) + 16;
  const EnergyGrid g = build_grid(lo, top, panels, 20);
  return integrate([](double eta) { return eta * eta * numeric::sech2(eta); }, g);
}

/// int_{eps/2Tc}^{b/2Tc} hc_integrand(eta, u_0(0, 2 Tc eta) / 2Tc) deta, one
/// Gauss panel per interpolation interval.
inline double hc_integral(const Pchip& profile, double tc, std::size_t order = 10) {
  if (!(tc > 0.0)) throw ParameterError("hc_integral: T_c must be positive");
  const GaussRule rule = gauss_legendre_rule(order);
  const auto& knots = profile.knots();
  const double scale = 2.0 * tc;
  numeric::CompensatedSum acc;
  for (std::size_t p = 0; p + 1 < knots.size(); ++p) {
    const double a = knots[p] / scale;
    const double b = knots[p + 1] / scale;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t k = 0; k < order; ++k) {
      const double eta = mid + half * rule.nodes[k];
      const double arg = std::clamp(scale * eta, knots[p], knots[p + 1]);
      acc.add(half * rule.weights[k] * hc_integrand(eta, profile(arg) / scale));
    }
  }
  return acc.value();
}

/// H_c(0)^2 = 32 pi N0 Tc^2 * hc_integral, for a profile spanning the band.
inline double hc0_squared(const MaterialSpec& m, const Pchip& profile, double tc) {
  const double slack = 1e-12 * m.omega_cut;
  if (std::abs(profile.lo() - m.epsilon) > slack || std::abs(profile.hi() - m.omega_cut) > slack) {
    throw ParameterError("hc0_squared: profile does not span [epsilon, omega_cut]");
  }
  return 32.0 * numeric::kPi * m.n0 * tc * tc * hc_integral(profile, tc);
}

inline double hc0_squared(const MaterialSpec& m, const EnergyGrid& grid, const GapSolution& u0,
                          double tc) {
  detail::check_band(m, grid);
  return hc0_squared(m, zero_T_profile(m.kernel, grid, u0), tc);
}

/// C_V^N(T_c) = 8 Tc N0 int_{eps/2Tc}^{b/2Tc} eta^2 / cosh^2 eta deta.
inline double cvn_tc(const MaterialSpec& m, double tc) {
  if (!(tc > 0.0)) throw ParameterError("cvn_tc: T_c must be positive");
  return 8.0 * tc * m.n0 * cvn_integral(m.epsilon / (2.0 * tc), m.omega_cut / (2.0 * tc));
}

struct RatioReport {
  double tc = 0.0;
  double gap0_max = 0.0;
  double hc0_sq = 0.0;
  double cvn_tc = 0.0;
  double ratio = 0.0;
  double universal_limit = kUniversalRatio;
  double deviation = 0.0;
  /// The denominator is the normal-state specific heat at T_c.
  std::string denominator = "C_V^N(T_c)";
  std::string stated_denominator = "C_V(T_c)";
};

inline RatioReport universal_ratio(const MaterialSpec& m, const Pchip& profile, double tc) {
  RatioReport r;
  r.tc = tc;
  for (double x : profile.knots()) r.gap0_max = std::max(r.gap0_max, profile(x));
  r.hc0_sq = hc0_squared(m, profile, tc);
  r.cvn_tc = cvn_tc(m, tc);
  r.ratio = r.hc0_sq / (tc * r.cvn_tc);
  r.deviation = std::abs(r.ratio - r.universal_limit) / r.universal_limit;
  return r;
}

inline RatioReport universal_ratio(const MaterialSpec& m, const EnergyGrid& grid,
                                   const GapSolution& u0, double tc) {
  detail::check_band(m, grid);
  return universal_ratio(m, zero_T_profile(m.kernel, grid, u0), tc);
}

/// Residuals of the two approximations behind the low-temperature forms.
struct ApproxResiduals {
  double temperature = 0.0;
  /// T sup|d(u^2)/dT| / sup u_0(0)^2.
  double du2 = 0.0;
  /// (X/T)^n / cosh(X/T), n = 0, 1, 2, at the smallest X on the band.
  std::array<double, 3> cosh_terms{};
  /// sup|u_0(T) - u_0(0)| / sup u_0(0).
  double gap_shift = 0.0;

  double max() const {
    double m = std::max(du2, gap_shift);
    for (double c : cosh_terms) m = std::max(m, c);
    return m;
  }
};

/// (y^n) / cosh(y) without overflow.
inline double power_over_cosh(double y, int n) {
  if (y <= 0.0) return n == 0 ? 1.0 : 0.0;
  const double logv = static_cast<double>(n) * std::log(y) - y;
  return 2.0 * numeric::exp_neg(-logv) / (1.0 + numeric::exp_neg(2.0 * y));
}

inline double residual_du2_step(double temperature) {
  return std::min(default_du2_step(temperature), 0.5 * temperature);
}

inline ApproxResiduals approximation_residuals(GapSweep& sweep, const GapSolution& u0,
                                               double temperature) {
  const EnergyGrid& grid = sweep.grid();
  detail::check_zero_T(grid, u0);
  if (!(temperature > 0.0)) throw ParameterError("approximation_residuals: T must be positive");
  ApproxResiduals r;
  r.temperature = temperature;
  const double umax = numeric::sup_norm(u0.values);
  if (!(umax > 0.0)) throw ParameterError("approximation_residuals: T = 0 gap is trivial");

  const auto d = du2_dT(sweep, temperature, residual_du2_step(temperature));
  r.du2 = temperature * numeric::sup_norm(d) / (umax * umax);

  // Lower bound for min X over the band.
  const double umin = *std::min_element(u0.values.begin(), u0.values.end());
  const double y = std::hypot(grid.epsilon(), umin) / temperature;
  for (int n = 0; n < 3; ++n) r.cosh_terms[static_cast<std::size_t>(n)] = power_over_cosh(y, n);

  const GapSolution& ut = detail::require_converged(sweep.at(temperature));
  r.gap_shift = numeric::sup_diff(ut.values, u0.values) / umax;
  return r;
}

struct T0Result {
  double t0 = 0.0;
  double threshold = 1e-6;
  ApproxResiduals residuals;
  /// Smallest probed temperature that failed the threshold.
  double first_failure = 0.0;
};

/// Largest T at which every approximation residual is below `threshold`:
/// geometric descent from T = u_0(0)/2, then bisection.
inline T0Result measure_t0(GapSweep& sweep, const GapSolution& u0, double threshold = 1e-6,
                           std::size_t bisections = 30) {
  const double umax = numeric::sup_norm(u0.values);
  if (!(umax > 0.0)) throw ParameterError("measure_t0: T = 0 gap is trivial");
  auto passes = [&](double t, ApproxResiduals& out) {
    try {
      out = approximation_residuals(sweep, u0, t);
    } catch (const ConvergenceError&) {
      return false;
    }
    return out.max() < threshold;
  };

  T0Result res;
  res.threshold = threshold;
  double hi = 0.5 * umax;
  double lo = hi;
  ApproxResiduals r;
  bool found = false;
  for (int k = 0; k < 200; ++k) {
    if (passes(lo, r)) {
      found = true;
      break;
    }
    hi = lo;
    lo *= 0.8;
  }
  if (!found) throw NumericalError("measure_t0: no temperature meets the residual threshold");
  if (lo == hi) {
    res.t0 = lo;
    res.residuals = r;
    res.first_failure = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  ApproxResiduals best = r;
  for (std::size_t k = 0; k < bisections; ++k) {
    const double mid = 0.5 * (lo + hi);
    ApproxResiduals rm;
    if (passes(mid, rm)) {
      lo = mid;
      best = rm;
    } else {
      hi = mid;
    }
  }
  res.t0 = lo;
  res.residuals = best;
  res.first_failure = hi;
  return res;
}

struct RelativeErrors {
  double entropy = 0.0;
  double cv = 0.0;
  double gap = 0.0;
};

struct AsymptoticReport {
  double temperature = 0.0;
  double s_lowT = 0.0;
  double s_full = 0.0;
  double cv_lowT = 0.0;
  double cv_full = 0.0;
  std::vector<double> gap_lowT;
  std::vector<double> gap_full;
  RelativeErrors relative_errors;
  bool cv_valid = false;
};

inline double relative_error(double approx, double exact) {
  return std::abs(approx - exact) / std::abs(exact);
}

/// Low-temperature forms against full numerics at each T. The gap error is
/// sup|gap_lowT - gap_full| / sup gap_full.
inline std::vector<AsymptoticReport> build_report(const MaterialSpec& m, GapSweep& sweep,
                                                  const GapSolution& u0,
                                                  const std::vector<double>& temperatures,
                                                  const ThermoSteps& steps = {}) {
  std::vector<AsymptoticReport> out;
  out.reserve(temperatures.size());
  for (double t : temperatures) {
    AsymptoticReport r;
    r.temperature = t;
    r.s_lowT = entropy_lowT(m, sweep.grid(), u0, t);
    r.cv_lowT = cv_lowT(m, sweep.grid(), u0, t);
    r.gap_lowT = gap_lowT(sweep.matrix(), sweep.grid(), u0, t);
    r.s_full = entropy_formula(m, sweep, t, steps.du2_step(t));
    try {
      r.cv_full = specific_heat(m, sweep, t, steps.second * t);
      r.cv_valid = true;
    } catch (const StepSizeError&) {
      r.cv_full = std::numeric_limits<double>::quiet_NaN();
    }
    r.gap_full = detail::require_converged(sweep.at(t)).values;
    r.relative_errors.entropy = relative_error(r.s_lowT, r.s_full);
    r.relative_errors.cv = r.cv_valid ? relative_error(r.cv_lowT, r.cv_full)
                                      : std::numeric_limits<double>::quiet_NaN();
    r.relative_errors.gap =
        numeric::sup_diff(r.gap_lowT, r.gap_full) / numeric::sup_norm(r.gap_full);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bcsgap
