#pragma once

// Damped Picard iteration for the gap equation
//
//   u(T, x) = int_eps^b U(x, xi) u(T, xi) / E(xi) * tanh(E(xi) / 2T) dxi,
//   E(xi) = sqrt(xi^2 + u(T, xi)^2),
//
// discretized on the grid nodes (Nystrom), with temperature continuation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/numeric.hpp"
#include "bcsgap/potential.hpp"
#include "bcsgap/quad.hpp"

namespace bcsgap {

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  double damping = 1.0;
  /// After reaching tol, keep iterating while the residual still decreases
  /// (at most kMaxPolishSteps more steps). Finite differences of solved
  /// profiles at low T need the rounding floor rather than tol.
  bool polish = false;
};

struct GapSolution {
  double temperature = 0.0;
  std::vector<double> values;
  double residual_sup = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// The iteration collapsed onto the zero fixed point.
  bool trivial = false;
};

inline constexpr double kCollapseThreshold = 1e-13;
inline constexpr double kMinDamping = 1.0 / 64.0;
inline constexpr std::size_t kMaxPolishSteps = 200;

/// tanh(E / 2T), identically 1 at T = 0.
inline double thermal_factor(double energy, double temperature) {
  if (temperature <= 0.0) return 1.0;
  return numeric::tanh_sat(energy / (2.0 * temperature));
}

/// Right-hand side of the discretized gap equation.
inline std::vector<double> gap_rhs(const KernelMatrix& kernel, const EnergyGrid& grid,
                                   double temperature, std::span<const double> u) {
  const std::size_t n = grid.size();
  if (u.size() != n || kernel.size() != n) {
    throw ParameterError("gap_rhs: vector/grid size mismatch");
  }
  if (temperature < 0.0) throw ParameterError("gap_rhs: temperature must be >= 0");
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xi = grid.node(j);
    if (u[j] == 0.0) {
      phi[j] = 0.0;
      continue;
    }
    const double e = std::hypot(xi, u[j]);
    phi[j] = grid.weight(j) * u[j] / e * thermal_factor(e, temperature);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = kernel.row(i);
    numeric::CompensatedSum acc;
    for (std::size_t j = 0; j < n; ++j) acc.add(row[j] * phi[j]);
    out[i] = acc.value();
  }
  return out;
}

inline std::vector<double> gap_rhs(const PotentialKernel& k, const EnergyGrid& grid,
                                   double temperature, std::span<const double> u) {
  return gap_rhs(KernelMatrix(k, grid), grid, temperature, u);
}

/// Row integrals int U(x_i, xi) dxi; a strictly positive starting profile.
inline std::vector<double> row_integrals(const KernelMatrix& kernel, const EnergyGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    numeric::CompensatedSum acc;
    const auto row = kernel.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) acc.add(grid.weight(j) * row[j]);
    out[i] = acc.value();
  }
  return out;
}

namespace detail {

inline GapSolution trivial_solution(double temperature, std::size_t n, std::size_t iterations) {
  GapSolution s;
  s.temperature = temperature;
  s.values.assign(n, 0.0);
  s.residual_sup = 0.0;
  s.iterations = iterations;
  s.converged = true;
  s.trivial = true;
  return s;
}

}  // namespace detail

/// Iterates u <- (1 - d) u + d F(u) until sup|F(u) - u| <= tol.
///
/// When the iterate is so small that the map is linear to ~1e-8 (sup u below
/// 1e-4 of the first node) a residual below tol does not certify a nontrivial
/// solution; iteration continues until the iterate either grows out of that
/// regime or collapses below 1e-13, in which case the exact zero solution is
/// returned and flagged trivial. Inside that regime a geometric decay rate that
/// has settled below one already decides the collapse, so iteration stops there.
inline GapSolution solve_gap(const KernelMatrix& kernel, const EnergyGrid& grid,
                             double temperature, std::span<const double> init,
                             const SolverOptions& opt = {}) {
  const std::size_t n = grid.size();
  if (init.size() != n) throw ParameterError("solve_gap: init size does not match the grid");
  if (!(opt.tol > 0.0)) throw ParameterError("solve_gap: tol must be positive");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) {
    throw ParameterError("solve_gap: damping must lie in (0, 1]");
  }
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("solve_gap: temperature must be finite and >= 0");
  }
  for (double v : init) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ParameterError("solve_gap: init must be finite and nonnegative");
    }
  }

  std::vector<double> u(init.begin(), init.end());
  if (numeric::sup_norm(u) == 0.0) return detail::trivial_solution(temperature, n, 0);

  const double linear_scale = 1e-4 * grid.node(0);
  double damping = opt.damping;
  double prev_res = std::numeric_limits<double>::infinity();
  double prev_rate = -1.0;
  int increases = 0;
  double res = 0.0;

  for (std::size_t it = 0; it <= opt.max_iter; ++it) {
    std::vector<double> f = gap_rhs(kernel, grid, temperature, u);
    res = numeric::sup_diff(f, u);
    const double su = numeric::sup_norm(u);
    if (su < kCollapseThreshold) return detail::trivial_solution(temperature, n, it);

    const bool linear = su < linear_scale;
    if (res <= opt.tol && !linear) {
      if (opt.polish) {
        std::vector<double> trial(n);
        for (std::size_t k = 0; k < kMaxPolishSteps; ++k) {
          for (std::size_t i = 0; i < n; ++i) trial[i] = (1.0 - damping) * u[i] + damping * f[i];
          std::vector<double> ft = gap_rhs(kernel, grid, temperature, trial);
          const double rt = numeric::sup_diff(ft, trial);
          if (!(rt < res)) break;
          u.swap(trial);
          f = std::move(ft);
          res = rt;
          ++it;
        }
      }
      GapSolution s;
      s.temperature = temperature;
      s.values = std::move(u);
      s.residual_sup = res;
      s.iterations = it;
      s.converged = true;
      return s;
    }
    if (it == opt.max_iter) break;

    if (res > prev_res) {
      ++increases;
    } else {
      increases = 0;
    }
    if (increases >= 5) {
      if (damping <= kMinDamping) break;
      damping = std::max(kMinDamping, 0.5 * damping);
      increases = 0;
    }
    prev_res = res;

    for (std::size_t i = 0; i < n; ++i) u[i] = (1.0 - damping) * u[i] + damping * f[i];

    if (linear) {
      const double rate = numeric::sup_norm(u) / su;
      if (prev_rate > 0.0 && rate < 1.0 - 1e-6 && std::abs(rate - prev_rate) <= 1e-9) {
        return detail::trivial_solution(temperature, n, it + 1);
      }
      prev_rate = rate;
    } else {
      prev_rate = -1.0;
    }
  }

  GapSolution s;
  s.temperature = temperature;
  s.values = std::move(u);
  s.residual_sup = res;
  s.iterations = opt.max_iter;
  s.converged = false;
  return s;
}

inline GapSolution solve_gap(const PotentialKernel& k, const EnergyGrid& grid, double temperature,
                             std::span<const double> init, const SolverOptions& opt = {}) {
  return solve_gap(KernelMatrix(k, grid), grid, temperature, init, opt);
}

/// T = 0 solve; an empty init selects the kernel row integrals.
inline GapSolution solve_gap_zero_T(const KernelMatrix& kernel, const EnergyGrid& grid,
                                    const SolverOptions& opt = {},
                                    std::span<const double> init = {}) {
  if (init.empty()) {
    const auto start = row_integrals(kernel, grid);
    return solve_gap(kernel, grid, 0.0, start, opt);
  }
  return solve_gap(kernel, grid, 0.0, init, opt);
}

inline GapSolution solve_gap_zero_T(const PotentialKernel& k, const EnergyGrid& grid, double tol,
                                    std::size_t max_iter) {
  SolverOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_gap_zero_T(KernelMatrix(k, grid), grid, opt);
}

/// Gap solutions over temperature on one grid. Solutions are cached by exact
/// temperature; `at` solves missing temperatures on demand, warm-started from
/// the nearest cached solution. Not thread-safe.
class GapSweep {
 public:
  GapSweep(PotentialKernel kernel, EnergyGrid grid, SolverOptions opt = {},
           bool normal_state = false)
      : kernel_(std::move(kernel)),
        grid_(std::move(grid)),
        matrix_(std::make_shared<const KernelMatrix>(kernel_, grid_)),
        opt_(opt),
        normal_state_(normal_state) {}

  const PotentialKernel& kernel() const noexcept { return kernel_; }
  const EnergyGrid& grid() const noexcept { return grid_; }
  const KernelMatrix& matrix() const noexcept { return *matrix_; }
  const SolverOptions& options() const noexcept { return opt_; }
  /// Normal-state sweeps hold u = 0 at every temperature.
  bool normal_state() const noexcept { return normal_state_; }

  bool contains(double temperature) const { return solved_.count(temperature) != 0; }

  std::vector<double> temperatures() const {
    std::vector<double> t;
    t.reserve(solved_.size());
    for (const auto& [temp, sol] : solved_) t.push_back(temp);
    return t;
  }

  std::vector<const GapSolution*> solutions() const {
    std::vector<const GapSolution*> out;
    out.reserve(solved_.size());
    for (const auto& [temp, sol] : solved_) out.push_back(&sol);
    return out;
  }

  const GapSolution& at(double temperature) {
    if (auto it = solved_.find(temperature); it != solved_.end()) return it->second;
    return insert(solve_at(temperature, nearest_init(temperature)));
  }

  /// Solve with an explicit initial profile and cache the result.
  const GapSolution& solve(double temperature, std::span<const double> init) {
    return insert(solve_at(temperature, std::vector<double>(init.begin(), init.end())));
  }

  const GapSolution& insert(GapSolution s) {
    const double t = s.temperature;
    solved_.insert_or_assign(t, std::move(s));
    return solved_.at(t);
  }

  std::vector<double> initial_profile() const { return row_integrals(*matrix_, grid_); }

 private:
  GapSolution solve_at(double temperature, std::vector<double> init) const {
    if (normal_state_) return detail::trivial_solution(temperature, grid_.size(), 0);
    return solve_gap(*matrix_, grid_, temperature, init, opt_);
  }

  std::vector<double> nearest_init(double temperature) const {
    if (solved_.empty() || normal_state_) return initial_profile();
    auto hi = solved_.lower_bound(temperature);
    const GapSolution* best = nullptr;
    if (hi == solved_.end()) {
      best = &std::prev(hi)->second;
    } else if (hi == solved_.begin()) {
      best = &hi->second;
    } else {
      auto lo = std::prev(hi);
      best = (temperature - lo->first <= hi->first - temperature) ? &lo->second : &hi->second;
    }
    if (numeric::sup_norm(best->values) == 0.0) {
      // Below T_c a zero neighbour would pin the solve to the trivial branch.
      if (best->temperature > temperature) return initial_profile();
    }
    return best->values;
  }

  PotentialKernel kernel_;
  EnergyGrid grid_;
  std::shared_ptr<const KernelMatrix> matrix_;
  SolverOptions opt_;
  bool normal_state_;
  std::map<double, GapSolution> solved_;
};

/// Sequential sweep over increasing temperatures starting at 0. With
/// continuation each solve starts from the previous solution; otherwise each
/// starts from the kernel row integrals.
inline GapSweep sweep_gap(const PotentialKernel& k, const EnergyGrid& grid,
                          std::span<const double> temperatures, const SolverOptions& opt = {},
                          bool continuation = true) {
  if (temperatures.empty()) throw ParameterError("sweep_gap: no temperatures");
  if (temperatures.front() != 0.0) throw ParameterError("sweep_gap: temperatures must start at 0");
  for (std::size_t i = 1; i < temperatures.size(); ++i) {
    if (!(temperatures[i] > temperatures[i - 1])) {
      throw ParameterError("sweep_gap: temperatures must be strictly increasing");
    }
  }
  GapSweep sweep(k, grid, opt);
  std::vector<double> init = sweep.initial_profile();
  for (double t : temperatures) {
    const GapSolution& s = sweep.solve(t, init);
    if (continuation && s.converged) init = s.values;
  }
  return sweep;
}

inline GapSweep sweep_gap(const PotentialKernel& k, const EnergyGrid& grid,
                          std::span<const double> temperatures, double tol) {
  SolverOptions opt;
  opt.tol = tol;
  return sweep_gap(k, grid, temperatures, opt);
}

inline double default_du2_step(double temperature) {
  return std::max(1e-4, 0.01 * temperature);
}

namespace detail {

inline const GapSolution& require_converged(const GapSolution& s) {
  if (!s.converged) {
    throw ConvergenceError("gap solve did not converge at T=" + std::to_string(s.temperature) +
                           " (residual " + std::to_string(s.residual_sup) + ")");
  }
  return s;
}

}  // namespace detail

/// d(u^2)/dT at every node: central differences at h and h/2 combined by one
/// Richardson step. Missing temperatures are solved on demand.
inline std::vector<double> du2_dT(GapSweep& sweep, double temperature, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("du2_dT: h must be positive");
  if (temperature - h < 0.0) {
    throw ParameterError("du2_dT: stencil T - h falls below zero (T=" +
                         std::to_string(temperature) + ", h=" + std::to_string(h) + ")");
  }
  if (2.0 * h < 10.0 * sweep.options().tol) {
    throw StepSizeError("du2_dT: temperature step " + std::to_string(h) +
                        " is below the solver tolerance scale; use a larger h");
  }
  const std::size_t n = sweep.grid().size();
  auto central = [&](double step) {
    const auto& up = detail::require_converged(sweep.at(temperature + step)).values;
    const auto& dn = detail::require_converged(sweep.at(temperature - step)).values;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = (up[i] - dn[i]) * (up[i] + dn[i]) / (2.0 * step);
    }
    return d;
  };
  const auto coarse = central(h);
  const auto fine = central(0.5 * h);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return out;
}

}  // namespace bcsgap
