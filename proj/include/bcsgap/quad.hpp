#pragma once

// Composite Gauss-Legendre quadrature on the energy band and on the half line.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/numeric.hpp"

namespace bcsgap {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], ascending.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// P_n(z) and P_{n-1}(z) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(std::size_t n, double z) {
  double prev = 1.0;
  double cur = z;
  for (std::size_t k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * z * cur - (k - 1.0) * prev) / static_cast<double>(k);
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace detail

inline GaussRule gauss_legendre_rule(std::size_t n) {
  if (n < 1) throw ParameterError("gauss_legendre_rule: order must be >= 1");
  GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(numeric::kPi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pm] = detail::legendre_pair(n, z);
      const double dz = pn / (dn * (z * pn - pm) / (z * z - 1.0));
      z -= dz;
      if (std::abs(dz) <= 1e-16) break;
    }
    const auto [pn, pm] = detail::legendre_pair(n, z);
    const double dp = dn * (z * pn - pm) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Composite Gauss-Legendre grid on [epsilon, omega_cut]. Immutable once built.
class EnergyGrid {
 public:
  double epsilon() const noexcept { return epsilon_; }
  double omega_cut() const noexcept { return omega_cut_; }
  std::size_t panels() const noexcept { return panels_; }
  std::size_t order() const noexcept { return order_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  /// Panel boundaries, panels() + 1 values from epsilon to omega_cut.
  std::span<const double> panel_edges() const noexcept { return edges_; }

  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  friend EnergyGrid build_grid(double, double, std::size_t, std::size_t);

 private:
  EnergyGrid() = default;

  double epsilon_ = 0.0;
  double omega_cut_ = 0.0;
  std::size_t panels_ = 0;
  std::size_t order_ = 0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> edges_;
};

/// Uniform panels, `order` Gauss points each. A zero lower limit is accepted so
/// the same builder serves dimensionless grids; physical bands use epsilon > 0.
inline EnergyGrid build_grid(double epsilon, double omega_cut, std::size_t panels,
                             std::size_t order) {
  if (!(std::isfinite(epsilon) && std::isfinite(omega_cut)) || epsilon < 0.0 ||
      !(epsilon < omega_cut)) {
    throw ParameterError("build_grid: require 0 <= epsilon < omega_cut (epsilon=" +
                         std::to_string(epsilon) + ", omega_cut=" + std::to_string(omega_cut) +
                         ")");
  }
  if (panels < 1) throw ParameterError("build_grid: panels must be >= 1");
  if (order < 2) throw ParameterError("build_grid: order must be >= 2");

  const GaussRule rule = gauss_legendre_rule(order);
  EnergyGrid g;
  g.epsilon_ = epsilon;
  g.omega_cut_ = omega_cut;
  g.panels_ = panels;
  g.order_ = order;
  g.edges_.resize(panels + 1);
  const double width = omega_cut - epsilon;
  for (std::size_t p = 0; p <= panels; ++p) {
    g.edges_[p] = epsilon + width * static_cast<double>(p) / static_cast<double>(panels);
  }
  g.edges_.back() = omega_cut;
  g.nodes_.reserve(panels * order);
  g.weights_.reserve(panels * order);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = g.edges_[p];
    const double b = g.edges_[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t k = 0; k < order; ++k) {
      g.nodes_.push_back(mid + half * rule.nodes[k]);
      g.weights_.push_back(half * rule.weights[k]);
    }
  }
  return g;
}

/// Sum of w_i f(x_i) over the grid. Throws EvaluationError on a non-finite sample.
template <class F>
double integrate(F&& f, const EnergyGrid& grid) {
  numeric::CompensatedSum acc;
  const auto x = grid.nodes();
  const auto w = grid.weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = f(x[i]);
    if (!std::isfinite(v)) {
      throw EvaluationError("integrate: non-finite integrand at node " + std::to_string(i) +
                                " (x=" + std::to_string(x[i]) + ")",
                            i, x[i]);
    }
    acc.add(w[i] * v);
  }
  return acc.value();
}

/// Weighted sum of precomputed samples aligned with the grid nodes.
inline double integrate_samples(std::span<const double> samples, const EnergyGrid& grid) {
  numeric::CompensatedSum acc;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < samples.size(); ++i) acc.add(w[i] * samples[i]);
  return acc.value();
}

struct HalfLineOptions {
  double rel_tol = 1e-12;
  std::size_t order = 20;
  std::size_t max_refinements = 10;
};

namespace detail {

// One pass over (0, 1) under eta = c s / (1 - s). Panels are graded
// geometrically toward both ends (`levels` halvings each side) and every
// panel is further split into `split` equal pieces. The right half is
// parametrized by t = 1 - s so that panels near s = 1 keep full precision.
template <class F>
double half_line_pass(F& f, double c, const GaussRule& rule, std::size_t levels,
                      std::size_t split) {
  // [0, 2^{-(L+1)}], then [2^{-(j+1)}, 2^{-j}] for j = L..1; used for both s and t.
  std::vector<std::pair<double, double>> side;
  side.emplace_back(0.0, std::ldexp(1.0, -static_cast<int>(levels + 1)));
  for (std::size_t j = levels; j >= 1; --j) {
    side.emplace_back(std::ldexp(1.0, -static_cast<int>(j + 1)),
                      std::ldexp(1.0, -static_cast<int>(j)));
  }

  numeric::CompensatedSum acc;
  for (int right = 0; right < 2; ++right) {
    for (const auto& [a0, b0] : side) {
      const double step = (b0 - a0) / static_cast<double>(split);
      for (std::size_t m = 0; m < split; ++m) {
        const double a = a0 + step * static_cast<double>(m);
        const double b = (m + 1 == split) ? b0 : a + step;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          const double v0 = mid + half * rule.nodes[k];  // s on the left, t on the right
          if (!(v0 > 0.0)) continue;
          const double s = right ? 1.0 - v0 : v0;
          const double t = right ? v0 : 1.0 - v0;
          const double eta = c * s / t;
          const double jac = c / (t * t);
          const double v = f(eta);
          if (!std::isfinite(v)) {
            throw EvaluationError(
                "integrate_half_line: non-finite integrand at eta=" + std::to_string(eta), k,
                eta);
          }
          acc.add(half * rule.weights[k] * v * jac);
        }
      }
    }
  }
  return acc.value();
}

}  // namespace detail

/// Integral of f over (0, inf). decay_scale places the bulk of the integrand
/// near the middle of the mapped interval.
template <class F>
double integrate_half_line(F&& f, double decay_scale, const HalfLineOptions& opt = {}) {
  if (!(decay_scale > 0.0) || !std::isfinite(decay_scale)) {
    throw ParameterError("integrate_half_line: decay_scale must be positive");
  }
  const GaussRule rule = gauss_legendre_rule(opt.order);
  double previous = detail::half_line_pass(f, decay_scale, rule, 12, 1);
  double last = previous;
  for (std::size_t k = 2; k <= opt.max_refinements; ++k) {
    last = detail::half_line_pass(f, decay_scale, rule, 12 * k, k);
    const double scale = std::max(std::abs(last), std::numeric_limits<double>::min());
    if (std::abs(last - previous) <= opt.rel_tol * scale) return last;
    previous = last;
  }
  throw AccuracyError("integrate_half_line: refinement did not converge (last two estimates " +
                          std::to_string(previous) + ", " + std::to_string(last) + ")",
                      previous, last);
}

}  // namespace bcsgap
