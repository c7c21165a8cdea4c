#pragma once

// Pairing kernel U(x, xi) on the band [epsilon, omega_cut]^2.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/quad.hpp"

namespace bcsgap {

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

struct ConstantKernel {
  double value = 0.0;
};

/// U(x, xi) = g(x) g(xi), g(e) = sum_k coefficients[k] e^k.
struct SeparableKernel {
  std::vector<double> coefficients;

  double g(double e) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * e + *it;
    return acc;
  }
};

/// Bilinear interpolation of values[i][j] = U(x_knots[i], xi_knots[j]).
struct TabulatedKernel {
  std::vector<double> x_knots;
  std::vector<double> xi_knots;
  std::vector<std::vector<double>> values;
};

class PotentialKernel {
 public:
  using Variant = std::variant<ConstantKernel, SeparableKernel, TabulatedKernel>;

  static PotentialKernel constant(double value, Band band) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ParameterError("constant kernel: value must be positive and finite");
    }
    return PotentialKernel(ConstantKernel{value}, check_band(band));
  }

  static PotentialKernel separable(std::vector<double> coefficients, Band band) {
    if (coefficients.empty()) throw ParameterError("separable kernel: no coefficients");
    for (double c : coefficients) {
      if (!std::isfinite(c)) throw ParameterError("separable kernel: non-finite coefficient");
    }
    return PotentialKernel(SeparableKernel{std::move(coefficients)}, check_band(band));
  }

  /// The band is taken from the knot range; knots must be strictly increasing.
  static PotentialKernel tabulated(TabulatedKernel table) {
    check_knots(table.x_knots, "x_knots");
    check_knots(table.xi_knots, "xi_knots");
    if (table.values.size() != table.x_knots.size()) {
      throw ParameterError("tabulated kernel: row count does not match x_knots");
    }
    for (const auto& row : table.values) {
      if (row.size() != table.xi_knots.size()) {
        throw ParameterError("tabulated kernel: column count does not match xi_knots");
      }
      for (double v : row) {
        if (!std::isfinite(v)) throw ParameterError("tabulated kernel: non-finite value");
      }
    }
    if (table.x_knots.front() != table.xi_knots.front() ||
        table.x_knots.back() != table.xi_knots.back()) {
      throw ParameterError("tabulated kernel: x and xi knots must span the same band");
    }
    Band band{table.x_knots.front(), table.x_knots.back()};
    return PotentialKernel(std::move(table), check_band(band));
  }

  const Variant& variant() const noexcept { return impl_; }
  Band band() const noexcept { return band_; }

  /// True when the band covers [lo, hi] up to rounding.
  bool covers(double lo, double hi) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(band_.hi));
    return band_.lo <= lo + slack && band_.hi >= hi - slack;
  }

  /// Same variant with every value multiplied by `factor`.
  PotentialKernel scaled(double factor) const {
    if (!(factor > 0.0)) throw ParameterError("kernel scale factor must be positive");
    return std::visit(
        [&](const auto& k) -> PotentialKernel {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantKernel>) {
            return constant(k.value * factor, band_);
          } else if constexpr (std::is_same_v<K, SeparableKernel>) {
            std::vector<double> c = k.coefficients;
            const double s = std::sqrt(factor);
            for (double& v : c) v *= s;
            return separable(std::move(c), band_);
          } else {
            TabulatedKernel t = k;
            for (auto& row : t.values) {
              for (double& v : row) v *= factor;
            }
            return tabulated(std::move(t));
          }
        },
        impl_);
  }

 private:
  PotentialKernel(Variant v, Band band) : impl_(std::move(v)), band_(band) {}

  static Band check_band(Band b) {
    if (!(b.lo > 0.0) || !(b.lo < b.hi) || !std::isfinite(b.hi)) {
      throw ParameterError("kernel band must satisfy 0 < epsilon < omega_cut");
    }
    return b;
  }

  static void check_knots(const std::vector<double>& k, const char* name) {
    if (k.size() < 2) throw ParameterError(std::string("tabulated kernel: need >= 2 ") + name);
    for (std::size_t i = 1; i < k.size(); ++i) {
      if (!(k[i] > k[i - 1])) {
        throw ParameterError(std::string("tabulated kernel: ") + name +
                             " must be strictly increasing");
      }
    }
  }

  Variant impl_;
  Band band_;
};

namespace detail {

// Index of the cell [k[i], k[i+1]] holding v, clamped to the table.
inline std::size_t cell_index(const std::vector<double>& k, double v) {
  auto it = std::upper_bound(k.begin(), k.end(), v);
  std::size_t i = (it == k.begin()) ? 0 : static_cast<std::size_t>(it - k.begin()) - 1;
  return std::min(i, k.size() - 2);
}

inline double bilinear(const TabulatedKernel& t, double x, double xi) {
  const std::size_t i = cell_index(t.x_knots, x);
  const std::size_t j = cell_index(t.xi_knots, xi);
  const double x0 = t.x_knots[i], x1 = t.x_knots[i + 1];
  const double y0 = t.xi_knots[j], y1 = t.xi_knots[j + 1];
  const double a = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
  const double b = std::clamp((xi - y0) / (y1 - y0), 0.0, 1.0);
  const double v00 = t.values[i][j], v01 = t.values[i][j + 1];
  const double v10 = t.values[i + 1][j], v11 = t.values[i + 1][j + 1];
  return (1.0 - a) * ((1.0 - b) * v00 + b * v01) + a * ((1.0 - b) * v10 + b * v11);
}

}  // namespace detail

inline double eval_kernel(const PotentialKernel& k, double x, double xi) {
  const Band band = k.band();
  const double slack = 1e-12 * std::max(1.0, std::abs(band.hi));
  if (!(x >= band.lo - slack && x <= band.hi + slack && xi >= band.lo - slack &&
        xi <= band.hi + slack)) {
    std::ostringstream os;
    os << "eval_kernel: (" << x << ", " << xi << ") outside the band [" << band.lo << ", "
       << band.hi << "]^2";
    throw DomainError(os.str());
  }
  return std::visit(
      [&](const auto& impl) -> double {
        using K = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<K, ConstantKernel>) {
          return impl.value;
        } else if constexpr (std::is_same_v<K, SeparableKernel>) {
          return impl.g(x) * impl.g(xi);
        } else {
          return detail::bilinear(impl, x, xi);
        }
      },
      k.variant());
}

struct KernelValidation {
  double min_value = std::numeric_limits<double>::infinity();
  double min_x = 0.0;
  double min_xi = 0.0;
  std::size_t evaluations = 0;
  /// Table cell (row, column) of the minimum for tabulated kernels.
  std::optional<std::pair<std::size_t, std::size_t>> cell;
};

/// Positivity check on nodes x nodes plus panel edges (and table knots, where
/// the bilinear interpolant attains its extremes). Throws PositivityError.
inline KernelValidation validate_kernel(const PotentialKernel& k, const EnergyGrid& grid) {
  if (!k.covers(grid.epsilon(), grid.omega_cut())) {
    throw DomainError("validate_kernel: kernel band does not cover the grid");
  }
  std::vector<double> pts(grid.nodes().begin(), grid.nodes().end());
  pts.insert(pts.end(), grid.panel_edges().begin(), grid.panel_edges().end());
  std::sort(pts.begin(), pts.end());

  KernelValidation rep;
  auto consider = [&](double x, double xi, double v) {
    ++rep.evaluations;
    if (v < rep.min_value || std::isnan(v)) {
      rep.min_value = v;
      rep.min_x = x;
      rep.min_xi = xi;
    }
  };
  for (double x : pts) {
    for (double xi : pts) consider(x, xi, eval_kernel(k, x, xi));
  }
  if (const auto* t = std::get_if<TabulatedKernel>(&k.variant())) {
    for (std::size_t i = 0; i < t->x_knots.size(); ++i) {
      for (std::size_t j = 0; j < t->xi_knots.size(); ++j) {
        const double v = t->values[i][j];
        // Interpolated values never undercut the knots, so ties go to the cell.
        if (v <= rep.min_value || std::isnan(v)) rep.cell = std::make_pair(i, j);
        consider(t->x_knots[i], t->xi_knots[j], v);
      }
    }
  }
  if (!(rep.min_value > 0.0)) {
    std::ostringstream os;
    os << "kernel is not positive: U(" << rep.min_x << ", " << rep.min_xi
       << ") = " << rep.min_value;
    if (rep.cell) os << " at table cell (" << rep.cell->first << ", " << rep.cell->second << ")";
    throw PositivityError(os.str(), rep.min_x, rep.min_xi, rep.min_value);
  }
  return rep;
}

/// Reads a tabulated kernel: first row holds xi knots (leading corner cell
/// ignored), first column holds x knots, the body holds U values.
inline TabulatedKernel parse_kernel_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  auto number = [](const std::string& s, std::size_t row, std::size_t col) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ParameterError("kernel csv: bad number '" + s + "' at row " + std::to_string(row) +
                           ", column " + std::to_string(col));
    }
    return v;
  };

  TabulatedKernel t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.front() == '#') continue;
    const auto cells = split(line);
    if (row == 0) {
      for (std::size_t c = 1; c < cells.size(); ++c) t.xi_knots.push_back(number(cells[c], 0, c));
    } else {
      if (cells.size() != t.xi_knots.size() + 1) {
        throw ParameterError("kernel csv: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(t.xi_knots.size() + 1));
      }
      t.x_knots.push_back(number(cells[0], row, 0));
      std::vector<double> vals;
      for (std::size_t c = 1; c < cells.size(); ++c) vals.push_back(number(cells[c], row, c));
      t.values.push_back(std::move(vals));
    }
    ++row;
  }
  return t;
}

inline PotentialKernel load_kernel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open kernel csv '" + path + "'");
  return PotentialKernel::tabulated(parse_kernel_csv(in));
}

/// Dense samples U(xi_i, xi_j) on the grid, row-major.
class KernelMatrix {
 public:
  KernelMatrix(const PotentialKernel& k, const EnergyGrid& grid) : n_(grid.size()), data_(n_ * n_) {
    const auto x = grid.nodes();
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) data_[i * n_ + j] = eval_kernel(k, x[i], x[j]);
    }
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

}  // namespace bcsgap
