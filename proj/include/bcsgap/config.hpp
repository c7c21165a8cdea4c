#pragma once

// INI run configuration. Every key is checked; unknown sections and keys are
// rejected with the offending name.
//
//   [material]  epsilon, omega_cut, n0, kernel = constant|separable|tabulated,
//               strength (constant), coefficients (separable), table (tabulated)
//   [grid]      panels, order
//   [solver]    tol, max_iter, damping, polish, continuation
//   [sweep]     t_min, t_max, points, spacing = linear|log
//   [thermo]    first_step, second_step, du2_step
//   [solve]     temperature
//   [asymptotics] fractions, t0_threshold
//   [output]    directory, formats = csv, json, svg

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bcsgap/errors.hpp"
#include "bcsgap/gap_solver.hpp"
#include "bcsgap/potential.hpp"
#include "bcsgap/quad.hpp"
#include "bcsgap/thermo.hpp"

namespace bcsgap {

enum class Spacing { linear, log };

struct GridConfig {
  std::size_t panels = 16;
  std::size_t order = 20;
};

struct SweepConfig {
  double t_min = 0.0;
  /// Unset: 1.1 T_c.
  std::optional<double> t_max;
  std::size_t points = 41;
  Spacing spacing = Spacing::linear;
};

struct AsymptoticsConfig {
  std::vector<double> fractions{0.2, 0.1, 0.05};
  double t0_threshold = 1e-6;
};

struct OutputConfig {
  std::string directory = "out";
  std::set<std::string> formats{"csv", "json"};

  bool wants(const std::string& f) const { return formats.count(f) != 0; }
};

struct RunConfig {
  explicit RunConfig(MaterialSpec m) : material(std::move(m)) {}

  MaterialSpec material;
  std::string kernel_kind;
  GridConfig grid;
  SolverOptions solver;
  bool continuation = true;
  SweepConfig sweep;
  ThermoSteps thermo;
  double solve_temperature = 0.0;
  AsymptoticsConfig asymptotics;
  OutputConfig output;
  /// Path and verbatim text of the file the configuration came from.
  std::string source_path;
  std::string source_text;

  EnergyGrid build_energy_grid() const {
    return build_grid(material.epsilon, material.omega_cut, grid.panels, grid.order);
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"material", {"epsilon", "omega_cut", "n0", "kernel", "strength", "coefficients", "table"}},
      {"grid", {"panels", "order"}},
      {"solver", {"tol", "max_iter", "damping", "polish", "continuation"}},
      {"sweep", {"t_min", "t_max", "points", "spacing"}},
      {"thermo", {"first_step", "second_step", "du2_step"}},
      {"solve", {"temperature"}},
      {"asymptotics", {"fractions", "t0_threshold"}},
      {"output", {"directory", "formats"}},
  };
  return schema;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name)
      : tree_(tree), name_(std::move(name)) {}

  std::string key(const std::string& k) const { return name_ + "." + k; }

  std::optional<std::string> raw(const std::string& k) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(k);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& k) const {
    auto v = raw(k);
    if (!v || v->empty()) throw ConfigError("missing required key '" + key(k) + "'", key(k));
    return *v;
  }

  double number(const std::string& k, const std::string& text) const {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw ConfigError("key '" + key(k) + "': '" + text + "' is not a finite number", key(k));
    }
    return v;
  }

  std::optional<double> real(const std::string& k) const {
    auto v = raw(k);
    if (!v) return std::nullopt;
    return number(k, *v);
  }

  double real(const std::string& k, double fallback) const { return real(k).value_or(fallback); }

  std::size_t count(const std::string& k, std::size_t fallback) const {
    auto v = raw(k);
    if (!v) return fallback;
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
      throw ConfigError("key '" + key(k) + "': '" + *v + "' is not a nonnegative integer", key(k));
    }
    return n;
  }

  bool flag(const std::string& k, bool fallback) const {
    auto v = raw(k);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError("key '" + key(k) + "': expected true or false", key(k));
  }

  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    for (const auto& item : split_list(require(k))) out.push_back(number(k, item));
    return out;
  }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
};

inline void config_check(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError("key '" + key + "': " + why, key);
}

}  // namespace detail

/// Parses and validates INI text. `base_dir` resolves a relative kernel table path.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  {
    std::istringstream in(text);
    try {
      pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("config parse error: " + e.message() + " at line " +
                            std::to_string(e.line()),
                        "");
    }
  }
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError("key '" + section + "' must appear inside a section", section);
      }
      throw ConfigError("unknown section '" + section + "'", section);
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError("unknown key '" + section + "." + key + "'", section + "." + key);
      }
    }
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return detail::Section(child ? &*child : nullptr, name);
  };
  using detail::config_check;

  const auto mat = section("material");
  const double eps = mat.number("epsilon", mat.require("epsilon"));
  const double b = mat.number("omega_cut", mat.require("omega_cut"));
  config_check(b > 0.0, "material.omega_cut", "must be positive");
  config_check(eps > 0.0, "material.epsilon", "must be positive");
  config_check(eps < b, "material.epsilon", "must be smaller than omega_cut");
  const double n0 = mat.real("n0", 1.0);
  config_check(n0 > 0.0, "material.n0", "must be positive");

  const std::string kind = mat.require("kernel");
  const Band band{eps, b};
  std::optional<PotentialKernel> kernel;
  auto forbid = [&](const std::string& k) {
    config_check(!mat.raw(k), mat.key(k), "not used by kernel = " + kind);
  };
  if (kind == "constant") {
    forbid("coefficients");
    forbid("table");
    const double u = mat.number("strength", mat.require("strength"));
    config_check(u > 0.0, "material.strength", "must be positive");
    kernel = PotentialKernel::constant(u, band);
  } else if (kind == "separable") {
    forbid("strength");
    forbid("table");
    kernel = PotentialKernel::separable(mat.reals("coefficients"), band);
  } else if (kind == "tabulated") {
    forbid("strength");
    forbid("coefficients");
    std::filesystem::path table = mat.require("table");
    if (table.is_relative() && !base_dir.empty()) table = base_dir / table;
    std::ifstream in(table);
    config_check(static_cast<bool>(in), "material.table", "cannot open '" + table.string() + "'");
    try {
      kernel = PotentialKernel::tabulated(parse_kernel_csv(in));
    } catch (const ParameterError& e) {
      throw ConfigError("key 'material.table': " + std::string(e.what()), "material.table");
    }
    const double slack = 1e-12 * b;
    config_check(std::abs(kernel->band().lo - eps) <= slack &&
                     std::abs(kernel->band().hi - b) <= slack,
                 "material.table", "knots must span exactly [epsilon, omega_cut]");
  } else {
    throw ConfigError("key 'material.kernel': unknown kernel '" + kind +
                          "' (constant, separable, tabulated)",
                      "material.kernel");
  }
  RunConfig cfg(MaterialSpec{eps, b, n0, *kernel});
  cfg.kernel_kind = kind;

  const auto grid = section("grid");
  cfg.grid.panels = grid.count("panels", cfg.grid.panels);
  cfg.grid.order = grid.count("order", cfg.grid.order);
  config_check(cfg.grid.panels >= 1, "grid.panels", "must be >= 1");
  config_check(cfg.grid.order >= 2, "grid.order", "must be >= 2");

  const auto solver = section("solver");
  cfg.solver.tol = solver.real("tol", cfg.solver.tol);
  cfg.solver.max_iter = solver.count("max_iter", cfg.solver.max_iter);
  cfg.solver.damping = solver.real("damping", cfg.solver.damping);
  cfg.solver.polish = solver.flag("polish", cfg.solver.polish);
  cfg.continuation = solver.flag("continuation", true);
  config_check(cfg.solver.tol > 0.0, "solver.tol", "must be positive");
  config_check(cfg.solver.max_iter >= 1, "solver.max_iter", "must be >= 1");
  config_check(cfg.solver.damping > 0.0 && cfg.solver.damping <= 1.0, "solver.damping",
               "must lie in (0, 1]");

  const auto sweep = section("sweep");
  cfg.sweep.t_min = sweep.real("t_min", 0.0);
  cfg.sweep.t_max = sweep.real("t_max");
  cfg.sweep.points = sweep.count("points", cfg.sweep.points);
  const std::string spacing = sweep.raw("spacing").value_or("linear");
  config_check(spacing == "linear" || spacing == "log", "sweep.spacing",
               "must be linear or log");
  cfg.sweep.spacing = spacing == "log" ? Spacing::log : Spacing::linear;
  config_check(cfg.sweep.t_min >= 0.0, "sweep.t_min", "must be >= 0");
  config_check(cfg.sweep.points >= 2, "sweep.points", "must be >= 2");
  if (cfg.sweep.t_max) {
    config_check(*cfg.sweep.t_max > cfg.sweep.t_min, "sweep.t_max", "must exceed t_min");
  }
  if (cfg.sweep.spacing == Spacing::log) {
    config_check(cfg.sweep.t_min > 0.0, "sweep.t_min", "log spacing needs t_min > 0");
  }

  const auto thermo = section("thermo");
  cfg.thermo.first = thermo.real("first_step", cfg.thermo.first);
  cfg.thermo.second = thermo.real("second_step", cfg.thermo.second);
  cfg.thermo.du2 = thermo.real("du2_step", 0.0);
  config_check(cfg.thermo.first > 0.0 && cfg.thermo.first < 0.5, "thermo.first_step",
               "relative step must lie in (0, 0.5)");
  config_check(cfg.thermo.second > 0.0 && cfg.thermo.second < 0.5, "thermo.second_step",
               "relative step must lie in (0, 0.5)");
  config_check(cfg.thermo.du2 >= 0.0, "thermo.du2_step", "must be >= 0 (0 selects the default)");

  cfg.solve_temperature = section("solve").real("temperature", 0.0);
  config_check(cfg.solve_temperature >= 0.0, "solve.temperature", "must be >= 0");

  const auto asym = section("asymptotics");
  if (asym.raw("fractions")) cfg.asymptotics.fractions = asym.reals("fractions");
  for (double f : cfg.asymptotics.fractions) {
    config_check(f > 0.0 && f < 1.0, "asymptotics.fractions", "each fraction must lie in (0, 1)");
  }
  cfg.asymptotics.t0_threshold = asym.real("t0_threshold", cfg.asymptotics.t0_threshold);
  config_check(cfg.asymptotics.t0_threshold > 0.0, "asymptotics.t0_threshold", "must be positive");

  const auto out = section("output");
  cfg.output.directory = out.raw("directory").value_or(cfg.output.directory);
  config_check(!cfg.output.directory.empty(), "output.directory", "must not be empty");
  if (auto f = out.raw("formats")) {
    cfg.output.formats.clear();
    for (const auto& item : detail::split_list(*f)) {
      config_check(item == "csv" || item == "json" || item == "svg", "output.formats",
                   "unknown format '" + item + "'");
      cfg.output.formats.insert(item);
    }
  }

  cfg.source_text = text;
  return cfg;
}

/// Reads, parses and validates a configuration file, including kernel
/// positivity on the configured grid (PositivityError names the table cell).
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'", "");
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig cfg = parse_config(text.str(), std::filesystem::path(path).parent_path());
  cfg.source_path = path;
  validate_material(cfg.material, cfg.build_energy_grid());
  return cfg;
}

/// Sweep ladder, always starting at T = 0.
inline std::vector<double> sweep_temperatures(const SweepConfig& s, double tc) {
  const double hi = s.t_max.value_or(1.1 * tc);
  if (!(hi > s.t_min)) throw ParameterError("sweep: t_max must exceed t_min");
  std::vector<double> t;
  t.reserve(s.points + 1);
  const double n = static_cast<double>(s.points - 1);
  for (std::size_t i = 0; i < s.points; ++i) {
    const double f = static_cast<double>(i) / n;
    t.push_back(s.spacing == Spacing::log ? s.t_min * std::pow(hi / s.t_min, f)
                                          : s.t_min + (hi - s.t_min) * f);
  }
  t.back() = hi;
  if (t.front() != 0.0) t.insert(t.begin(), 0.0);
  return t;
}

}  // namespace bcsgap
