#pragma once

// Subcommand pipelines behind the bcsgap_cli tool. Every subcommand writes its
// artifacts into the output directory together with a verbatim copy of the
// configuration file.
//
// Exit status: 0 success, 2 configuration, 3 non-convergence, 4 numerical.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcsgap/asymptotics.hpp"
#include "bcsgap/config.hpp"
#include "bcsgap/errors.hpp"
#include "bcsgap/gap_solver.hpp"
#include "bcsgap/io.hpp"
#include "bcsgap/tc_finder.hpp"
#include "bcsgap/thermo.hpp"

namespace bcsgap::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kNonConvergence = 3, kNumerical = 4 };

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"solve", "sweep", "tc", "thermo",
                                          "asympt", "ratio", "report"};
  return c;
}

namespace detail {

using json = nlohmann::ordered_json;

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

class Pipeline {
 public:
  Pipeline(RunConfig cfg, std::filesystem::path out_dir, std::ostream& log)
      : cfg_(std::move(cfg)), out_(std::move(out_dir)), log_(log), grid_(cfg_.build_energy_grid()) {
    std::filesystem::create_directories(out_);
    const std::string name = cfg_.source_path.empty()
                                 ? std::string("config.ini")
                                 : std::filesystem::path(cfg_.source_path).filename().string();
    io::write_text(out_ / name, cfg_.source_text);
  }

  int status() const noexcept { return status_; }

  const TcResult& tc() {
    if (!tc_) {
      TcOptions opt;
      tc_ = find_tc(KernelMatrix(cfg_.material.kernel, grid_), grid_, opt);
    }
    return *tc_;
  }

  const std::vector<double>& ladder() {
    if (ladder_.empty()) {
      const double tc_value = cfg_.sweep.t_max ? 0.0 : tc().tc;
      ladder_ = sweep_temperatures(cfg_.sweep, tc_value);
    }
    return ladder_;
  }

  GapSweep& sweep() {
    if (!sweep_) {
      sweep_.emplace(sweep_gap(cfg_.material.kernel, grid_, ladder(), cfg_.solver,
                               cfg_.continuation));
    }
    return *sweep_;
  }

  const GapSolution& ground() { return bcsgap::detail::require_converged(sweep().at(0.0)); }

  void solve() {
    GapSweep single(cfg_.material.kernel, grid_, cfg_.solver);
    const GapSolution& s = single.at(cfg_.solve_temperature);
    if (!s.converged) flag_nonconvergence("solve", s.temperature);
    if (wants("json")) {
      detail::json j;
      j["temperature"] = s.temperature;
      j["converged"] = s.converged;
      j["trivial"] = s.trivial;
      j["iterations"] = s.iterations;
      j["residual_sup"] = detail::num(s.residual_sup);
      j["gap_max"] = numeric::sup_norm(s.values);
      j["gap_min"] = *std::min_element(s.values.begin(), s.values.end());
      emit("solve.json", detail::dump(j));
    }
    if (wants("csv")) {
      io::Csv csv({"xi", "u0", "converged"});
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        csv.row({grid_.node(i), s.values[i], s.converged ? 1.0 : 0.0});
      }
      emit("solve.csv", csv.str());
    }
    if (wants("svg")) {
      emit("solve.svg", io::svg_plot("gap profile at T = " + io::fmt_short(s.temperature), "xi",
                                     "u0", {{"u0", node_vector(), s.values}}));
    }
    log_ << "solve: T = " << io::fmt(s.temperature) << (s.trivial ? " trivial" : "")
         << (s.converged ? " converged" : " NOT converged") << " in " << s.iterations
         << " iterations, max gap " << io::fmt(numeric::sup_norm(s.values)) << "\n";
  }

  void gap_sweep() {
    GapSweep& sw = sweep();
    io::Csv csv({"T", "xi", "u0", "residual", "converged"});
    std::vector<double> ts, umax;
    for (double t : ladder()) {
      const GapSolution& s = sw.at(t);
      if (!s.converged) flag_nonconvergence("sweep", t);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        csv.row({t, grid_.node(i), s.values[i], s.residual_sup, s.converged ? 1.0 : 0.0});
      }
      ts.push_back(t);
      umax.push_back(numeric::sup_norm(s.values));
    }
    if (wants("csv")) emit("gap_sweep.csv", csv.str());
    if (wants("svg")) {
      emit("gap_sweep.svg", io::svg_plot("maximum gap vs temperature", "T", "max u0",
                                         {{"max u0", ts, umax}}));
      std::vector<io::Series> profiles;
      const auto& lad = ladder();
      for (std::size_t q = 0; q < 4; ++q) {
        const double t = lad[q * (lad.size() - 1) / 4];
        profiles.push_back({"T = " + io::fmt_short(t, 4), node_vector(), sw.at(t).values});
      }
      emit("gap_profiles.svg", io::svg_plot("gap profiles", "xi", "u0", profiles));
    }
    log_ << "sweep: " << ladder().size() << " temperatures up to " << io::fmt(ladder().back())
         << "\n";
  }

  void tc_command() {
    const TcResult& r = tc();
    if (wants("json")) {
      detail::json j;
      j["tc"] = r.tc;
      j["radius"] = r.spectral_radius_at_tc;
      j["bracket"] = {r.bracket_low, r.bracket_high};
      j["power_iterations"] = r.power_iterations;
      j["bisection_steps"] = r.bisection_steps;
      emit("tc.json", detail::dump(j));
    }
    log_ << "tc: T_c = " << io::fmt(r.tc) << " (radius " << io::fmt(r.spectral_radius_at_tc)
         << ")\n";
  }

  const std::vector<ThermoPoint>& thermo() {
    if (!thermo_.empty()) return thermo_;
    GapSweep& sw = sweep();
    for (double t : ladder()) {
      if (t == 0.0) continue;
      ThermoPoint p;
      p.temperature = t;
      try {
        p = thermo_point(cfg_.material, sw, t, cfg_.thermo);
      } catch (const ConvergenceError&) {
        flag_nonconvergence("thermo", t);
      } catch (const StepSizeError&) {
      }
      thermo_.push_back(p);
    }
    io::Csv csv({"T", "Omega", "S_formula", "S_fd", "C_V", "consistency_gap", "converged",
                 "cv_valid"});
    std::vector<double> ts, s, cv;
    for (const auto& p : thermo_) {
      csv.row({p.temperature, p.entropy_valid ? p.omega : std::nan(""), p.entropy_formula,
               p.entropy_fd, p.cv_fd, p.consistency_gap, p.entropy_valid ? 1.0 : 0.0,
               p.cv_valid ? 1.0 : 0.0});
      ts.push_back(p.temperature);
      s.push_back(p.entropy_formula);
      cv.push_back(p.cv_fd);
    }
    if (wants("csv")) emit("thermo_curve.csv", csv.str());
    if (wants("svg")) {
      emit("thermo_curve.svg", io::svg_plot("entropy and specific heat", "T", "S, C_V",
                                            {{"S", ts, s}, {"C_V", ts, cv}}));
    }
    log_ << "thermo: " << thermo_.size() << " temperatures\n";
    return thermo_;
  }

  const std::vector<AsymptoticReport>& asympt() {
    if (!asympt_.empty()) return asympt_;
    const GapSolution& u0 = ground();
    const double d = numeric::sup_norm(u0.values);
    std::vector<double> temps;
    for (double f : cfg_.asymptotics.fractions) temps.push_back(f * d);
    asympt_ = build_report(cfg_.material, sweep(), u0, temps, cfg_.thermo);

    const auto* constant = std::get_if<ConstantKernel>(&cfg_.material.kernel.variant());
    io::Csv csv({"T", "T_over_gap0", "S_lowT", "S_full", "S_rel_err", "C_V_lowT", "C_V_full",
                 "C_V_rel_err", "gap_rel_err", "S_closed", "C_V_closed", "gap_closed_min",
                 "gap_lowT_min"});
    for (const auto& r : asympt_) {
      const double t = r.temperature;
      const double nan = std::nan("");
      const double gmin = *std::min_element(r.gap_lowT.begin(), r.gap_lowT.end());
      csv.row({t, t / d, r.s_lowT, r.s_full, r.relative_errors.entropy, r.cv_lowT, r.cv_full,
               r.relative_errors.cv, r.relative_errors.gap,
               constant ? entropy_lowT_closed(cfg_.material.n0, d, t) : nan,
               constant ? cv_lowT_closed(cfg_.material.n0, d, t) : nan,
               constant ? gap_lowT_closed(constant->value, d, t) : nan, gmin});
    }
    if (wants("csv")) emit("asymptotics.csv", csv.str());
    log_ << "asympt: " << asympt_.size() << " temperatures\n";
    return asympt_;
  }

  const RatioReport& ratio() {
    if (ratio_) return *ratio_;
    ratio_ = universal_ratio(cfg_.material, grid_, ground(), tc().tc);
    const RatioReport& r = *ratio_;
    if (wants("json")) {
      detail::json j;
      j["tc"] = r.tc;
      j["gap0_max"] = r.gap0_max;
      j["gap0_over_tc"] = r.gap0_max / r.tc;
      j["hc0_squared"] = r.hc0_sq;
      j["cvn_tc"] = r.cvn_tc;
      j["ratio"] = r.ratio;
      j["universal_limit"] = r.universal_limit;
      j["deviation"] = r.deviation;
      j["denominator"] = r.denominator;
      j["stated_denominator"] = r.stated_denominator;
      emit("ratio.json", detail::dump(j));
    }
    log_ << "ratio: " << io::fmt(r.ratio) << " vs universal " << io::fmt(r.universal_limit)
         << ", deviation " << io::fmt_short(100.0 * r.deviation, 4) << "%\n";
    return r;
  }

  const T0Result& t0() {
    if (!t0_) t0_ = measure_t0(sweep(), ground(), cfg_.asymptotics.t0_threshold);
    return *t0_;
  }

  void report() {
    const TcResult& tcr = tc();
    gap_sweep();
    tc_command();
    const auto& th = thermo();
    const auto& as = asympt();
    const RatioReport& rr = ratio();
    const T0Result& t = t0();
    const double d = numeric::sup_norm(ground().values);

    std::ostringstream o;
    auto line = [&](const std::string& k, const std::string& v) {
      o << k << std::string(k.size() < 28 ? 28 - k.size() : 1, ' ') << v << "\n";
    };
    o << "bcsgap report\n\n";
    line("config", cfg_.source_path.empty()
                       ? "config.ini"
                       : std::filesystem::path(cfg_.source_path).filename().string());
    line("kernel", cfg_.kernel_kind);
    line("epsilon", io::fmt(cfg_.material.epsilon));
    line("omega_cut", io::fmt(cfg_.material.omega_cut));
    line("n0", io::fmt(cfg_.material.n0));
    line("grid", std::to_string(cfg_.grid.panels) + " panels x " +
                     std::to_string(cfg_.grid.order) + " nodes");
    o << "\n";
    line("T_c", io::fmt(tcr.tc));
    line("u0(0) max", io::fmt(d));
    line("u0(0)/T_c", io::fmt(d / tcr.tc) + "  (weak coupling " + io::fmt(kGapToTcRatio) + ")");
    line("Hc(0)^2", io::fmt(rr.hc0_sq));
    line(rr.denominator, io::fmt(rr.cvn_tc) + "  (stated as " + rr.stated_denominator + ")");
    line("ratio", io::fmt(rr.ratio));
    line("universal limit", io::fmt(rr.universal_limit));
    line("ratio deviation", io::fmt(rr.deviation));
    o << "\n";
    line("T0 threshold", io::fmt(t.threshold));
    line("T0", io::fmt(t.t0));
    line("T0/u0(0)", io::fmt(t.t0 / d));
    line("T0 residual du2", io::fmt(t.residuals.du2));
    line("T0 residual cosh n=0", io::fmt(t.residuals.cosh_terms[0]));
    line("T0 residual cosh n=1", io::fmt(t.residuals.cosh_terms[1]));
    line("T0 residual cosh n=2", io::fmt(t.residuals.cosh_terms[2]));
    line("T0 residual gap shift", io::fmt(t.residuals.gap_shift));
    o << "\nlow-temperature forms vs full numerics (relative errors)\n";
    o << "  T/u0(0)       S             C_V           gap\n";
    for (const auto& r : as) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %-13.6g %-13.6e %-13.6e %-13.6e\n", r.temperature / d,
                    r.relative_errors.entropy, r.relative_errors.cv, r.relative_errors.gap);
      o << buf;
    }
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& p : th) {
      if (!p.entropy_valid) {
        ++bad;
        continue;
      }
      if (p.temperature >= 0.2 * tcr.tc && p.temperature <= 0.8 * tcr.tc) {
        worst = std::max(worst, p.consistency_gap);
      }
    }
    o << "\n";
    line("entropy dual-path gap", io::fmt(worst) + "  (max over 0.2 T_c .. 0.8 T_c)");
    std::size_t unconverged = 0;
    for (const auto* s : sweep().solutions()) unconverged += s->converged ? 0 : 1;
    line("non-converged solves", std::to_string(unconverged + bad));
    emit("summary.txt", o.str());
    log_ << o.str();
  }

 private:
  std::vector<double> node_vector() const { return {grid_.nodes().begin(), grid_.nodes().end()}; }

  bool wants(const std::string& f) const { return cfg_.output.wants(f); }

  void emit(const std::string& name, const std::string& text) {
    io::write_text(out_ / name, text);
  }

  void flag_nonconvergence(const std::string& where, double t) {
    log_ << where << ": solve at T = " << io::fmt(t) << " did not converge\n";
    status_ = std::max(status_, static_cast<int>(kNonConvergence));
  }

  RunConfig cfg_;
  std::filesystem::path out_;
  std::ostream& log_;
  EnergyGrid grid_;
  int status_ = kOk;
  std::optional<TcResult> tc_;
  std::vector<double> ladder_;
  std::optional<GapSweep> sweep_;
  std::vector<ThermoPoint> thermo_;
  std::vector<AsymptoticReport> asympt_;
  std::optional<RatioReport> ratio_;
  std::optional<T0Result> t0_;
};

/// Runs one subcommand; errors are reported on `err` and mapped to exit codes.
inline int run_command(const std::string& cmd, const RunConfig& cfg,
                       std::optional<std::filesystem::path> out_dir = std::nullopt,
                       std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    if (std::find(commands().begin(), commands().end(), cmd) == commands().end()) {
      throw ConfigError("unknown command '" + cmd + "'", "command");
    }
    Pipeline p(cfg, out_dir.value_or(std::filesystem::path(cfg.output.directory)), log);
    if (cmd == "solve") {
      p.solve();
    } else if (cmd == "sweep") {
      p.gap_sweep();
    } else if (cmd == "tc") {
      p.tc_command();
    } else if (cmd == "thermo") {
      p.thermo();
    } else if (cmd == "asympt") {
      p.asympt();
    } else if (cmd == "ratio") {
      p.ratio();
    } else {
      p.report();
    }
    return p.status();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParameterError& e) {
    err << "invalid parameters: " << e.what() << "\n";
    return kConfig;
  } catch (const PositivityError& e) {
    err << "invalid kernel: " << e.what() << "\n";
    return kConfig;
  } catch (const ConvergenceError& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace bcsgap::cli
