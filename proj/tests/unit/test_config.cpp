#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcsgap/cli.hpp"
#include "bcsgap/config.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace bcsgap;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "[material]\n"
    "epsilon = 1e-3\n"
    "omega_cut = 1\n"
    "kernel = constant\n"
    "strength = 0.3\n";

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / "bcsgap_test" /
               (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path source_dir() {
  const char* d = std::getenv("BCSGAP_SOURCE_DIR");
  return d ? fs::path(d) : fs::path(".");
}

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalConstantUsesDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.kernel_kind, "constant");
  EXPECT_EQ(c.material.epsilon, 1e-3);
  EXPECT_EQ(c.material.omega_cut, 1.0);
  EXPECT_EQ(c.material.n0, 1.0);
  EXPECT_EQ(c.grid.panels, 16u);
  EXPECT_EQ(c.grid.order, 20u);
  EXPECT_EQ(c.solver.tol, 1e-10);
  EXPECT_EQ(c.solver.max_iter, 10000u);
  EXPECT_EQ(c.solver.damping, 1.0);
  EXPECT_FALSE(c.solver.polish);
  EXPECT_TRUE(c.continuation);
  EXPECT_FALSE(c.sweep.t_max.has_value());
  EXPECT_EQ(c.sweep.points, 41u);
  EXPECT_EQ(c.output.directory, "out");
  EXPECT_TRUE(c.output.wants("csv"));
  EXPECT_FALSE(c.output.wants("svg"));
  EXPECT_EQ(c.source_text, kMinimal);
}

TEST(Config, EpsilonAboveCutoffNamesEpsilon) {
  const std::string text =
      "[material]\nepsilon = 2\nomega_cut = 1\nkernel = constant\nstrength = 0.3\n";
  EXPECT_EQ(config_error_key(text), "material.epsilon");
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(Config, UnknownKeysAndSectionsAreRejected) {
  EXPECT_EQ(config_error_key(std::string(kMinimal) + "colour = red\n"), "material.colour");
  EXPECT_EQ(config_error_key(std::string(kMinimal) + "[plot]\nwidth = 3\n"), "plot");
  EXPECT_EQ(config_error_key(std::string(kMinimal) + "[solver]\ntolerance = 1e-9\n"),
            "solver.tolerance");
}

TEST(Config, ValidationNamesTheKey) {
  const std::string m = kMinimal;
  EXPECT_EQ(config_error_key(m + "[solver]\ntol = abc\n"), "solver.tol");
  EXPECT_EQ(config_error_key(m + "[solver]\ndamping = 1.5\n"), "solver.damping");
  EXPECT_EQ(config_error_key(m + "[grid]\norder = 1\n"), "grid.order");
  EXPECT_EQ(config_error_key(m + "[sweep]\nspacing = cubic\n"), "sweep.spacing");
  EXPECT_EQ(config_error_key(m + "[sweep]\nspacing = log\n"), "sweep.t_min");
  EXPECT_EQ(config_error_key(m + "[sweep]\nt_min = 0.1\nt_max = 0.05\n"), "sweep.t_max");
  EXPECT_EQ(config_error_key(m + "[output]\nformats = csv, pdf\n"), "output.formats");
  EXPECT_EQ(config_error_key(m + "[asymptotics]\nfractions = 0.1, 2\n"),
            "asymptotics.fractions");
  EXPECT_EQ(config_error_key("[material]\nepsilon = 1e-3\nkernel = constant\nstrength = 1\n"),
            "material.omega_cut");
  EXPECT_EQ(config_error_key("[material]\nepsilon = 1e-3\nomega_cut = 1\nkernel = magic\n"),
            "material.kernel");
  EXPECT_EQ(config_error_key(m + "coefficients = 1, 2\n"), "material.coefficients");
}

TEST(Config, SeparableAndOptionalSections) {
  const RunConfig c = parse_config(
      "[material]\nepsilon = 0.01\nomega_cut = 2\nn0 = 3\nkernel = separable\n"
      "coefficients = 0.5, 0.125\n"
      "[solver]\ntol = 1e-12\nmax_iter = 50\ndamping = 0.5\npolish = true\ncontinuation = no\n"
      "[sweep]\nt_min = 0.001\nt_max = 0.1\npoints = 5\nspacing = log\n"
      "[thermo]\nfirst_step = 0.01\nsecond_step = 0.04\ndu2_step = 1e-3\n"
      "[solve]\ntemperature = 0.02\n"
      "[asymptotics]\nfractions = 0.3, 0.15\nt0_threshold = 1e-5\n"
      "[output]\ndirectory = results\nformats = json, svg\n");
  const auto& sk = std::get<SeparableKernel>(c.material.kernel.variant());
  EXPECT_EQ(sk.coefficients, (std::vector<double>{0.5, 0.125}));
  EXPECT_EQ(c.material.n0, 3.0);
  EXPECT_EQ(c.solver.max_iter, 50u);
  EXPECT_TRUE(c.solver.polish);
  EXPECT_FALSE(c.continuation);
  EXPECT_EQ(c.sweep.spacing, Spacing::log);
  EXPECT_EQ(c.thermo.du2_step(0.5), 1e-3);
  EXPECT_EQ(c.solve_temperature, 0.02);
  EXPECT_EQ(c.asymptotics.fractions, (std::vector<double>{0.3, 0.15}));
  EXPECT_EQ(c.output.directory, "results");
  EXPECT_FALSE(c.output.wants("csv"));
  EXPECT_TRUE(c.output.wants("svg"));
}

TEST(Config, NegativeTableCellIsAPositivityErrorWithCoordinates) {
  const fs::path dir = scratch();
  write(dir / "k.csv",
        "x\\xi,0.001,0.5,1\n"
        "0.001,0.3,0.3,0.3\n"
        "0.5,0.3,0.3,-0.2\n"
        "1,0.3,0.3,0.3\n");
  const fs::path ini = write(dir / "t.ini",
                             "[material]\nepsilon = 0.001\nomega_cut = 1\nkernel = tabulated\n"
                             "table = k.csv\n");
  try {
    load_config(ini.string());
    FAIL() << "expected PositivityError";
  } catch (const PositivityError& e) {
    EXPECT_NE(std::string(e.what()).find("cell (1, 2)"), std::string::npos) << e.what();
    EXPECT_LT(e.value(), 0.0);
  }
}

TEST(Config, TableMustSpanTheBand) {
  const fs::path dir = scratch();
  write(dir / "k.csv", "x\\xi,0.01,1\n0.01,0.3,0.3\n1,0.3,0.3\n");
  write(dir / "t.ini",
        "[material]\nepsilon = 0.001\nomega_cut = 1\nkernel = tabulated\ntable = k.csv\n");
  try {
    load_config((dir / "t.ini").string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "material.table");
  }
  EXPECT_THROW(load_config((dir / "missing.ini").string()), ConfigError);
}

TEST(Config, ReferenceConfigsLoad) {
  for (const char* name : {"constant.ini", "separable.ini", "weak_coupling.ini", "tabulated.ini"}) {
    const RunConfig c = load_config((source_dir() / "configs" / name).string());
    EXPECT_FALSE(c.source_text.empty()) << name;
  }
}

TEST(Config, SweepLadder) {
  SweepConfig s;
  s.points = 5;
  const auto lin = sweep_temperatures(s, 0.04);
  ASSERT_EQ(lin.size(), 5u);
  EXPECT_EQ(lin.front(), 0.0);
  EXPECT_DOUBLE_EQ(lin[2], 0.022);
  EXPECT_EQ(lin.back(), 1.1 * 0.04);
  s.spacing = Spacing::log;
  s.t_min = 1e-3;
  s.t_max = 1e-1;
  const auto lg = sweep_temperatures(s, 0.0);
  ASSERT_EQ(lg.size(), 6u);
  EXPECT_EQ(lg[0], 0.0);
  EXPECT_DOUBLE_EQ(lg[1], 1e-3);
  EXPECT_NEAR(lg[3], 1e-2, 1e-15);
  EXPECT_EQ(lg.back(), 1e-1);
}

TEST(Output, SeventeenSignificantDigits) {
  EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(io::fmt(1.0), "1");
  EXPECT_EQ(io::fmt(std::nan("")), "nan");
  io::Csv csv({"a", "b"});
  csv.row({1.0 / 3.0, 2.0});
  EXPECT_EQ(csv.str(), "a,b\n0.33333333333333331,2\n");
  EXPECT_THROW(csv.row({1.0}), ParameterError);
}

TEST(RunCommand, TcMatchesScalarOracle) {
  const fs::path out = scratch();
  RunConfig c = parse_config(kMinimal);
  c.source_path = "minimal.ini";
  std::ostringstream log, err;
  ASSERT_EQ(cli::run_command("tc", c, out, log, err), 0) << err.str();
  const auto j = nlohmann::json::parse(slurp(out / "tc.json"));
  const double tc = j.at("tc").get<double>();
  EXPECT_NEAR(tc, oracle::constant_tc(0.3, 1e-3, 1.0), 1e-8 * tc);
  EXPECT_EQ(slurp(out / "minimal.ini"), kMinimal);
}

TEST(RunCommand, SolveAboveTcIsTrivialAndSucceeds) {
  const fs::path out = scratch();
  RunConfig c = parse_config(std::string(kMinimal) + "[solve]\ntemperature = 0.05\n");
  std::ostringstream log, err;
  EXPECT_EQ(cli::run_command("solve", c, out, log, err), 0) << err.str();
  const auto j = nlohmann::json::parse(slurp(out / "solve.json"));
  EXPECT_TRUE(j.at("trivial").get<bool>());
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_EQ(j.at("gap_max").get<double>(), 0.0);
}

TEST(RunCommand, NonConvergenceIsFlaggedAndExitsThree) {
  const fs::path out = scratch();
  RunConfig c = parse_config(std::string(kMinimal) +
                             "[grid]\npanels = 4\n[solver]\nmax_iter = 3\n"
                             "[sweep]\nt_max = 0.03\npoints = 3\n");
  std::ostringstream log, err;
  EXPECT_EQ(cli::run_command("sweep", c, out, log, err), cli::kNonConvergence);
  const std::string csv = slurp(out / "gap_sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "T,xi,u0,residual,converged");
  EXPECT_NE(csv.find(",0\n"), std::string::npos);
}

TEST(RunCommand, ErrorClassesMapToExitCodes) {
  const fs::path out = scratch();
  RunConfig c = parse_config(kMinimal);
  std::ostringstream log, err;
  EXPECT_EQ(cli::run_command("plot", c, out, log, err), cli::kConfig);
  RunConfig weak = parse_config(
      "[material]\nepsilon = 0.5\nomega_cut = 1\nkernel = constant\nstrength = 0.01\n");
  EXPECT_EQ(cli::run_command("tc", weak, out, log, err), cli::kNumerical);
  EXPECT_NE(err.str().find("numerical error"), std::string::npos);
}

TEST(RunCommand, RatioOnWeakCouplingReference) {
  const fs::path out = scratch();
  const RunConfig c = load_config((source_dir() / "configs" / "weak_coupling.ini").string());
  std::ostringstream log, err;
  ASSERT_EQ(cli::run_command("ratio", c, out, log, err), 0) << err.str();
  const auto j = nlohmann::json::parse(slurp(out / "ratio.json"));
  EXPECT_LT(j.at("deviation").get<double>(), 0.01);
  EXPECT_EQ(j.at("denominator").get<std::string>(), "C_V^N(T_c)");
  EXPECT_NE(log.str().find("deviation"), std::string::npos);
}

TEST(RunCommand, RepeatedRunsAreByteIdentical) {
  const fs::path a = scratch() / "a";
  const fs::path b = scratch().parent_path() / "RunCommand.RepeatedRunsAreByteIdentical" / "b";
  RunConfig c = parse_config(std::string(kMinimal) +
                             "[grid]\npanels = 8\n[sweep]\npoints = 6\n"
                             "[output]\nformats = csv, json, svg\n");
  std::ostringstream log, err;
  for (const fs::path& dir : {a, b}) {
    ASSERT_EQ(cli::run_command("sweep", c, dir, log, err), 0) << err.str();
    ASSERT_EQ(cli::run_command("solve", c, dir, log, err), 0) << err.str();
  }
  for (const char* f : {"gap_sweep.csv", "solve.csv", "solve.json", "gap_sweep.svg"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty()) << f;
  }
}
