// bcsgap_cli <command> <config.ini> [--out DIR]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bcsgap/cli.hpp"
#include "bcsgap/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"BCS gap equation solver and thermodynamics pipelines"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  app.add_option("command", command, "solve | sweep | tc | thermo | asympt | ratio | report")
      ->required()
      ->check(CLI::IsMember(bcsgap::cli::commands()));
  app.add_option("config", config_path, "INI configuration file")->required();
  app.add_option("-o,--out", out_dir, "output directory (overrides [output] directory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bcsgap::cli::kConfig;
  }

  std::optional<bcsgap::RunConfig> cfg;
  try {
    cfg = bcsgap::load_config(config_path);
  } catch (const bcsgap::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return bcsgap::cli::kConfig;
  }
  std::optional<std::filesystem::path> out;
  if (!out_dir.empty()) out = out_dir;
  return bcsgap::cli::run_command(command, *cfg, out);
}
