// dicke_run --config <file> [--out <dir>] [--threads <n>] [--strict]
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 non-convergence under --strict.

#include "dicke/cli.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"Gaussian dynamics of the two-ensemble Dicke model"};
  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 0;
  bool strict = false;
  app.add_option("--config", config_path, "run configuration (key = value)")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for grid points (overrides run.threads)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "exit 4 when any convergence flag is raised");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dicke::cli::kExitConfig;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config '" << config_path << "'\n";
    return dicke::cli::kExitConfig;
  }
  std::stringstream text;
  text << in.rdbuf();

  dicke::config::RunConfig cfg;
  try {
    cfg = dicke::config::parse_config(text.str());
  } catch (const dicke::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dicke::cli::kExitConfig;
  }
  if (threads > 0) cfg.threads = threads;
  cfg.strict = cfg.strict || strict;

  const auto outcome = dicke::cli::run(cfg, out_dir);
  for (const auto& p : outcome.artifacts) std::cout << p.string() << "\n";
  if (outcome.exit_code != dicke::cli::kExitOk) std::cerr << "error: " << outcome.message << "\n";
  return outcome.exit_code;
}
