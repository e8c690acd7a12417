#include "fraclab/config.hpp"
#include "fraclab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Spectral fractional Laplacian laboratory with mixed boundary conditions"};
  app.set_version_flag("--version", std::string(fraclab::kVersion));
  std::string subcommand, config_path, out_dir = ".";
  unsigned threads = 0;
  bool verbose = false;
  app.add_option("subcommand", subcommand, "eigen | isometry | sobolev | rates | fiber | solve | multiplicity")
      ->required();
  app.add_option("--config", config_path, "config file ([problem], [domain], [weight], [numerics])");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads, 0 = auto");
  app.add_flag("--verbose", verbose, "progress messages on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fraclab::kExitValidation;
  }

  bool known = false;
  for (const auto& name : fraclab::subcommands()) known = known || name == subcommand;
  if (!known) {
    std::cerr << "error: unknown subcommand '" << subcommand << "'\n" << app.help();
    return fraclab::kExitValidation;
  }

  fraclab::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = fraclab::load_config(config_path);
  } catch (const fraclab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fraclab::kExitValidation;
  }
  cfg.subcommand = subcommand;
  cfg.output_dir = out_dir;
  cfg.threads = threads;
  cfg.verbose = verbose;
  try {
    return fraclab::run(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fraclab::kExitPartial;
  }
}
