#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hyperilf/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Implicit-Lyapunov-function controller experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run one experiment and write its artifacts");
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  bool print_config = false;
  run_cmd->add_option("experiment", experiment, "experiment id")->required();
  run_cmd->add_option("--config", config_path, "key=value config file");
  run_cmd->add_option("--out", out_dir, "output directory (default runs/<experiment>)");
  run_cmd->add_option("--seed", seed, "override the seed config key");
  run_cmd->add_flag("--print-config", print_config, "print the effective config and exit");

  auto* list_cmd = app.add_subcommand("list", "list experiment ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  if (list_cmd->parsed()) {
    for (const auto& id : experiments::experiment_ids()) std::cout << id << "\n";
    return 0;
  }

  try {
    experiments::Config overrides;
    if (!config_path.empty()) overrides = experiments::load_config_file(config_path);
    if (seed >= 0) overrides["seed"] = std::to_string(seed);

    if (print_config) {
      experiments::Config cfg = experiments::default_config(experiment);
      for (const auto& [k, v] : overrides) {
        if (cfg.find(k) == cfg.end())
          throw experiments::ConfigError("unknown config key: " + k);
        cfg[k] = v;
      }
      for (const auto& [k, v] : cfg) std::cout << k << "=" << v << "\n";
      return 0;
    }

    if (out_dir.empty()) out_dir = "runs/" + experiment;
    const auto result = experiments::run(experiment, overrides, out_dir);
    for (const auto& c : result.checks)
      std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name
                << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    std::cout << "artifacts: " << out_dir << "\n";
    return result.exit_code;
  } catch (const experiments::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
