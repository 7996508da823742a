#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace experiments {

// Flat key=value configuration. Keys prefixed "derived.", "result." or "meta."
// in a config file are outputs from a previous run and are ignored on load, so
// an emitted metadata file can be fed back verbatim as --config.
using Config = std::map<std::string, std::string>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 failed check, 2 config error, 3 numerical failure
  std::vector<CheckResult> checks;
  Config metadata;
};

std::vector<std::string> experiment_ids();

// Defaults for one experiment; unknown id raises ConfigError.
Config default_config(const std::string& id);

Config load_config_file(const std::string& path);

// Runs one experiment: writes CSV artifacts, a gnuplot companion script,
// metadata.txt and summary.txt into out_dir. Unknown override keys raise
// ConfigError (reported as exit code 2).
RunResult run(const std::string& id, const Config& overrides, const std::string& out_dir);

}  // namespace experiments
