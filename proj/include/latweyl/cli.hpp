// Experiment front-end: config schema, subcommand dispatch, CSV and JSON sidecar emission.
#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace latweyl::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kAssertionFailed = 1,
  kConfigError = 2,
  kHypothesisFailed = 3,
  kNumericalAbort = 4,
};

const std::vector<std::string>& subcommands();

// Every key with its default; the echoed config is this document with the user's values merged.
json default_config();

// Recursive merge; unknown keys and type mismatches raise ConfigError. symbol.params is free-form.
json merge_config(const json& defaults, const json& user);

// RFC 4180 field quoting.
std::string csv_field(const std::string& s);
std::string csv_number(double v);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool override_hypotheses = false;
  std::optional<std::string> out_dir;
};

struct RunResult {
  int exit_code = kOk;
  std::string message;             // human-readable outcome, failing checks named
  std::vector<std::string> files;  // written outputs
};

// Never throws; errors map onto exit codes. No files are written on a config error.
RunResult run(const std::string& subcommand, const json& user_config, const RunOptions& opt = {});

// Reads a config file (JSON). Parse errors raise ConfigError.
json load_config_file(const std::string& path);

}  // namespace latweyl::cli
