#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace memsfde::cli {

/// Command-line flags that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> replicates;
  bool antithetic = false;
};

void apply(RunConfig& cfg, const Overrides& o);

/// Reads, overrides and validates a config file.
RunConfig load_config(const std::string& path, Command command, const Overrides& o);

InitialPath build_initial_path(const RunConfig& cfg);

/// Deterministic artifacts of one run. The manifest excludes the timestamp.
struct Artifacts {
  std::string csv;
  std::vector<std::string> manifest;
};

Artifacts execute(const RunConfig& cfg);

/// Writes `csv` to `out` (stdout if empty) and the manifest to `out.manifest`
/// (stderr if empty), appending a timestamp line.
void emit(const Artifacts& a, const std::string& out);

/// Full CLI entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace memsfde::cli
