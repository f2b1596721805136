#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memsfde/memsfde.hpp"

namespace memsfde::cli {

enum class Command { simulate, price, converge, hedge, check };

const char* to_string(Command c);
std::optional<Command> parse_command(const std::string& name);

struct InitialPathSpec {
  enum class Kind { constant, values, file, holder };
  Kind kind = Kind::constant;
  double level = 100.0;
  std::vector<double> values;
  std::string file;
  double beta = 0.4;
  double scale = 0.2;
  std::uint64_t seed = 0;
};

struct PriceOptions {
  /// auto, closed_form, nested, full_memory_mc, gap_mc, black_scholes
  std::string method = "auto";
  double time = 0.0;
  std::string path_file;
  int approx_k = 16;
  Payoff payoff = Payoff::call;
};

struct ConvergeOptions {
  std::vector<int> k_values{2, 4, 8, 16};
  double beta = 0.4;
};

struct HedgeOptions {
  /// Empty means {l/4, l/8}.
  std::vector<double> rebalance_dt;
};

struct CheckOptions {
  std::vector<int> k_values{2, 4, 8, 16};
  int gamma = 1;
};

struct RunConfig {
  Command command = Command::price;
  MarketConfig market;
  SimulationConfig simulation;
  FunctionalSpec drift = FunctionalSpec::constant(0.0);
  FunctionalSpec vol = FunctionalSpec::constant(0.2);
  InitialPathSpec initial_path;
  std::string output;
  std::uint64_t stream = 0;
  PriceOptions price;
  ConvergeOptions converge;
  HedgeOptions hedge;
  CheckOptions check;
};

/// Every problem found in a config, not just the first.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Reads YAML config text into a RunConfig without cross-field checks.
/// Unknown keys and malformed values are collected and thrown together.
RunConfig parse_config_raw(const std::string& text, Command command);

/// As above, but appends problems to `errors` instead of throwing, so that
/// cross-field validation can still report its own findings alongside.
RunConfig parse_config_raw(const std::string& text, Command command, std::vector<std::string>& errors);

/// Cross-field validation; returns every violation found.
std::vector<std::string> validate(const RunConfig& cfg);

/// parse_config_raw followed by validate; throws ConfigError on any violation.
RunConfig parse_config(const std::string& text, Command command);

/// Canonical `key=value` lines describing the whole configuration.
std::vector<std::string> describe(const RunConfig& cfg);

/// FNV-1a 64-bit hash of the canonical description, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::string describe(const FunctionalSpec& spec);

}  // namespace memsfde::cli
