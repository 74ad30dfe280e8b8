#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace curlaw::cli {

// Malformed configuration or flags; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kConfigError = 2, kToleranceExceeded = 3, kRuntimeFailure = 4 };

using Json = nlohmann::ordered_json;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<double> tolerance;
};

/// Config file contents with command-line overrides applied.
Json merged_config(const Json& file_config, const Overrides& o);

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> trailer;  // summary lines written after the rows
};

struct RunResult {
  Table table;
  int exit_code = kOk;
};

/// Runs `command` (theory, simulate, compare, collapse, lens, probe) on a merged
/// config. Throws ConfigError for invalid configs.
RunResult run_command(const std::string& command, const Json& config);

/// CSV unless `path` ends in .jsonl. The merged config leads as a comment line
/// (CSV) or a {"config": ...} object (JSONL).
void write_table(std::ostream& os, const Table& table, const Json& config, bool jsonl);

/// Shortest round-trip decimal form, independent of locale.
std::string format_double(double v);

/// Full front end; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace curlaw::cli
