#pragma once

#include "blindid/diagnostics.hpp"
#include "blindid/experiments.hpp"
#include "blindid/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace blindid::cli {

enum class Command { simulate, identify, diagnose, montecarlo, sweep };

std::string_view to_string(Command command);
Command parse_command(std::string_view text);

enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 1,
  kIdentifiabilityFailure = 2,
  kNonConvergence = 3,
};

/// Fully resolved run configuration. Serializes to the same JSON document it
/// is parsed from, so a manifest can be passed back as --config.
struct RunConfig {
  Command command = Command::simulate;
  Mode mode = Mode::ltv;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path dataset;  // input bundle for identify / diagnose
  std::filesystem::path out = "blindid_out";
  std::optional<std::filesystem::path> dump_sensing;
  bool plots = false;

  SyntheticConfig synthetic;
  SolverOptions solver;
  std::optional<double> solver_eta;  // unset: realized eta of the dataset
  SweepGrid grid{{5, 10, 15, 20, 25, 30}, {0.0, 0.01, 0.05}};
  DiagnosticsOptions diagnostics;
  std::optional<Index> expected_sparsity;  // diagnose without inputs.csv

  void validate() const;
};

RunConfig parse_config(const nlohmann::json& doc, Command command);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const DiagnosticsReport& report);
nlohmann::json to_json(const MetricsSummary& summary);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

/// Executes one command, writing artifacts and manifest.json into cfg.out.
/// Progress and tables go to `out`, errors to `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Argument parsing plus run(); the body of the blindid executable.
int main(int argc, char** argv);

}  // namespace blindid::cli
