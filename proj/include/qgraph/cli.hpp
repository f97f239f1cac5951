#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qgraph {

struct RunConfig {
  std::string command;
  std::string graph;
  std::string bc;
  std::string out;
  std::string potential;
  std::string check_file;
  std::optional<double> check_lambda;
  double mesh = 0.01;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  std::optional<std::size_t> modes;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::optional<double> weight_eps;
  std::string weight_base;
  std::optional<double> gamma_shift;
  std::size_t samples = 1000;
};

/// Exit codes: 0 all checks passed, 1 a mathematical check failed, 2 input or
/// usage error.
enum ExitCode : int { kPass = 0, kCheckFailed = 1, kInputError = 2 };

struct CommandResult {
  int exit_code = kPass;
  std::string report;  // JSON
};

CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_spectrum(const RunConfig& cfg);
CommandResult cmd_expansion(const RunConfig& cfg);
CommandResult cmd_potential(const RunConfig& cfg);

/// Parses argv, runs the command, prints the report to out and diagnostics to
/// err, writes files under cfg.out when given.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qgraph
