#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "uav_offload/scenario.hpp"
#include "uav_offload/solver.hpp"

namespace uav_offload {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O, parse, validation or usage error
  kExitInfeasible = 2,
  kExitIterLimit = 3,
};

int exit_code_for(SolveStatus status);

enum class SweepParam { kDeadline, kVelocityScale };

struct SweepRow {
  double param = 0.0;
  double mobile_exec_j = 0.0;
  double equal_alloc_j = 0.0;
  double optimal_j = 0.0;
  /// Solver status, or "invalid" when the swept value gives no valid scenario.
  std::string status;
  std::string error;
};

/// Copy of `base` with one parameter replaced; throws ScenarioValidationError.
Scenario apply_sweep_value(const Scenario& base, SweepParam param, double value);

/// Solves one scenario per value, concurrently; rows follow input order.
std::vector<SweepRow> run_sweep(const Scenario& base, SweepParam param, const std::vector<double>& values,
                                const SolverConfig& cfg = SolverConfig{});

void write_sweep_csv(std::ostream& out, SweepParam param, const std::vector<SweepRow>& rows);

/// Entry point of the command-line tool; `args` excludes the program name.
/// Data goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uav_offload
