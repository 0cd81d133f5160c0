#include "uav_offload/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "uav_offload/io.hpp"
#include "uav_offload/models.hpp"

namespace uav_offload {

namespace {

const char* param_name(SweepParam p) {
  return p == SweepParam::kDeadline ? "deadline_s" : "velocity_scale";
}

// Writes to `path`, or to `out` when no path was given.
bool emit(const std::string& path, const std::string& data, std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    out << data;
    return static_cast<bool>(out);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file || !(file << data)) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

// Loads a scenario, reporting failures on `err`.
bool load(const std::string& path, Scenario& s, std::ostream& err) {
  try {
    s = load_scenario(path);
    return true;
  } catch (const ScenarioValidationError& e) {
    err << "error: invalid scenario '" << path << "'\n";
    for (const auto& v : e.violations()) err << "  - " << v << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return false;
}

struct SolveOptions {
  std::string scenario;
  std::string out;
  std::string format = "csv";
  double tol = SolverConfig{}.dual_tol;
  int max_iters = SolverConfig{}.max_iters;
};

SolverConfig config_from(const SolveOptions& o) {
  SolverConfig cfg;
  cfg.dual_tol = o.tol;
  cfg.max_iters = o.max_iters;
  return cfg;
}

int cmd_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  Scenario s;
  if (!load(o.scenario, s, err)) return kExitFailure;
  Solution sol;
  try {
    sol = optimize(s, config_from(o));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  std::ostringstream data;
  if (o.format == "json") {
    data << solution_to_json(sol).dump(2) << '\n';
  } else {
    write_slot_csv(data, slot_table(s, sol.allocation));
  }
  if (!emit(o.out, data.str(), out, err)) return kExitFailure;
  if (sol.status != SolveStatus::kConverged) {
    err << "status: " << to_string(sol.status) << " after " << sol.iterations << " iterations\n";
  }
  return exit_code_for(sol.status);
}

int cmd_compare(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  Scenario s;
  if (!load(o.scenario, s, err)) return kExitFailure;
  Solution sol;
  EnergyReport equal;
  try {
    sol = optimize(s, config_from(o));
    equal = evaluate(s, equal_allocation(s));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  const double budget = s.devices.cloudlet_budget_j;
  std::ostringstream text;
  text << std::setprecision(10);
  text << "frames                " << s.frames() << " (" << s.usable_slots() << " usable slots)\n";
  text << "mobile_execution_j    " << mobile_execution_energy(s) << '\n';
  text << "equal_allocation_j    " << equal.mobile_uplink_total_j << "  ("
       << (equal.budget_residual_j <= 0.0 ? "within" : "over") << " budget: cloudlet " << equal.cloudlet_total_j
       << " J of " << budget << " J)\n";
  text << "optimal_j             " << sol.primal_value_j << "  (cloudlet " << sol.report.cloudlet_total_j << " J)\n";
  text << "dual_value_j          " << sol.dual_value_j << '\n';
  text << "gap_rel               " << sol.gap_rel << '\n';
  text << "iterations            " << sol.iterations << '\n';
  text << "status                " << to_string(sol.status) << '\n';
  if (!emit(o.out, text.str(), out, err)) return kExitFailure;
  return exit_code_for(sol.status);
}

struct SweepOptions {
  std::string scenario;
  std::string out;
  std::string param;
  std::vector<double> values;
  double tol = SolverConfig{}.dual_tol;
  int max_iters = SolverConfig{}.max_iters;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  Scenario s;
  if (!load(o.scenario, s, err)) return kExitFailure;
  const SweepParam param = o.param == "deadline_s" ? SweepParam::kDeadline : SweepParam::kVelocityScale;
  SolverConfig cfg;
  cfg.dual_tol = o.tol;
  cfg.max_iters = o.max_iters;
  const auto rows = run_sweep(s, param, o.values, cfg);
  std::ostringstream data;
  write_sweep_csv(data, param, rows);
  if (!emit(o.out, data.str(), out, err)) return kExitFailure;

  bool any_ok = false;
  bool all_infeasible = true;
  for (const auto& r : rows) {
    if (!r.error.empty()) err << param_name(param) << "=" << r.param << ": " << r.error << '\n';
    any_ok = any_ok || r.status == "converged" || r.status == "iter_limit";
    all_infeasible = all_infeasible && r.status == "infeasible";
  }
  if (any_ok || rows.empty()) return kExitOk;
  return all_infeasible ? kExitInfeasible : kExitFailure;
}

}  // namespace

int exit_code_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return kExitOk;
    case SolveStatus::kInfeasible:
      return kExitInfeasible;
    case SolveStatus::kIterLimit:
      return kExitIterLimit;
  }
  return kExitFailure;
}

Scenario apply_sweep_value(const Scenario& base, SweepParam param, double value) {
  Scenario s = base;
  if (param == SweepParam::kDeadline) {
    s.timing.deadline_s = value;
  } else {
    if (s.trajectory.kind != TrajectoryKind::kLinear) {
      throw ScenarioValidationError({"velocity_scale sweep requires a linear trajectory"});
    }
    for (double& v : s.trajectory.velocity_mps) v *= value;
  }
  auto violations = validate(s);
  if (!violations.empty()) throw ScenarioValidationError(std::move(violations));
  s.timing.deadline_s = static_cast<double>(s.frames()) * s.timing.frame_s;
  return s;
}

std::vector<SweepRow> run_sweep(const Scenario& base, SweepParam param, const std::vector<double>& values,
                                const SolverConfig& cfg) {
  auto solve_one = [&base, param, cfg](double value) {
    SweepRow row;
    row.param = value;
    row.mobile_exec_j = row.equal_alloc_j = row.optimal_j = std::numeric_limits<double>::quiet_NaN();
    try {
      const Scenario s = apply_sweep_value(base, param, value);
      row.mobile_exec_j = mobile_execution_energy(s);
      row.equal_alloc_j = evaluate(s, equal_allocation(s)).mobile_uplink_total_j;
      const Solution sol = optimize(s, cfg);
      row.status = std::string(to_string(sol.status));
      if (sol.status != SolveStatus::kInfeasible) row.optimal_j = sol.primal_value_j;
    } catch (const ScenarioValidationError& e) {
      row.status = "invalid";
      for (const auto& v : e.violations()) row.error += (row.error.empty() ? "" : "; ") + v;
    } catch (const std::exception& e) {
      row.status = "error";
      row.error = e.what();
    }
    return row;
  };

  std::vector<std::future<SweepRow>> pending;
  pending.reserve(values.size());
  for (double v : values) pending.push_back(std::async(std::launch::async, solve_one, v));
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (auto& f : pending) rows.push_back(f.get());
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepParam param, const std::vector<SweepRow>& rows) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(17);
  buf << param_name(param) << ",mobile_exec_j,equal_alloc_j,optimal_j,status\n";
  for (const auto& r : rows) {
    buf << r.param << ',' << r.mobile_exec_j << ',' << r.equal_alloc_j << ',' << r.optimal_j << ',' << r.status
        << '\n';
  }
  out << buf.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum mobile energy offloading schedules for a UAV-mounted cloudlet", "uav-offload"};
  app.require_subcommand(1);

  SolveOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "Solve one scenario and write the schedule");
  solve->add_option("--scenario", solve_opts.scenario, "Scenario JSON file")->required();
  solve->add_option("--out", solve_opts.out, "Output file (default: standard output)");
  solve->add_option("--format", solve_opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  solve->add_option("--tol", solve_opts.tol, "Relative duality gap tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_option("--max-iters", solve_opts.max_iters, "Iteration limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SweepOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Solve over a list of deadlines or velocity scales");
  sweep->add_option("--scenario", sweep_opts.scenario, "Base scenario JSON file")->required();
  sweep->add_option("--param", sweep_opts.param, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"deadline_s", "velocity_scale"}));
  sweep->add_option("--values", sweep_opts.values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", sweep_opts.out, "Output file (default: standard output)");
  sweep->add_option("--tol", sweep_opts.tol, "Relative duality gap tolerance")->check(CLI::PositiveNumber);
  sweep->add_option("--max-iters", sweep_opts.max_iters, "Iteration limit")->check(CLI::PositiveNumber);

  SolveOptions compare_opts;
  auto* compare = app.add_subcommand("compare", "Compare the optimal schedule with both baselines");
  compare->add_option("--scenario", compare_opts.scenario, "Scenario JSON file")->required();
  compare->add_option("--out", compare_opts.out, "Output file (default: standard output)");
  compare->add_option("--tol", compare_opts.tol, "Relative duality gap tolerance")->check(CLI::PositiveNumber);
  compare->add_option("--max-iters", compare_opts.max_iters, "Iteration limit")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitFailure;
  }

  if (solve->parsed()) return cmd_solve(solve_opts, out, err);
  if (sweep->parsed()) return cmd_sweep(sweep_opts, out, err);
  return cmd_compare(compare_opts, out, err);
}

}  // namespace uav_offload
