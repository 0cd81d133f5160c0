// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "golden.hpp"
#include "support.hpp"
#include "uav_offload/io.hpp"
#include "uav_offload/models.hpp"
#include "uav_offload/oracle.hpp"
#include "uav_offload/solver.hpp"

using namespace uav_offload;
using testing::rel_diff;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Converged solutions collected by the other criteria and certified in criterion 4.
struct Certified {
  std::string label;
  Scenario scenario;
  Solution solution;
};
std::vector<Certified>& solved() {
  static std::vector<Certified> v;
  return v;
}

Solution solve_and_keep(const std::string& label, const Scenario& s) {
  Solution sol = optimize(s);
  if (sol.status == SolveStatus::kConverged) solved().push_back({label, s, sol});
  return sol;
}

Outcome mobile_execution() {
  const double e = mobile_execution_energy(reference_scenario(5.0));
  const double d = rel_diff(e, golden::kMobileExecT5);
  return {d <= 1e-12, "E_mobile = " + fmt("%.15g", e) + " J, rel diff " + fmt("%.2e", d)};
}

Outcome inner_closed_form() {
  const Scenario s = testing::hovering();
  const std::size_t m = static_cast<std::size_t>(s.usable_slots());
  const double h = path_loss(s.trajectory.start_m, s.channel.ref_gain);
  const std::vector<double> gains(m, h);
  const std::vector<double> alpha(m, 0.0);
  const double l = s.application.input_bits;
  const auto r = solve_uplink(alpha, gains, s.channel, s.timing.slot_s, l, SolverConfig{});
  const double bd = s.channel.bandwidth_hz * s.timing.slot_s;
  const double analytic =
      s.channel.noise_psd_w_hz * std::numbers::ln2 / h * std::exp2(l / (static_cast<double>(m) * bd));
  const double d = rel_diff(r.multiplier, analytic);
  const double d_golden = rel_diff(analytic, golden::kLambdaEqual555);
  const bool identical = std::all_of(r.bits.begin(), r.bits.end(), [&](double b) { return b == r.bits[0]; });
  const double split = rel_diff(r.bits[0], l / static_cast<double>(m));
  Outcome o;
  o.pass = d <= 1e-9 && d_golden <= 1e-12 && identical && split <= 1e-12;
  o.detail = "lambda rel diff " + fmt("%.2e", d) + " (analytic vs frozen " + fmt("%.2e", d_golden) +
             "), entries identical: " + (identical ? "yes" : "no") + ", split rel diff " + fmt("%.2e", split);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  double worst_grid = 0.0;
  double worst_barrier = 0.0;
  int count = 0;
  for (std::uint64_t k = 0; k < 12; ++k) {
    const Scenario s = testing::toy_scenario(k);
    const Solution sol = solve_and_keep("toy " + std::to_string(k), s);
    if (sol.status != SolveStatus::kConverged) {
      o.pass = false;
      o.detail += "toy " + std::to_string(k) + " not converged; ";
      continue;
    }
    const auto grid = oracle::grid_search(s, testing::kToyGrid);
    const auto barrier = oracle::primal_descent(s);
    const double step = oracle::grid_step_energy(s, grid.allocation, testing::kToyGrid);
    const double allowed = std::max(0.01 * grid.objective_j, step);
    const double dg = std::abs(sol.primal_value_j - grid.objective_j);
    const double db = rel_diff(sol.primal_value_j, barrier.objective_j);
    worst_grid = std::max(worst_grid, dg / allowed);
    worst_barrier = std::max(worst_barrier, db);
    if (dg > allowed || db > 5e-3) {
      o.pass = false;
      o.detail += "toy " + std::to_string(k) + " disagrees; ";
    }
    ++count;
  }
  o.pass = o.pass && count >= 10;
  o.detail += std::to_string(count) + " toys, worst |opt-grid|/allowance " + fmt("%.3f", worst_grid) +
              ", worst rel diff to barrier " + fmt("%.2e", worst_barrier);
  return o;
}

Outcome duality_certificate() {
  // Binding budgets and other flight speeds on top of the solves collected so far.
  for (double budget : {87410.0, 87500.0, 88000.0, 88300.0, 89000.0}) {
    Scenario s = reference_scenario(5.0);
    s.devices.cloudlet_budget_j = budget;
    solve_and_keep("budget " + fmt("%g", budget), s);
  }
  for (double scale : {0.5, 7.0 / 6.0, 2.0}) {
    Scenario s = reference_scenario(5.0);
    for (double& v : s.trajectory.velocity_mps) v *= scale;
    solve_and_keep("velocity x" + fmt("%g", scale), s);
  }
  Outcome o;
  double gap = 0.0, caus = 0.0, budget = 0.0, kkt = 0.0;
  for (const auto& c : solved()) {
    const auto& sol = c.solution;
    const double l = c.scenario.application.input_bits;
    const double e0 = c.scenario.devices.cloudlet_budget_j;
    const double g = std::abs(sol.gap_rel);
    const double cr = std::max(sol.report.max_causality_residual(), sol.report.max_abs_totals_residual()) / l;
    const double br = sol.report.budget_residual_j / e0;
    const double k = sol.kkt.max_stationarity();
    gap = std::max(gap, g);
    caus = std::max(caus, cr);
    budget = std::max(budget, br);
    kkt = std::max(kkt, k);
    if (!(g <= 1e-5 && cr <= 1e-6 && br <= 1e-5 && k <= 1e-4)) {
      o.pass = false;
      o.detail += c.label + " fails; ";
    }
  }
  o.pass = o.pass && !solved().empty();
  o.detail += std::to_string(solved().size()) + " converged solves, max |gap_rel| " + fmt("%.2e", gap) +
              ", max causality/L " + fmt("%.2e", caus) + ", max budget/E0 " + fmt("%.2e", budget) +
              ", max KKT " + fmt("%.2e", kkt);
  return o;
}

Outcome uplink_follows_distance() {
  const Scenario s = reference_scenario(5.0);
  const Solution sol = solve_and_keep("reference T=5", s);
  if (sol.status != SolveStatus::kConverged) return {false, "reference solve did not converge"};
  const auto positions = sample_positions(s);
  const auto& up = sol.allocation.uplink;
  const std::size_t peak = static_cast<std::size_t>(std::max_element(up.begin(), up.end()) - up.begin());
  auto dist = [&](std::size_t i) { return std::hypot(positions[i][0], positions[i][1], positions[i][2]); };
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < up.size(); ++i) closest = std::min(closest, dist(i));
  const bool at_closest = dist(peak) <= closest * (1 + 1e-12);

  const double l = s.application.input_bits;
  std::vector<double> active;
  for (double c : sol.allocation.compute)
    if (c > 1e-6 * l) active.push_back(c);
  double mean = 0.0;
  for (double c : active) mean += c;
  mean /= static_cast<double>(active.size());
  double var = 0.0;
  for (double c : active) var += (c - mean) * (c - mean);
  const double cv = std::sqrt(var / static_cast<double>(active.size())) / mean;

  Outcome o;
  o.pass = at_closest && cv < 0.2;
  o.detail = "peak uplink in slot " + std::to_string(peak + BitAllocation::kUplinkSlotOffset) + " at " +
             fmt("%.3f", dist(peak)) + " m (closest " + fmt("%.3f", closest) + " m), compute CV " + fmt("%.4f", cv) +
             " over " + std::to_string(active.size()) + " active slots";
  return o;
}

Outcome deadline_sweep() {
  Outcome o;
  struct Point {
    double t;
    Solution sol;
    double equal;
    double mobile;
  };
  std::vector<Point> feasible;
  std::string infeasible;
  for (int t = 1; t <= 5; ++t) {
    const Scenario s = reference_scenario(t);
    const Solution sol = solve_and_keep("deadline " + std::to_string(t), s);
    const double equal = evaluate(s, equal_allocation(s)).mobile_uplink_total_j;
    if (sol.status == SolveStatus::kInfeasible) {
      infeasible += (infeasible.empty() ? "" : ",") + std::to_string(t);
      continue;
    }
    if (sol.status != SolveStatus::kConverged) {
      o.pass = false;
      o.detail += "T=" + std::to_string(t) + " hit the iteration limit; ";
      continue;
    }
    feasible.push_back({static_cast<double>(t), sol, equal, mobile_execution_energy(s)});
  }
  if (feasible.empty()) return {false, "no feasible deadline in 1..5 s"};

  for (std::size_t i = 1; i < feasible.size(); ++i) {
    if (feasible[i].sol.primal_value_j > feasible[i - 1].sol.primal_value_j * (1 + 1e-6)) o.pass = false;
  }
  for (const auto& p : feasible) {
    if (p.sol.primal_value_j > p.equal * (1 + 1e-9)) o.pass = false;
  }
  const auto& first = feasible.front();
  const bool beats_mobile = first.sol.primal_value_j < first.mobile;
  o.pass = o.pass && beats_mobile;

  // Beyond the required range: monotonicity over 5..10 s, where every deadline is feasible.
  bool tail_monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int t = 5; t <= 10; ++t) {
    const Solution sol = solve_and_keep("deadline " + std::to_string(t), reference_scenario(t));
    if (sol.status != SolveStatus::kConverged || sol.primal_value_j > prev * (1 + 1e-6)) tail_monotone = false;
    prev = sol.primal_value_j;
  }
  o.pass = o.pass && tail_monotone;

  o.detail = o.detail + "feasible T = {";
  for (std::size_t i = 0; i < feasible.size(); ++i) o.detail += (i ? "," : "") + fmt("%g", feasible[i].t);
  o.detail += "}, infeasible under the budget: {" + infeasible + "}; at T=" + fmt("%g", first.t) +
              ": optimal " + fmt("%.4g", first.sol.primal_value_j) + " J, equal " + fmt("%.4g", first.equal) +
              " J, mobile " + fmt("%.4g", first.mobile) + " J; nonincreasing over 5..10 s: " +
              (tail_monotone ? "yes" : "no");
  return o;
}

Outcome hovering_symmetry() {
  const Scenario s = testing::hovering();
  const Solution sol = solve_and_keep("hovering", s);
  if (sol.status != SolveStatus::kConverged) return {false, "hovering solve did not converge"};
  const auto eq = equal_allocation(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < eq.size(); ++i) {
    worst = std::max({worst, rel_diff(sol.allocation.uplink[i], eq.uplink[i]),
                      rel_diff(sol.allocation.compute[i], eq.compute[i]),
                      rel_diff(sol.allocation.downlink[i], eq.downlink[i])});
  }
  const double obj = rel_diff(sol.primal_value_j, evaluate(s, eq).mobile_uplink_total_j);
  return {worst <= 1e-3 && obj <= 1e-3,
          "worst entry rel diff " + fmt("%.2e", worst) + ", objective rel diff " + fmt("%.2e", obj)};
}

Outcome model_identities() {
  const Scenario s = reference_scenario(5.0);
  const auto& ch = s.channel;
  const double bd = ch.bandwidth_hz * s.timing.slot_s;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> bits(0.0, 20 * bd);
  std::uniform_real_distribution<double> gain(1e-15, 1e-10);
  bool scaling = true;
  bool cubic = true;
  for (int k = 0; k < 10000; ++k) {
    const double b = bits(rng);
    const double h = gain(rng);
    scaling = scaling && comm_energy(b, 2 * h, ch.bandwidth_hz, s.timing.slot_s, ch.noise_psd_w_hz) ==
                             comm_energy(b, h, ch.bandwidth_hz, s.timing.slot_s, ch.noise_psd_w_hz) / 2;
    const double l = bits(rng);
    const double e1 = comp_energy_slot(l, s.devices.gamma_cloudlet, s.application.cycles_per_bit, s.timing.slot_s);
    const double e2 =
        comp_energy_slot(2 * l, s.devices.gamma_cloudlet, s.application.cycles_per_bit, s.timing.slot_s);
    cubic = cubic && rel_diff(e2, 8 * e1) <= 1e-12;
  }

  bool causal = true;
  for (int t = 1; t <= 10; ++t) {
    const Scenario st = reference_scenario(t);
    const auto r = evaluate(st, equal_allocation(st));
    for (double v : r.causality_residuals_uplink) causal = causal && v <= 0.0;
    for (double v : r.causality_residuals_downlink) causal = causal && v <= 0.0;
  }

  auto run = [] {
    Scenario b = reference_scenario(5.0);
    b.devices.cloudlet_budget_j = 88000.0;
    const Solution sol = optimize(b);
    std::ostringstream out;
    out << solution_to_json(sol).dump();
    write_slot_csv(out, slot_table(b, sol.allocation));
    return out.str();
  };
  const bool deterministic = run() == run();

  return {scaling && cubic && causal && deterministic,
          std::string("1/h scaling exact: ") + (scaling ? "yes" : "no") + ", cubic scaling: " +
              (cubic ? "yes" : "no") + ", equal split causal: " + (causal ? "yes" : "no") +
              ", identical reruns: " + (deterministic ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mobile execution energy", mobile_execution},
      {"closed-form uplink multiplier", inner_closed_form},
      {"oracle equivalence", oracle_equivalence},
      {"uplink follows distance", uplink_follows_distance},
      {"deadline sweep", deadline_sweep},
      {"hovering symmetry", hovering_symmetry},
      {"model identities", model_identities},
  };
  // Criterion numbers in order; the certificate runs last over every solve collected.
  const int numbers[] = {1, 2, 3, 5, 6, 7, 8};

  struct Line {
    int number;
    std::string name;
    Outcome outcome;
  };
  std::vector<Line> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    lines.push_back({numbers[i], criteria[i].first, o});
  }
  Outcome cert;
  try {
    cert = duality_certificate();
  } catch (const std::exception& e) {
    cert = {false, std::string("exception: ") + e.what()};
  }
  lines.push_back({4, "duality certificate", cert});
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.number < b.number; });

  bool all = true;
  for (const auto& l : lines) {
    all = all && l.outcome.pass;
    std::cout << (l.outcome.pass ? "PASS" : "FAIL") << ": criterion " << l.number << " (" << l.name
              << "): " << l.outcome.detail << '\n';
  }
  return all ? 0 : 1;
}
