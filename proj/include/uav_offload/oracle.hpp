#pragma once

#include <cstdint>
#include <stdexcept>

#include "uav_offload/models.hpp"
#include "uav_offload/scenario.hpp"

// Reference solvers for cross-checking the dual method on small instances.
// Neither shares any optimization code with the dual solver; both score
// allocations through the models module only.

namespace uav_offload::oracle {

struct OracleResult {
  BitAllocation allocation;
  double objective_j = 0.0;  // mobile uplink energy
};

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No feasible point exists on the grid, or the barrier method has no
/// strictly feasible start.
class InfeasibleInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;

/// Number of partial schedules grid_search would visit.
std::uint64_t grid_search_nodes(const Scenario& s, double grid_bits);

/// Exhaustive search over allocations whose entries are multiples of
/// `grid_bits`. Requires N - 2 <= 3 and grid_bits dividing both L and kappa L.
/// Ties go to the lexicographically smallest (uplink, compute, downlink).
OracleResult grid_search(const Scenario& s, double grid_bits,
                         std::uint64_t node_budget = kDefaultNodeBudget);

/// Largest mobile energy change from moving one grid step of uplink bits
/// into or out of any slot of `a`.
double grid_step_energy(const Scenario& s, const BitAllocation& a, double grid_bits);

struct BarrierConfig {
  /// Relative suboptimality bound at exit.
  double rel_tol = 1e-4;
  /// Barrier weight growth per outer step.
  double growth = 20.0;
  int max_newton_per_center = 200;
  /// Fraction of the even split used to tilt the start off the causality boundary.
  double start_tilt = 0.2;
};

/// Interior-point solve of the primal problem: Newton steps on a logarithmic
/// barrier for the budget, causality and nonnegativity constraints, with the
/// three totals as linear equalities. Throws InfeasibleInstance when no
/// strictly feasible start exists.
OracleResult primal_descent(const Scenario& s, const BarrierConfig& cfg = BarrierConfig{});

}  // namespace uav_offload::oracle
