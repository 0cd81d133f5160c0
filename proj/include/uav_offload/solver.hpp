#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uav_offload/models.hpp"
#include "uav_offload/scenario.hpp"

namespace uav_offload {

/// Multipliers of the budget constraint (mu) and of the two prefix causality
/// constraints (a, b). The subproblems only see the suffix sums
/// alpha_n = a_n + ... + a_{N-2} and beta_n = b_n + ... + b_{N-2}.
struct DualState {
  double mu = 0.0;
  std::vector<double> a;
  std::vector<double> b;

  std::vector<double> alpha() const;
  std::vector<double> beta() const;
  /// Checks that alpha/beta match the suffix sums of a/b to a relative tolerance.
  bool suffix_consistent(std::span<const double> alpha, std::span<const double> beta,
                         double rel_tol = 1e-12) const;
};

/// How the outer loop moves the multipliers.
enum class StepRule {
  /// Projected ascent along the subgradient with step c / sqrt(k); each block
  /// (mu, a, b) normalized by its running max magnitude. Primal recovered by
  /// averaging iterates.
  kDiminishing,
  /// Projected Newton ascent on the dual with the analytic Hessian of the
  /// three closed-form subproblem solutions and an Armijo line search.
  kProjectedNewton,
};

struct SolverConfig {
  int max_iters = 20000;
  /// Relative duality gap required for convergence.
  double dual_tol = 1e-5;
  /// Causality tolerance as a fraction of L.
  double feas_tol_rel = 1e-6;
  StepRule step_rule = StepRule::kProjectedNewton;
  /// c in c / sqrt(k) for the diminishing rule.
  double step_scale = 1.0;
  double mu_min = 1e-12;
  /// mu above this with the budget still violated means no feasible schedule.
  double mu_cap = 1e12;
  /// Bisection totals tolerance as a fraction of the target total.
  double bisection_tol_rel = 1e-9;
  int bisection_max_expand = 200;
  double exponent_cap = kDefaultExponentCap;
};

enum class SolveStatus { kConverged, kIterLimit, kInfeasible };

std::string_view to_string(SolveStatus status);

/// Scalars enforcing the three equality totals inside the subproblems.
struct InnerMultipliers {
  double lambda = 0.0;  // uplink total
  double nu = 0.0;      // compute total
  double eta = 0.0;     // downlink total
};

/// Largest stationarity residuals of the subproblem KKT systems (each
/// normalized by its largest term) and complementary slackness products.
struct KktSummary {
  double uplink_stationarity = 0.0;
  double compute_stationarity = 0.0;
  double downlink_stationarity = 0.0;
  double budget_slackness_j = 0.0;         // |mu * s_mu|
  double uplink_causality_slackness = 0.0;    // max |a_n * s_a[n]|
  double downlink_causality_slackness = 0.0;  // max |b_n * s_b[n]|

  double max_stationarity() const;
};

struct Solution {
  BitAllocation allocation;
  DualState dual;
  InnerMultipliers inner;
  double dual_value_j = 0.0;
  double primal_value_j = 0.0;
  double gap_j = 0.0;
  double gap_rel = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kIterLimit;
  EnergyReport report;
  KktSummary kkt;
};

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finds x >= lo with total(x) == target, for a nondecreasing continuous
/// `total`. The upper end is found by doubling `initial_step` up to
/// cfg.bisection_max_expand times; the bracket is then halved down to
/// floating-point resolution. Returns lo when target <= total(lo).
double bisect(double target, const std::function<double(double)>& total, double lo,
              double initial_step, const SolverConfig& cfg);

/// Allocation returned by one subproblem and its bisected multiplier.
struct InnerSolution {
  std::vector<double> bits;
  double multiplier = 0.0;
};

/// Water-filling over the uplink slots:
/// L_n = [B delta log2(h_n (lambda + alpha_n) / (N0 ln 2))]^+, sum L_n = total.
InnerSolution solve_uplink(std::span<const double> alpha, std::span<const double> gains,
                           const Channel& channel, double slot_s, double total_bits,
                           const SolverConfig& cfg);

/// l_n = sqrt(delta^2 / (3 mu gamma C^3) [nu - alpha_n + kappa beta_n]^+), sum l_n = total.
InnerSolution solve_compute(double mu, std::span<const double> alpha, std::span<const double> beta,
                            double kappa, double gamma_cloudlet, double cycles_per_bit,
                            double slot_s, double total_bits, const SolverConfig& cfg);

/// L_n = [B delta log2(h_n (eta - beta_n) / (mu N0 ln 2))]^+, sum L_n = total.
InnerSolution solve_downlink(double mu, std::span<const double> beta, std::span<const double> gains,
                             const Channel& channel, double slot_s, double total_bits,
                             const SolverConfig& cfg);

struct Subgradients {
  double mu = 0.0;         // cloudlet energy - budget
  std::vector<double> a;   // prefix sums of compute - uplink
  std::vector<double> b;   // prefix sums of downlink - kappa * compute
};

Subgradients subgradients(const Scenario& s, const BitAllocation& a,
                          double exponent_cap = kDefaultExponentCap);

/// Lagrangian at (d, a); equals the dual function when `a` minimizes it.
double dual_value(const Scenario& s, const DualState& d, const BitAllocation& a,
                  double exponent_cap = kDefaultExponentCap);

/// Clips compute to the bits received so far and downlink to kappa times the
/// bits computed so far, carrying the excess into later slots. Uplink is
/// untouched, so the mobile energy does not change.
BitAllocation repair_causality(const BitAllocation& a, double kappa);

KktSummary kkt_residuals(const Scenario& s, const Solution& sol,
                         const SolverConfig& cfg = SolverConfig{});

/// Minimum mobile energy schedule by dual decomposition.
Solution optimize(const Scenario& s, const SolverConfig& cfg = SolverConfig{});

}  // namespace uav_offload
