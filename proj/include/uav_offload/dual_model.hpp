#pragma once

#include <Eigen/Dense>

#include "uav_offload/models.hpp"
#include "uav_offload/scenario.hpp"
#include "uav_offload/solver.hpp"

namespace uav_offload {

/// Dual function of the offloading problem over the flat multiplier vector
/// x = (mu, a_1..a_M, b_1..b_M), M = N - 2, for the outer ascent loops.
class DualModel {
 public:
  struct Evaluation {
    Eigen::VectorXd x;
    DualState dual;
    BitAllocation allocation;  // the three subproblem minimizers
    InnerMultipliers inner;
    double value = 0.0;
    Eigen::VectorXd gradient;  // (s_mu, s_a, s_b)
    bool finite = true;
  };

  DualModel(const Scenario& s, const SolverConfig& cfg);

  int slots() const { return slots_; }
  int dimension() const { return 1 + 2 * slots_; }
  Eigen::Index mu_index() const { return 0; }
  Eigen::Index a_index(int n) const { return 1 + n; }
  Eigen::Index b_index(int n) const { return 1 + slots_ + n; }

  /// Lower bounds of the multipliers (mu_min for mu, zero otherwise).
  Eigen::VectorXd lower_bounds() const;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  DualState unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(const DualState& d) const;

  Evaluation evaluate(const Eigen::VectorXd& x) const;

  /// Hessian of the dual function at a point where the subproblem active
  /// sets do not change locally. Negative semidefinite.
  Eigen::MatrixXd hessian(const Evaluation& e) const;

  /// Initial budget multiplier: ratio of typical marginal uplink energy to
  /// marginal compute energy at the equal split.
  double initial_mu() const;

  const SlotGains& gains() const { return gains_; }

 private:
  Scenario scenario_;
  SolverConfig cfg_;
  SlotGains gains_;
  int slots_ = 0;
};

}  // namespace uav_offload
