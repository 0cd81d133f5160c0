#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "uav_offload/scenario.hpp"

namespace uav_offload {

/// Bit schedule for one offloading run. Each sequence has N - 2 entries:
///   uplink[i]   is sent mobile -> UAV in slot i + 1,
///   compute[i]  is processed at the cloudlet in slot i + 2,
///   downlink[i] is returned UAV -> mobile in slot i + 3,
/// with i zero-based and slots one-based.
struct BitAllocation {
  static constexpr int kUplinkSlotOffset = 1;
  static constexpr int kComputeSlotOffset = 2;
  static constexpr int kDownlinkSlotOffset = 3;

  std::vector<double> uplink;
  std::vector<double> compute;
  std::vector<double> downlink;

  std::size_t size() const { return uplink.size(); }
  bool operator==(const BitAllocation&) const = default;
};

class DegeneratePositionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class AllocationShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exponents bits / (B delta) above this are treated as unreachable rates.
inline constexpr double kDefaultExponentCap = 1024.0;

/// Inverse-square line-of-sight gain h0 / |p|^2. Throws at the origin.
double path_loss(const Vec3& position, double ref_gain);

/// Energy to push `bits` through a slot of `slot_s` seconds at gain `gain`,
/// from inverting the Shannon rate: (2^(bits/(B delta)) - 1) N0 B delta / h.
/// Returns +infinity when bits/(B delta) exceeds `exponent_cap`.
double comm_energy(double bits, double gain, double bandwidth_hz, double slot_s,
                   double noise_psd_w_hz, double exponent_cap = kDefaultExponentCap);

/// Cloudlet energy for processing `bits` within one slot: gamma C^3 l^3 / delta^2.
double comp_energy_slot(double bits, double gamma, double cycles_per_bit, double slot_s);

double cpu_frequency(double bits, double cycles_per_bit, double window_s);

/// Energy for running the whole application locally within the deadline.
double mobile_execution_energy(const Scenario& s);

BitAllocation equal_allocation(const Scenario& s);

/// Channel gains aligned with the allocation arrays.
struct SlotGains {
  std::vector<double> uplink;    // gain in slot i + 1
  std::vector<double> downlink;  // gain in slot i + 3
};
SlotGains slot_gains(const Scenario& s);

struct EnergyReport {
  std::vector<double> mobile_uplink_j;
  double mobile_uplink_total_j = 0.0;
  std::vector<double> cloudlet_compute_j;
  double cloudlet_compute_total_j = 0.0;
  std::vector<double> cloudlet_downlink_j;
  double cloudlet_downlink_total_j = 0.0;
  double cloudlet_total_j = 0.0;
  /// cloudlet_total_j - budget; positive means over budget.
  double budget_residual_j = 0.0;
  /// Prefix n: sum(compute) - sum(uplink). Positive means violated.
  std::vector<double> causality_residuals_uplink;
  /// Prefix n: sum(downlink) - kappa * sum(compute). Positive means violated.
  std::vector<double> causality_residuals_downlink;
  /// {sum(uplink) - L, sum(compute) - L, sum(downlink) - kappa L}.
  std::array<double, 3> totals_residuals{};
  /// Cloudlet CPU frequency for each compute entry.
  std::vector<double> cpu_freqs_hz;
  /// Set when some transmission exceeded the exponent cap.
  bool overflow = false;

  double max_causality_residual() const;
  double max_abs_totals_residual() const;
};

/// Scores an allocation against every constraint. Throws AllocationShapeError
/// when the arrays are not all N - 2 long.
EnergyReport evaluate(const Scenario& s, const BitAllocation& a,
                      double exponent_cap = kDefaultExponentCap);

}  // namespace uav_offload
