#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "uav_offload/models.hpp"
#include "uav_offload/oracle.hpp"
#include "uav_offload/scenario.hpp"

namespace testing {

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Reference instance with a different number of frames and otherwise equal parameters.
inline uav_offload::Scenario reference_with_frames(int frames) {
  auto s = uav_offload::reference_scenario(5.0);
  s.timing.deadline_s = frames * s.timing.frame_s;
  return s;
}

inline uav_offload::Scenario hovering(double deadline_s = 5.0) {
  auto s = uav_offload::reference_scenario(deadline_s);
  s.trajectory.velocity_mps = {0.0, 0.0, 0.0};
  return s;
}

/// Reference document text for the loader tests.
inline std::string reference_document() {
  return R"({
    "application": {"input_bits": 15e6, "cycles_per_bit": 1550.7, "output_ratio": 0.9},
    "channel": {"bandwidth_hz": 20e6, "noise_psd_dbm_hz": -174, "ref_snr_db": 20},
    "devices": {"gamma_mobile": 1e-28, "gamma_cloudlet": 1e-28, "cloudlet_budget_j": 1e5},
    "timing": {"slot_s": 2.5e-3, "frame_s": 0.1, "deadline_s": 5},
    "trajectory": {"kind": "linear", "start_m": [5, 5, 5], "velocity_mps": [-3, -3, -3]}
  })";
}

/// Grid used with toy_scenario; divides L, kappa L and their equal splits.
inline constexpr double kToyGrid = 2500.0;

/// Deterministic small instance for oracle comparisons: N = 4 for even
/// `index`, N = 5 for odd, random straight flight. Three out of four
/// instances get a budget between the equal-split cloudlet energy and the
/// cloudlet energy of the unconstrained optimum, so the budget binds.
inline uav_offload::Scenario toy_scenario(std::uint64_t index) {
  std::mt19937_64 rng(0x5eed0000ULL + index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto s = uav_offload::reference_scenario(5.0);
  const int frames = index % 2 == 0 ? 4 : 5;
  s.timing.deadline_s = frames * s.timing.frame_s;
  const double kappas[] = {0.5, 0.9, 1.0};
  s.application.output_ratio = kappas[index % 3];
  s.application.input_bits = frames == 5 ? 150000.0 : (index % 3 == 0 ? 200000.0 : 100000.0);
  for (int j = 0; j < 3; ++j) {
    s.trajectory.start_m[j] = -20.0 + 40.0 * unit(rng);
    s.trajectory.velocity_mps[j] = -40.0 + 80.0 * unit(rng);
  }
  const double equal_cloud = uav_offload::evaluate(s, uav_offload::equal_allocation(s)).cloudlet_total_j;
  s.devices.cloudlet_budget_j = 1e3 * equal_cloud;
  const auto free = uav_offload::oracle::primal_descent(s);
  const double free_cloud = uav_offload::evaluate(s, free.allocation).cloudlet_total_j;
  const double f = 0.2 + 0.6 * unit(rng);
  s.devices.cloudlet_budget_j = (index % 4 < 3 && free_cloud > equal_cloud)
                                    ? equal_cloud + f * (free_cloud - equal_cloud)
                                    : 3.0 * equal_cloud;
  return s;
}

}  // namespace testing
