#include "uav_offload/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "uav_offload/summation.hpp"

namespace uav_offload {

double path_loss(const Vec3& position, double ref_gain) {
  const double d2 = norm_squared(position);
  if (!(d2 > 0.0)) {
    throw DegeneratePositionError("path loss is unbounded at the mobile's position");
  }
  return ref_gain / d2;
}

double comm_energy(double bits, double gain, double bandwidth_hz, double slot_s,
                   double noise_psd_w_hz, double exponent_cap) {
  if (bits <= 0.0) return 0.0;
  const double exponent = bits / (bandwidth_hz * slot_s);
  if (exponent > exponent_cap) return std::numeric_limits<double>::infinity();
  const double growth =
      exponent < 1.0 ? std::expm1(exponent * std::numbers::ln2) : std::exp2(exponent) - 1.0;
  return growth * noise_psd_w_hz * bandwidth_hz * slot_s / gain;
}

double comp_energy_slot(double bits, double gamma, double cycles_per_bit, double slot_s) {
  const double c3 = cycles_per_bit * cycles_per_bit * cycles_per_bit;
  return gamma * c3 * (bits * bits * bits) / (slot_s * slot_s);
}

double cpu_frequency(double bits, double cycles_per_bit, double window_s) {
  return cycles_per_bit * bits / window_s;
}

double mobile_execution_energy(const Scenario& s) {
  const double c = s.application.cycles_per_bit;
  const double l = s.application.input_bits;
  const double t = s.timing.deadline_s;
  return s.devices.gamma_mobile * (c * c * c) * (l * l * l) / (t * t);
}

BitAllocation equal_allocation(const Scenario& s) {
  const int m = s.usable_slots();
  const auto count = static_cast<std::size_t>(std::max(m, 0));
  BitAllocation a;
  if (count == 0) return a;
  const double share = s.application.input_bits / static_cast<double>(m);
  a.uplink.assign(count, share);
  a.compute.assign(count, share);
  a.downlink.assign(count, s.application.output_ratio * share);
  return a;
}

SlotGains slot_gains(const Scenario& s) {
  const auto positions = sample_positions(s);
  const int m = s.usable_slots();
  SlotGains g;
  if (m <= 0 || positions.size() < static_cast<std::size_t>(m + 2)) return g;
  g.uplink.reserve(static_cast<std::size_t>(m));
  g.downlink.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    // positions[k] is frame k + 1
    g.uplink.push_back(path_loss(positions[static_cast<std::size_t>(i)], s.channel.ref_gain));
    g.downlink.push_back(path_loss(positions[static_cast<std::size_t>(i + 2)], s.channel.ref_gain));
  }
  return g;
}

double EnergyReport::max_causality_residual() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (double r : causality_residuals_uplink) worst = std::max(worst, r);
  for (double r : causality_residuals_downlink) worst = std::max(worst, r);
  return worst;
}

double EnergyReport::max_abs_totals_residual() const {
  double worst = 0.0;
  for (double r : totals_residuals) worst = std::max(worst, std::abs(r));
  return worst;
}

EnergyReport evaluate(const Scenario& s, const BitAllocation& a, double exponent_cap) {
  const int m = s.usable_slots();
  if (m < 1 || a.uplink.size() != static_cast<std::size_t>(m) ||
      a.compute.size() != static_cast<std::size_t>(m) ||
      a.downlink.size() != static_cast<std::size_t>(m)) {
    throw AllocationShapeError("allocation arrays must each have N - 2 = " + std::to_string(m) +
                               " entries");
  }
  const auto gains = slot_gains(s);
  const auto& ch = s.channel;
  const double delta = s.timing.slot_s;
  const double kappa = s.application.output_ratio;
  const double l_total = s.application.input_bits;

  EnergyReport r;
  const auto n = static_cast<std::size_t>(m);
  r.mobile_uplink_j.resize(n);
  r.cloudlet_compute_j.resize(n);
  r.cloudlet_downlink_j.resize(n);
  r.causality_residuals_uplink.resize(n);
  r.causality_residuals_downlink.resize(n);
  r.cpu_freqs_hz.resize(n);

  CompensatedSum up_total, comp_total, down_total, cloud_total;
  CompensatedSum up_bits, comp_bits, down_bits;
  CompensatedSum causal_up, causal_down;
  for (std::size_t i = 0; i < n; ++i) {
    const double eu = comm_energy(a.uplink[i], gains.uplink[i], ch.bandwidth_hz, delta,
                                  ch.noise_psd_w_hz, exponent_cap);
    const double ec =
        comp_energy_slot(a.compute[i], s.devices.gamma_cloudlet, s.application.cycles_per_bit, delta);
    const double ed = comm_energy(a.downlink[i], gains.downlink[i], ch.bandwidth_hz, delta,
                                  ch.noise_psd_w_hz, exponent_cap);
    if (std::isinf(eu) || std::isinf(ed)) r.overflow = true;
    r.mobile_uplink_j[i] = eu;
    r.cloudlet_compute_j[i] = ec;
    r.cloudlet_downlink_j[i] = ed;
    r.cpu_freqs_hz[i] = cpu_frequency(a.compute[i], s.application.cycles_per_bit, delta);
    up_total.add(eu);
    comp_total.add(ec);
    down_total.add(ed);
    cloud_total.add(ec);
    cloud_total.add(ed);
    up_bits.add(a.uplink[i]);
    comp_bits.add(a.compute[i]);
    down_bits.add(a.downlink[i]);
    // Termwise differences keep exactly-balanced schedules at exactly zero.
    causal_up.add(a.compute[i] - a.uplink[i]);
    causal_down.add(a.downlink[i] - kappa * a.compute[i]);
    r.causality_residuals_uplink[i] = causal_up.value();
    r.causality_residuals_downlink[i] = causal_down.value();
  }
  r.mobile_uplink_total_j = up_total.value();
  r.cloudlet_compute_total_j = comp_total.value();
  r.cloudlet_downlink_total_j = down_total.value();
  r.cloudlet_total_j = cloud_total.value();
  r.budget_residual_j = r.cloudlet_total_j - s.devices.cloudlet_budget_j;
  r.totals_residuals = {up_bits.value() - l_total, comp_bits.value() - l_total,
                        down_bits.value() - kappa * l_total};
  return r;
}

}  // namespace uav_offload
