#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "uav_offload/models.hpp"
#include "uav_offload/scenario.hpp"
#include "uav_offload/solver.hpp"

namespace uav_offload {

/// Per-slot arrays become {"slot": [...], "value": [...]} with one-based slot
/// numbers; prefix residual arrays use "prefix" instead of "slot".
/// Non-finite numbers are written as null.
nlohmann::json report_to_json(const EnergyReport& r);
nlohmann::json solution_to_json(const Solution& sol);

/// One line of the per-slot table, covering slots 1..N.
struct SlotRow {
  int slot = 0;
  double distance_m = 0.0;
  double uplink_bits = 0.0;
  double compute_bits = 0.0;
  double downlink_bits = 0.0;
  double mobile_j = 0.0;    // uplink energy spent in this slot
  double cloudlet_j = 0.0;  // compute plus downlink energy spent in this slot
};

std::vector<SlotRow> slot_table(const Scenario& s, const BitAllocation& a);

/// Header plus one row per slot, 17 significant digits.
void write_slot_csv(std::ostream& out, const std::vector<SlotRow>& rows);

class CsvFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<SlotRow> read_slot_csv(std::istream& in);

/// Inverse of slot_table for the bit columns. Throws CsvFormatError when the
/// rows do not cover slots 1..N in order.
BitAllocation allocation_from_rows(const std::vector<SlotRow>& rows);

}  // namespace uav_offload
