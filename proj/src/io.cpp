#include "uav_offload/io.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace uav_offload {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json series(const std::vector<double>& values, int first_index, const char* index_key) {
  json idx = json::array();
  json vals = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    idx.push_back(first_index + static_cast<int>(i));
    vals.push_back(number(values[i]));
  }
  return {{index_key, idx}, {"value", vals}};
}

json slots(const std::vector<double>& values, int offset) { return series(values, offset, "slot"); }
json prefixes(const std::vector<double>& values) { return series(values, 1, "prefix"); }

const char* const kHeader = "slot,distance_m,uplink_bits,compute_bits,downlink_bits,mobile_j,cloudlet_j";

}  // namespace

json report_to_json(const EnergyReport& r) {
  json j;
  j["mobile_uplink_j"] = slots(r.mobile_uplink_j, BitAllocation::kUplinkSlotOffset);
  j["mobile_uplink_total_j"] = number(r.mobile_uplink_total_j);
  j["cloudlet_compute_j"] = slots(r.cloudlet_compute_j, BitAllocation::kComputeSlotOffset);
  j["cloudlet_compute_total_j"] = number(r.cloudlet_compute_total_j);
  j["cloudlet_downlink_j"] = slots(r.cloudlet_downlink_j, BitAllocation::kDownlinkSlotOffset);
  j["cloudlet_downlink_total_j"] = number(r.cloudlet_downlink_total_j);
  j["cloudlet_total_j"] = number(r.cloudlet_total_j);
  j["budget_residual_j"] = number(r.budget_residual_j);
  j["causality_residuals_uplink"] = prefixes(r.causality_residuals_uplink);
  j["causality_residuals_downlink"] = prefixes(r.causality_residuals_downlink);
  j["totals_residuals"] = {number(r.totals_residuals[0]), number(r.totals_residuals[1]),
                           number(r.totals_residuals[2])};
  j["cpu_freqs_hz"] = slots(r.cpu_freqs_hz, BitAllocation::kComputeSlotOffset);
  j["overflow"] = r.overflow;
  return j;
}

json solution_to_json(const Solution& sol) {
  json j;
  j["status"] = std::string(to_string(sol.status));
  j["iterations"] = sol.iterations;
  j["primal_value_j"] = number(sol.primal_value_j);
  j["dual_value_j"] = number(sol.dual_value_j);
  j["gap_j"] = number(sol.gap_j);
  j["gap_rel"] = number(sol.gap_rel);
  j["allocation"] = {{"uplink_bits", slots(sol.allocation.uplink, BitAllocation::kUplinkSlotOffset)},
                     {"compute_bits", slots(sol.allocation.compute, BitAllocation::kComputeSlotOffset)},
                     {"downlink_bits", slots(sol.allocation.downlink, BitAllocation::kDownlinkSlotOffset)}};
  j["dual"] = {{"mu", number(sol.dual.mu)},
               {"a", prefixes(sol.dual.a)},
               {"b", prefixes(sol.dual.b)},
               {"alpha", prefixes(sol.dual.alpha())},
               {"beta", prefixes(sol.dual.beta())}};
  j["inner"] = {{"lambda", number(sol.inner.lambda)}, {"nu", number(sol.inner.nu)}, {"eta", number(sol.inner.eta)}};
  j["kkt"] = {{"uplink_stationarity", number(sol.kkt.uplink_stationarity)},
              {"compute_stationarity", number(sol.kkt.compute_stationarity)},
              {"downlink_stationarity", number(sol.kkt.downlink_stationarity)},
              {"budget_slackness_j", number(sol.kkt.budget_slackness_j)},
              {"uplink_causality_slackness", number(sol.kkt.uplink_causality_slackness)},
              {"downlink_causality_slackness", number(sol.kkt.downlink_causality_slackness)}};
  j["report"] = report_to_json(sol.report);
  return j;
}

std::vector<SlotRow> slot_table(const Scenario& s, const BitAllocation& a) {
  const auto report = evaluate(s, a);
  const auto positions = sample_positions(s);
  const int n_frames = s.frames();
  std::vector<SlotRow> rows(static_cast<std::size_t>(n_frames));
  for (int n = 1; n <= n_frames; ++n) {
    auto& row = rows[static_cast<std::size_t>(n - 1)];
    row.slot = n;
    row.distance_m = std::sqrt(norm_squared(positions[static_cast<std::size_t>(n - 1)]));
  }
  auto place = [&](const std::vector<double>& values, int offset, double SlotRow::*field) {
    for (std::size_t i = 0; i < values.size(); ++i) rows[i + static_cast<std::size_t>(offset) - 1].*field = values[i];
  };
  auto accumulate = [&](const std::vector<double>& values, int offset, double SlotRow::*field) {
    for (std::size_t i = 0; i < values.size(); ++i) rows[i + static_cast<std::size_t>(offset) - 1].*field += values[i];
  };
  place(a.uplink, BitAllocation::kUplinkSlotOffset, &SlotRow::uplink_bits);
  place(a.compute, BitAllocation::kComputeSlotOffset, &SlotRow::compute_bits);
  place(a.downlink, BitAllocation::kDownlinkSlotOffset, &SlotRow::downlink_bits);
  place(report.mobile_uplink_j, BitAllocation::kUplinkSlotOffset, &SlotRow::mobile_j);
  accumulate(report.cloudlet_compute_j, BitAllocation::kComputeSlotOffset, &SlotRow::cloudlet_j);
  accumulate(report.cloudlet_downlink_j, BitAllocation::kDownlinkSlotOffset, &SlotRow::cloudlet_j);
  return rows;
}

void write_slot_csv(std::ostream& out, const std::vector<SlotRow>& rows) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(17);
  buf << kHeader << '\n';
  for (const auto& r : rows) {
    buf << r.slot << ',' << r.distance_m << ',' << r.uplink_bits << ',' << r.compute_bits << ','
        << r.downlink_bits << ',' << r.mobile_j << ',' << r.cloudlet_j << '\n';
  }
  out << buf.str();
}

std::vector<SlotRow> read_slot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw CsvFormatError("unexpected CSV header");
  std::vector<SlotRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    fields.imbue(std::locale::classic());
    SlotRow r;
    char sep = 0;
    fields >> r.slot >> sep >> r.distance_m >> sep >> r.uplink_bits >> sep >> r.compute_bits >> sep >>
        r.downlink_bits >> sep >> r.mobile_j >> sep >> r.cloudlet_j;
    if (fields.fail()) throw CsvFormatError("malformed CSV row at line " + std::to_string(line_no));
    rows.push_back(r);
  }
  return rows;
}

BitAllocation allocation_from_rows(const std::vector<SlotRow>& rows) {
  if (rows.size() < 3) throw CsvFormatError("at least three slots required");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].slot != static_cast<int>(i) + 1) throw CsvFormatError("slots must run 1..N in order");
  }
  const std::size_t m = rows.size() - 2;
  BitAllocation a;
  a.uplink.resize(m);
  a.compute.resize(m);
  a.downlink.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    a.uplink[i] = rows[i + BitAllocation::kUplinkSlotOffset - 1].uplink_bits;
    a.compute[i] = rows[i + BitAllocation::kComputeSlotOffset - 1].compute_bits;
    a.downlink[i] = rows[i + BitAllocation::kDownlinkSlotOffset - 1].downlink_bits;
  }
  return a;
}

}  // namespace uav_offload
