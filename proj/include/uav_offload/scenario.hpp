#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uav_offload {

/// Cartesian position or velocity, meters (or m/s). The mobile sits at the origin.
using Vec3 = std::array<double, 3>;

double norm_squared(const Vec3& v);

struct Application {
  double input_bits = 0.0;      // L
  double cycles_per_bit = 0.0;  // C
  double output_ratio = 0.0;    // kappa, output bits per input bit
};

struct Channel {
  double bandwidth_hz = 0.0;
  double noise_psd_w_hz = 0.0;
  /// Received power at 1 m for 1 W transmit power.
  double ref_gain = 0.0;
};

struct Devices {
  double gamma_mobile = 0.0;
  double gamma_cloudlet = 0.0;
  double cloudlet_budget_j = 0.0;
};

/// Slotted time grid. The mobile owns one slot of `slot_s` in every frame of
/// `frame_s`; the deadline spans an integer number of frames.
struct Timing {
  double slot_s = 0.0;
  double frame_s = 0.0;
  double deadline_s = 0.0;

  /// Nearest integer to deadline/frame. Only meaningful once validated.
  int frames() const;
};

enum class TrajectoryKind { kLinear, kWaypoints };

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::kLinear;
  Vec3 start_m{};
  Vec3 velocity_mps{};
  /// Position at frame n is waypoints_m[n - 1]; only used for kWaypoints.
  std::vector<Vec3> waypoints_m;
};

struct Scenario {
  Application application;
  Channel channel;
  Devices devices;
  Timing timing;
  Trajectory trajectory;

  int frames() const { return timing.frames(); }
  /// Number of entries in each bit sequence (N - 2).
  int usable_slots() const { return timing.frames() - 2; }
};

class ScenarioParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a document parses but describes an invalid instance. Carries
/// every violated invariant, not just the first.
class ScenarioValidationError : public std::runtime_error {
 public:
  explicit ScenarioValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Unit conversions used by the document format.
double dbm_per_hz_to_w_per_hz(double dbm_hz);
/// h0 from the reference SNR h0 / (N0 B) expressed in dB.
double ref_gain_from_snr_db(double snr_db, double noise_psd_w_hz, double bandwidth_hz);

/// UAV position at frames 1..N (entry n-1 is frame n).
std::vector<Vec3> sample_positions(const Scenario& s);

/// Every violated invariant, in a fixed order. Empty when the scenario is valid.
std::vector<std::string> validate(const Scenario& s);

/// Builds a validated scenario from a document; snaps the deadline to N * frame.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const Scenario& s);

/// The reference instance: 20 MHz, -174 dBm/Hz, 20 dB reference SNR,
/// C = 1550.7, gamma = 1e-28, L = 15 Mbit, kappa = 0.9, 100 kJ budget,
/// 2.5 ms slots in 100 ms frames, start (5,5,5) m flying at (-3,-3,-3) m/s.
Scenario reference_scenario(double deadline_s = 5.0);

}  // namespace uav_offload
