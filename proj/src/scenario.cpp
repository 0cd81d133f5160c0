#include "uav_offload/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace uav_offload {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out += sep;
    out += items[i];
  }
  return out;
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
  auto it = parent.find(key);
  if (it == parent.end()) {
    throw ScenarioParseError("missing key '" + where + key + "'");
  }
  if (!it->is_object()) {
    throw ScenarioParseError("'" + where + key + "' must be an object");
  }
  return *it;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!names.contains(item.key())) {
      throw ScenarioParseError("unknown key '" + where + item.key() + "'");
    }
  }
}

double number_at(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioParseError("missing key '" + where + key + "'");
  if (!it->is_number()) throw ScenarioParseError("'" + where + key + "' must be a number");
  return it->get<double>();
}

Vec3 vec3_from(const json& value, const std::string& name) {
  if (!value.is_array() || value.size() != 3) {
    throw ScenarioParseError("'" + name + "' must be an array of 3 numbers");
  }
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!value[i].is_number()) {
      throw ScenarioParseError("'" + name + "' must be an array of 3 numbers");
    }
    v[i] = value[i].get<double>();
  }
  return v;
}

Vec3 vec3_at(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioParseError("missing key '" + where + key + "'");
  return vec3_from(*it, where + key);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double norm_squared(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

int Timing::frames() const {
  if (!(frame_s > 0.0) || !std::isfinite(deadline_s)) return 0;
  const double ratio = deadline_s / frame_s;
  if (!std::isfinite(ratio) || ratio > 1e9) return 0;
  return static_cast<int>(std::llround(ratio));
}

ScenarioValidationError::ScenarioValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid scenario: " + join(violations, "; ")),
      violations_(std::move(violations)) {}

double dbm_per_hz_to_w_per_hz(double dbm_hz) { return std::pow(10.0, dbm_hz / 10.0) * 1e-3; }

double ref_gain_from_snr_db(double snr_db, double noise_psd_w_hz, double bandwidth_hz) {
  return noise_psd_w_hz * bandwidth_hz * std::pow(10.0, snr_db / 10.0);
}

std::vector<Vec3> sample_positions(const Scenario& s) {
  const int n_frames = s.frames();
  std::vector<Vec3> out;
  if (n_frames <= 0) return out;
  out.reserve(static_cast<std::size_t>(n_frames));
  const Trajectory& tr = s.trajectory;
  for (int n = 1; n <= n_frames; ++n) {
    if (tr.kind == TrajectoryKind::kLinear) {
      const double t = static_cast<double>(n) * s.timing.frame_s;
      out.push_back({tr.start_m[0] + tr.velocity_mps[0] * t, tr.start_m[1] + tr.velocity_mps[1] * t,
                     tr.start_m[2] + tr.velocity_mps[2] * t});
    } else {
      if (static_cast<std::size_t>(n) > tr.waypoints_m.size()) break;
      out.push_back(tr.waypoints_m[static_cast<std::size_t>(n - 1)]);
    }
  }
  return out;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> v;
  const auto& app = s.application;
  if (!positive(app.input_bits)) v.emplace_back("application.input_bits must be > 0");
  if (!positive(app.cycles_per_bit)) v.emplace_back("application.cycles_per_bit must be > 0");
  if (!std::isfinite(app.output_ratio) || app.output_ratio < 0.0) {
    v.emplace_back("application.output_ratio must be >= 0");
  }

  const auto& ch = s.channel;
  if (!positive(ch.bandwidth_hz)) v.emplace_back("channel.bandwidth_hz must be > 0");
  if (!positive(ch.noise_psd_w_hz)) v.emplace_back("channel.noise_psd must be > 0");
  if (!positive(ch.ref_gain)) v.emplace_back("channel.ref_gain must be > 0");

  const auto& dev = s.devices;
  if (!positive(dev.gamma_mobile)) v.emplace_back("devices.gamma_mobile must be > 0");
  if (!positive(dev.gamma_cloudlet)) v.emplace_back("devices.gamma_cloudlet must be > 0");
  if (!positive(dev.cloudlet_budget_j)) v.emplace_back("devices.cloudlet_budget_j must be > 0");

  const auto& tm = s.timing;
  bool timing_ok = true;
  if (!positive(tm.slot_s)) {
    v.emplace_back("timing.slot_s must be > 0");
    timing_ok = false;
  }
  if (!positive(tm.frame_s)) {
    v.emplace_back("timing.frame_s must be > 0");
    timing_ok = false;
  }
  if (timing_ok && tm.slot_s >= tm.frame_s) {
    v.emplace_back("slot must be strictly shorter than frame");
  }
  if (!positive(tm.deadline_s)) {
    v.emplace_back("timing.deadline_s must be > 0");
    timing_ok = false;
  }
  if (timing_ok) {
    const double ratio = tm.deadline_s / tm.frame_s;
    const double nearest = std::round(ratio);
    if (!std::isfinite(ratio) || std::abs(ratio - nearest) > 1e-9 * std::max(1.0, ratio)) {
      v.emplace_back("timing.deadline_s must be an integer multiple of timing.frame_s");
      timing_ok = false;
    } else if (nearest < 3.0) {
      v.emplace_back("timing.deadline_s must span at least 3 frames");
      timing_ok = false;
    }
  }

  const auto& tr = s.trajectory;
  auto finite3 = [](const Vec3& p) {
    return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
  };
  if (tr.kind == TrajectoryKind::kLinear) {
    if (!finite3(tr.start_m)) v.emplace_back("trajectory.start_m must be finite");
    if (!finite3(tr.velocity_mps)) v.emplace_back("trajectory.velocity_mps must be finite");
  }
  if (timing_ok) {
    const int n_frames = tm.frames();
    if (tr.kind == TrajectoryKind::kWaypoints &&
        tr.waypoints_m.size() < static_cast<std::size_t>(n_frames)) {
      v.emplace_back("trajectory length: " + std::to_string(n_frames) + " waypoints required, got " +
                     std::to_string(tr.waypoints_m.size()));
    }
    const auto positions = sample_positions(s);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const Vec3& p = positions[i];
      if (!finite3(p)) {
        v.emplace_back("trajectory position at frame " + std::to_string(i + 1) + " is not finite");
      } else if (norm_squared(p) <= 0.0) {
        v.emplace_back("trajectory position at frame " + std::to_string(i + 1) +
                       " coincides with the mobile");
      }
    }
  }
  return v;
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ScenarioParseError("scenario document must be a JSON object");
  reject_unknown_keys(doc, {"application", "channel", "devices", "timing", "trajectory"}, "");

  Scenario s;

  const json& app = object_at(doc, "application", "");
  reject_unknown_keys(app, {"input_bits", "cycles_per_bit", "output_ratio"}, "application.");
  s.application.input_bits = number_at(app, "input_bits", "application.");
  s.application.cycles_per_bit = number_at(app, "cycles_per_bit", "application.");
  s.application.output_ratio = number_at(app, "output_ratio", "application.");

  const json& ch = object_at(doc, "channel", "");
  reject_unknown_keys(ch, {"bandwidth_hz", "noise_psd_dbm_hz", "ref_snr_db", "ref_gain"}, "channel.");
  s.channel.bandwidth_hz = number_at(ch, "bandwidth_hz", "channel.");
  s.channel.noise_psd_w_hz = dbm_per_hz_to_w_per_hz(number_at(ch, "noise_psd_dbm_hz", "channel."));
  const bool has_snr = ch.contains("ref_snr_db");
  const bool has_gain = ch.contains("ref_gain");
  if (has_snr == has_gain) {
    throw ScenarioParseError("channel needs exactly one of 'ref_snr_db' or 'ref_gain'");
  }
  if (has_snr) {
    s.channel.ref_gain = ref_gain_from_snr_db(number_at(ch, "ref_snr_db", "channel."),
                                              s.channel.noise_psd_w_hz, s.channel.bandwidth_hz);
  } else {
    s.channel.ref_gain = number_at(ch, "ref_gain", "channel.");
  }

  const json& dev = object_at(doc, "devices", "");
  reject_unknown_keys(dev, {"gamma_mobile", "gamma_cloudlet", "cloudlet_budget_j"}, "devices.");
  s.devices.gamma_mobile = number_at(dev, "gamma_mobile", "devices.");
  s.devices.gamma_cloudlet = number_at(dev, "gamma_cloudlet", "devices.");
  s.devices.cloudlet_budget_j = number_at(dev, "cloudlet_budget_j", "devices.");

  const json& tm = object_at(doc, "timing", "");
  reject_unknown_keys(tm, {"slot_s", "frame_s", "deadline_s"}, "timing.");
  s.timing.slot_s = number_at(tm, "slot_s", "timing.");
  s.timing.frame_s = number_at(tm, "frame_s", "timing.");
  s.timing.deadline_s = number_at(tm, "deadline_s", "timing.");

  const json& tr = object_at(doc, "trajectory", "");
  reject_unknown_keys(tr, {"kind", "start_m", "velocity_mps", "waypoints_m"}, "trajectory.");
  auto kind = tr.find("kind");
  if (kind == tr.end() || !kind->is_string()) {
    throw ScenarioParseError("'trajectory.kind' must be \"linear\" or \"waypoints\"");
  }
  const auto kind_name = kind->get<std::string>();
  if (kind_name == "linear") {
    if (tr.contains("waypoints_m")) {
      throw ScenarioParseError("'trajectory.waypoints_m' is not allowed for a linear trajectory");
    }
    s.trajectory.kind = TrajectoryKind::kLinear;
    s.trajectory.start_m = vec3_at(tr, "start_m", "trajectory.");
    s.trajectory.velocity_mps = vec3_at(tr, "velocity_mps", "trajectory.");
  } else if (kind_name == "waypoints") {
    if (tr.contains("start_m") || tr.contains("velocity_mps")) {
      throw ScenarioParseError("waypoint trajectories take only 'trajectory.waypoints_m'");
    }
    s.trajectory.kind = TrajectoryKind::kWaypoints;
    auto wp = tr.find("waypoints_m");
    if (wp == tr.end() || !wp->is_array()) {
      throw ScenarioParseError("'trajectory.waypoints_m' must be an array of positions");
    }
    for (std::size_t i = 0; i < wp->size(); ++i) {
      s.trajectory.waypoints_m.push_back(
          vec3_from((*wp)[i], "trajectory.waypoints_m[" + std::to_string(i) + "]"));
    }
  } else {
    throw ScenarioParseError("'trajectory.kind' must be \"linear\" or \"waypoints\"");
  }

  auto violations = validate(s);
  if (!violations.empty()) throw ScenarioValidationError(std::move(violations));
  s.timing.deadline_s = static_cast<double>(s.timing.frames()) * s.timing.frame_s;
  return s;
}

Scenario parse_scenario_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioParseError(std::string("malformed scenario document: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

nlohmann::json scenario_to_json(const Scenario& s) {
  json doc;
  doc["application"] = {{"input_bits", s.application.input_bits},
                        {"cycles_per_bit", s.application.cycles_per_bit},
                        {"output_ratio", s.application.output_ratio}};
  doc["channel"] = {{"bandwidth_hz", s.channel.bandwidth_hz},
                    {"noise_psd_dbm_hz", 10.0 * std::log10(s.channel.noise_psd_w_hz * 1e3)},
                    {"ref_gain", s.channel.ref_gain}};
  doc["devices"] = {{"gamma_mobile", s.devices.gamma_mobile},
                    {"gamma_cloudlet", s.devices.gamma_cloudlet},
                    {"cloudlet_budget_j", s.devices.cloudlet_budget_j}};
  doc["timing"] = {{"slot_s", s.timing.slot_s},
                   {"frame_s", s.timing.frame_s},
                   {"deadline_s", s.timing.deadline_s}};
  if (s.trajectory.kind == TrajectoryKind::kLinear) {
    doc["trajectory"] = {{"kind", "linear"},
                         {"start_m", s.trajectory.start_m},
                         {"velocity_mps", s.trajectory.velocity_mps}};
  } else {
    doc["trajectory"] = {{"kind", "waypoints"}, {"waypoints_m", s.trajectory.waypoints_m}};
  }
  return doc;
}

Scenario reference_scenario(double deadline_s) {
  Scenario s;
  s.application = {15e6, 1550.7, 0.9};
  s.channel.bandwidth_hz = 20e6;
  s.channel.noise_psd_w_hz = dbm_per_hz_to_w_per_hz(-174.0);
  s.channel.ref_gain = ref_gain_from_snr_db(20.0, s.channel.noise_psd_w_hz, s.channel.bandwidth_hz);
  s.devices = {1e-28, 1e-28, 1e5};
  s.timing = {2.5e-3, 0.1, deadline_s};
  s.trajectory.kind = TrajectoryKind::kLinear;
  s.trajectory.start_m = {5.0, 5.0, 5.0};
  s.trajectory.velocity_mps = {-3.0, -3.0, -3.0};
  auto violations = validate(s);
  if (!violations.empty()) throw ScenarioValidationError(std::move(violations));
  s.timing.deadline_s = static_cast<double>(s.timing.frames()) * s.timing.frame_s;
  return s;
}

}  // namespace uav_offload
