// Copyright 2026 The fmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fmsim/errors.hpp"
#include "fmsim/params.hpp"

namespace fmsim {

/// Straight, one-way road. Lateral coordinate d is measured leftwards from the
/// right road edge; lane 0 is the right lane.
struct RoadModel {
  double length_m = 3000.0;
  double lane_width_m = 3.5;
  int num_lanes = 2;
  double shoulder_width_m = 2.5;

  double lane_center(int lane) const { return (lane + 0.5) * lane_width_m; }
  double width() const { return num_lanes * lane_width_m; }

  /// Lane index containing lateral position d, clamped to the carriageway.
  int lane_at(double d) const {
    const int lane = static_cast<int>(std::floor(d / lane_width_m));
    return lane < 0 ? 0 : (lane >= num_lanes ? num_lanes - 1 : lane);
  }

  bool operator==(const RoadModel&) const = default;
};

enum class MarkingQuality { Present, Missing };

inline std::string_view to_string(MarkingQuality q) {
  return q == MarkingQuality::Present ? "present" : "missing";
}

/// Half-open interval [start_s, end_s) of uniform marking quality.
struct MarkingSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  MarkingQuality quality = MarkingQuality::Missing;

  bool operator==(const MarkingSegment&) const = default;
};

struct EgoInit {
  double s = 0.0;
  int lane = 0;
  double speed = 33.3;

  bool operator==(const EgoInit&) const = default;
};

struct LeadInit {
  double s = 150.0;
  int lane = 0;
  double speed = 25.0;
  std::string behavior = "constant_speed";

  bool operator==(const LeadInit&) const = default;
};

struct ScenarioConfig {
  RoadModel road;
  std::vector<MarkingSegment> markings;
  EgoInit ego;
  LeadInit lead;
  DynamicsParams vehicle;
  PerceptionParams perception;
  TgasParams tgas;
  AutomationParams tor;
  DriverParams driver;
  SimParams sim;
  std::map<std::string, std::string> metadata;

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline void require(bool ok, const std::string& field, const char* reason) {
  if (!ok) throw ValidationError(field, reason);
}

inline bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace detail

/// Throws ValidationError naming the first field that violates an invariant.
inline void validate(const ScenarioConfig& c) {
  using detail::require;
  const auto& r = c.road;
  require(std::isfinite(r.length_m) && r.length_m > 0, "road.length_m", "must be > 0");
  require(std::isfinite(r.lane_width_m) && r.lane_width_m > 0, "road.lane_width_m", "must be > 0");
  require(r.num_lanes >= 2, "road.num_lanes", "must be >= 2");
  require(std::isfinite(r.shoulder_width_m) && r.shoulder_width_m >= 0, "road.shoulder_width_m",
          "must be >= 0");

  double prev_end = 0.0;
  for (std::size_t i = 0; i < c.markings.size(); ++i) {
    const auto& m = c.markings[i];
    const std::string f = "markings[" + std::to_string(i) + "]";
    require(detail::finite_all({m.start_s, m.end_s}), f, "bounds must be finite");
    require(m.start_s >= 0, f, "start_s must be >= 0");
    require(m.start_s < m.end_s, f, "start_s must be < end_s");
    require(m.end_s <= r.length_m, f, "end_s must be <= road.length_m");
    require(i == 0 || m.start_s >= prev_end, f, "segments must be sorted and non-overlapping");
    prev_end = m.end_s;
  }

  require(std::isfinite(c.ego.s) && c.ego.s >= 0 && c.ego.s <= r.length_m, "ego.s",
          "must lie on the road");
  require(c.ego.lane == 0, "ego.lane", "the maneuver plan starts in the right lane (0)");
  require(std::isfinite(c.ego.speed) && c.ego.speed >= 0, "ego.speed", "must be >= 0");
  require(std::isfinite(c.lead.s) && c.lead.s >= 0 && c.lead.s <= r.length_m, "lead.s",
          "must lie on the road");
  require(c.lead.lane == c.ego.lane, "lead.lane", "lead must start in the ego lane");
  require(c.lead.s > c.ego.s, "lead.s", "lead must start ahead of ego");
  require(std::isfinite(c.lead.speed) && c.lead.speed >= 0, "lead.speed", "must be >= 0");
  require(c.lead.behavior == "constant_speed", "lead.behavior", "only constant_speed is supported");

  const auto& v = c.vehicle;
  require(std::isfinite(v.wheelbase_m) && v.wheelbase_m > 0, "vehicle.wheelbase_m", "must be > 0");
  require(std::isfinite(v.delta_max) && v.delta_max > 0, "vehicle.delta_max", "must be > 0");
  require(std::isfinite(v.a_min) && v.a_min < 0, "vehicle.a_min", "must be < 0");
  require(std::isfinite(v.a_max) && v.a_max > 0, "vehicle.a_max", "must be > 0");
  require(std::isfinite(v.steer_rate_max) && v.steer_rate_max > 0, "vehicle.steer_rate_max",
          "must be > 0");
  require(std::isfinite(v.vehicle_length_m) && v.vehicle_length_m > 0, "vehicle.vehicle_length_m",
          "must be > 0");
  require(std::isfinite(v.vehicle_width_m) && v.vehicle_width_m > 0, "vehicle.vehicle_width_m",
          "must be > 0");

  const auto& p = c.perception;
  require(std::isfinite(p.noise_sigma_ey) && p.noise_sigma_ey >= 0, "perception.noise_sigma_ey",
          "must be >= 0");
  require(std::isfinite(p.noise_sigma_epsi) && p.noise_sigma_epsi >= 0,
          "perception.noise_sigma_epsi", "must be >= 0");
  require(std::isfinite(p.detection_range) && p.detection_range > 0, "perception.detection_range",
          "must be > 0");
  require(std::isfinite(p.dropout_latch_s) && p.dropout_latch_s >= 0, "perception.dropout_latch_s",
          "must be >= 0");

  const auto& g = c.tgas;
  require(std::isfinite(g.v_set) && g.v_set > 0, "tgas.v_set", "must be > 0");
  require(std::isfinite(g.k_v) && g.k_v > 0, "tgas.k_v", "must be > 0");
  require(std::isfinite(g.time_gap_s) && g.time_gap_s > 0, "tgas.time_gap_s", "must be > 0");
  require(std::isfinite(g.k_gap) && g.k_gap > 0, "tgas.k_gap", "must be > 0");
  require(std::isfinite(g.k_rel) && g.k_rel > 0, "tgas.k_rel", "must be > 0");
  require(std::isfinite(g.k_e) && g.k_e > 0, "tgas.k_e", "must be > 0");
  require(std::isfinite(g.lc_duration_s) && g.lc_duration_s > 0, "tgas.lc_duration_s",
          "must be > 0");
  require(std::isfinite(g.lc_trigger_gap_s) && g.lc_trigger_gap_s > 0, "tgas.lc_trigger_gap_s",
          "must be > 0");
  require(std::isfinite(g.overtake_clear_m) && g.overtake_clear_m > 0, "tgas.overtake_clear_m",
          "must be > 0");

  const auto& t = c.tor;
  require(std::isfinite(t.tor_timeout_s) && t.tor_timeout_s > 0, "tor.timeout_s", "must be > 0");
  require(std::isfinite(t.ad_reduced_duration_s) && t.ad_reduced_duration_s >= 0,
          "tor.ad_reduced_duration_s", "must be >= 0");
  require(std::isfinite(t.v_reduced_factor) && t.v_reduced_factor > 0 && t.v_reduced_factor <= 1,
          "tor.v_reduced_factor", "must be in (0, 1]");
  require(std::isfinite(t.ad_reduced_decel) && t.ad_reduced_decel > 0, "tor.ad_reduced_decel",
          "must be > 0");
  require(std::isfinite(t.a_mrm) && t.a_mrm < 0, "tor.a_mrm", "must be < 0");
  require(std::isfinite(t.standstill_speed) && t.standstill_speed > 0, "tor.standstill_speed",
          "must be > 0");

  const auto& d = c.driver;
  require(std::isfinite(d.reaction_time_s) && d.reaction_time_s >= 0, "driver.reaction_time_s",
          "must be >= 0");
  require(std::isfinite(d.extra_delay_s) && d.extra_delay_s >= 0, "driver.extra_delay_s",
          "must be >= 0");
  require(std::isfinite(d.steer_gain) && d.steer_gain >= 0 && d.steer_gain <= 1,
          "driver.steer_gain", "must be in [0, 1]");
  require(!d.manual_v_target || (std::isfinite(*d.manual_v_target) && *d.manual_v_target >= 0),
          "driver.manual_v_target", "must be >= 0");
  require(std::isfinite(d.k_e) && d.k_e > 0, "driver.k_e", "must be > 0");
  require(std::isfinite(d.k_v) && d.k_v > 0, "driver.k_v", "must be > 0");

  require(std::isfinite(c.sim.dt_s) && c.sim.dt_s > 0, "sim.dt_s", "must be > 0");
  require(std::isfinite(c.sim.t_end_s) && c.sim.t_end_s >= c.sim.dt_s, "sim.t_end_s",
          "must be >= sim.dt_s");
}

/// Marking quality at longitudinal position s. Gaps between segments are Present.
inline MarkingQuality marking_quality_at(const ScenarioConfig& c, double s) {
  if (!(s >= 0.0 && s <= c.road.length_m)) {
    throw OutOfRange("s=" + std::to_string(s) + " outside road [0, " +
                     std::to_string(c.road.length_m) + "]");
  }
  for (const auto& m : c.markings) {
    if (s < m.start_s) break;
    if (s < m.end_s) return m.quality;
  }
  return MarkingQuality::Present;
}

/// Length of the missing-markings zone in the built-in scenario.
inline constexpr double kTable1MissingZoneLength = 1000.0;

/// Where, as a fraction of the lane-change duration, the ego reaches the
/// missing-markings zone in the built-in scenario.
inline constexpr double kTable1ZoneEntryFraction = 0.5;

/// Longitudinal position at which the ego reaches the lane-change trigger
/// time gap, assuming both vehicles hold their initial speeds.
inline double lane_change_trigger_s(const ScenarioConfig& c) {
  const double closing = c.ego.speed - c.lead.speed;
  const double trigger_range = c.tgas.lc_trigger_gap_s * c.ego.speed;
  const double initial_range = c.lead.s - c.ego.s;
  if (initial_range <= trigger_range) return c.ego.s;
  if (closing <= 0) return c.road.length_m;
  const double t_trigger = (initial_range - trigger_range) / closing;
  return c.ego.s + c.ego.speed * t_trigger;
}

/// Two-lane one-way highway, one constant-speed lead vehicle ahead in the
/// right lane, and a missing-markings zone that the ego reaches halfway
/// through its first (right-to-left) lane change.
inline ScenarioConfig table1_scenario() {
  ScenarioConfig c;
  c.road = RoadModel{3000.0, 3.5, 2, 2.5};
  c.ego = EgoInit{0.0, 0, 33.3};
  c.lead = LeadInit{150.0, 0, 25.0, "constant_speed"};
  c.tgas.v_set = c.ego.speed;
  c.tor.tor_timeout_s = 4.0;
  c.sim = SimParams{0.01, 60.0, 0};
  c.metadata = {{"weather", "clear"},
                {"light", "daylight"},
                {"traffic", "light traffic"},
                {"surface", "missing lane markings"}};

  const double zone_start =
      lane_change_trigger_s(c) + c.ego.speed * kTable1ZoneEntryFraction * c.tgas.lc_duration_s;
  c.markings.push_back(
      MarkingSegment{zone_start, zone_start + kTable1MissingZoneLength, MarkingQuality::Missing});
  validate(c);
  return c;
}

}  // namespace fmsim
