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

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "fmsim/automation.hpp"
#include "fmsim/dynamics.hpp"
#include "fmsim/errors.hpp"
#include "fmsim/scenario.hpp"

namespace fmsim {

/// The lane the vehicle is supposed to occupy: its centre line and width.
struct IntendedLane {
  double d_ref = 0.0;
  double width_m = 3.5;

  bool operator==(const IntendedLane&) const = default;
};

/// One simulation tick: the state at time t, the mode after this tick's
/// transition, and the command applied over [t, t + dt).
struct TraceSample {
  double t = 0.0;
  VehicleState ego;
  VehicleState lead;
  AutomationMode mode = AutomationMode::AD;
  bool perception_valid = true;
  ControlCommand cmd;
  DviState dvi;
  IntendedLane intended;
  bool in_lane_change = false;

  bool operator==(const TraceSample&) const = default;
};

/// Lateral slack left between the heading-corrected footprint and the lane
/// boundaries when the vehicle is centred.
inline double departure_margin(double psi, double lane_width, const DynamicsParams& veh) {
  const double footprint_width =
      veh.vehicle_width_m * std::cos(psi) + veh.vehicle_length_m * std::abs(std::sin(psi));
  return 0.5 * (lane_width - footprint_width);
}

/// True when, outside an intentional lane change, the footprint crosses a
/// boundary of the intended lane (strictly).
inline bool detect_lane_departure(const VehicleState& ego, const IntendedLane& intended,
                                  const DynamicsParams& veh, bool in_intentional_lane_change) {
  if (in_intentional_lane_change) return false;
  return std::abs(ego.d - intended.d_ref) > departure_margin(ego.psi, intended.width_m, veh);
}

inline bool detect_lane_departure(const TraceSample& sample, const DynamicsParams& veh) {
  return detect_lane_departure(sample.ego, sample.intended, veh, sample.in_lane_change);
}

struct MetricsReport {
  bool lane_departure = false;
  std::optional<double> departure_t;
  double max_abs_ey = 0.0;
  std::optional<double> take_over_time_s;
  AutomationMode final_mode = AutomationMode::AD;
  double final_speed = 0.0;
  std::optional<double> mrm_stop_distance_m;
  std::vector<TransitionEvent> events;

  bool operator==(const MetricsReport&) const = default;
};

namespace detail {

inline std::optional<double> first_event_t(std::span<const TransitionEvent> events, EventKind kind) {
  for (const auto& e : events) {
    if (e.kind == kind) return e.t;
  }
  return std::nullopt;
}

inline const TraceSample& sample_at(std::span<const TraceSample> trace, double t) {
  const auto it = std::min_element(trace.begin(), trace.end(), [t](const auto& a, const auto& b) {
    return std::abs(a.t - t) < std::abs(b.t - t);
  });
  return *it;
}

}  // namespace detail

/// Pure fold over a trace and its event log.
inline MetricsReport compute_report(std::span<const TraceSample> trace,
                                    std::span<const TransitionEvent> events,
                                    const ScenarioConfig& config) {
  if (trace.empty()) throw EmptyTrace("cannot compute a report from an empty trace");

  MetricsReport r;
  for (const auto& s : trace) {
    r.max_abs_ey = std::max(r.max_abs_ey, std::abs(s.ego.d - s.intended.d_ref));
    if (!r.lane_departure && detect_lane_departure(s, config.vehicle)) {
      r.lane_departure = true;
      r.departure_t = s.t;
    }
  }

  const auto tor_t = detail::first_event_t(events, EventKind::TOR_ISSUED);
  const auto takeover_t = detail::first_event_t(events, EventKind::TAKEOVER);
  if (tor_t && takeover_t) r.take_over_time_s = *takeover_t - *tor_t;

  const auto mrm_start_t = detail::first_event_t(events, EventKind::MRM_STARTED);
  const auto mrm_done_t = detail::first_event_t(events, EventKind::MRM_COMPLETED);
  if (mrm_start_t && mrm_done_t) {
    r.mrm_stop_distance_m =
        detail::sample_at(trace, *mrm_done_t).ego.s - detail::sample_at(trace, *mrm_start_t).ego.s;
  }

  r.final_mode = trace.back().mode;
  r.final_speed = trace.back().ego.v;
  r.events.assign(events.begin(), events.end());
  return r;
}

}  // namespace fmsim
