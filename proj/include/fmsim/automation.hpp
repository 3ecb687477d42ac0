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

// Automation mode machine: take-over request at the operational limit,
// driver/system arbitration, reduced-functionality and minimal risk fallbacks,
// and the driver-vehicle interface state published for each mode.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmsim/dynamics.hpp"
#include "fmsim/errors.hpp"
#include "fmsim/scenario.hpp"
#include "fmsim/tgas.hpp"

namespace fmsim {

enum class AutomationMode { AD, TOR, AD_REDUCED, MRM, MD, STANDSTILL };

inline constexpr AutomationMode kAllModes[] = {AutomationMode::AD,         AutomationMode::TOR,
                                               AutomationMode::AD_REDUCED, AutomationMode::MRM,
                                               AutomationMode::MD,         AutomationMode::STANDSTILL};

inline bool is_valid(AutomationMode m) {
  const auto v = static_cast<int>(m);
  return v >= static_cast<int>(AutomationMode::AD) && v <= static_cast<int>(AutomationMode::STANDSTILL);
}

inline std::string_view to_string(AutomationMode m) {
  switch (m) {
    case AutomationMode::AD: return "AD";
    case AutomationMode::TOR: return "TOR";
    case AutomationMode::AD_REDUCED: return "AD_REDUCED";
    case AutomationMode::MRM: return "MRM";
    case AutomationMode::MD: return "MD";
    case AutomationMode::STANDSTILL: return "STANDSTILL";
  }
  return "?";
}

inline std::optional<AutomationMode> automation_mode_from_string(std::string_view s) {
  for (auto m : kAllModes) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

enum class EventKind {
  TOR_ISSUED,
  TAKEOVER,
  TOR_TIMEOUT,
  AD_REDUCED_ENTERED,
  MRM_STARTED,
  MRM_COMPLETED,
  END_TOR_ISSUED,
  LANE_DEPARTURE,
  SIM_END
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::TOR_ISSUED: return "TOR_ISSUED";
    case EventKind::TAKEOVER: return "TAKEOVER";
    case EventKind::TOR_TIMEOUT: return "TOR_TIMEOUT";
    case EventKind::AD_REDUCED_ENTERED: return "AD_REDUCED_ENTERED";
    case EventKind::MRM_STARTED: return "MRM_STARTED";
    case EventKind::MRM_COMPLETED: return "MRM_COMPLETED";
    case EventKind::END_TOR_ISSUED: return "END_TOR_ISSUED";
    case EventKind::LANE_DEPARTURE: return "LANE_DEPARTURE";
    case EventKind::SIM_END: return "SIM_END";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(EventKind::SIM_END); ++i) {
    const auto k = static_cast<EventKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct TransitionEvent {
  double t = 0.0;
  EventKind kind = EventKind::SIM_END;
  std::string detail;

  bool operator==(const TransitionEvent&) const = default;
};

/// Timers that are only meaningful in some modes: tor_elapsed from TOR issue
/// onwards, ad_reduced_elapsed from entering AD_REDUCED onwards.
struct ModeTimers {
  std::optional<double> tor_elapsed;
  std::optional<double> ad_reduced_elapsed;
};

struct TransitionResult {
  AutomationMode mode;
  std::vector<EventKind> events;
};

/// Timer thresholds are compared with this slack so that elapsed times built
/// from tick counts fire on the intended tick.
inline constexpr double kTimerTolerance = 1e-9;

inline TransitionResult transition(AutomationMode mode, bool perception_valid, bool takeover_pressed,
                                   const ModeTimers& timers, double v, const ScenarioConfig& config) {
  if (!is_valid(mode)) {
    throw IllegalState("undefined automation mode " + std::to_string(static_cast<int>(mode)));
  }
  if (!std::isfinite(v) || v < 0.0) throw IllegalState("speed must be finite and >= 0");
  auto check_timer = [](const std::optional<double>& x, const char* name) {
    if (x && !(std::isfinite(*x) && *x >= 0.0)) {
      throw IllegalState(std::string(name) + " must be finite and >= 0");
    }
  };
  check_timer(timers.tor_elapsed, "tor_elapsed");
  check_timer(timers.ad_reduced_elapsed, "ad_reduced_elapsed");

  const auto& p = config.tor;
  using M = AutomationMode;
  using E = EventKind;
  switch (mode) {
    case M::AD:
      if (timers.tor_elapsed || timers.ad_reduced_elapsed) {
        throw IllegalState("AD has no active take-over timers");
      }
      if (!perception_valid) return {M::TOR, {E::TOR_ISSUED}};
      return {M::AD, {}};

    case M::TOR:
      if (!timers.tor_elapsed || timers.ad_reduced_elapsed) {
        throw IllegalState("TOR requires tor_elapsed and no ad_reduced_elapsed");
      }
      if (takeover_pressed) return {M::MD, {E::TAKEOVER}};
      if (*timers.tor_elapsed >= p.tor_timeout_s - kTimerTolerance) {
        return {M::AD_REDUCED, {E::TOR_TIMEOUT, E::AD_REDUCED_ENTERED}};
      }
      return {M::TOR, {}};

    case M::AD_REDUCED:
      if (!timers.ad_reduced_elapsed) throw IllegalState("AD_REDUCED requires ad_reduced_elapsed");
      if (takeover_pressed) return {M::MD, {E::TAKEOVER}};
      if (*timers.ad_reduced_elapsed >= p.ad_reduced_duration_s - kTimerTolerance) {
        return {M::MRM, {E::MRM_STARTED}};
      }
      return {M::AD_REDUCED, {}};

    case M::MRM:
      if (takeover_pressed) return {M::MD, {E::TAKEOVER}};
      if (v <= p.standstill_speed) return {M::STANDSTILL, {E::MRM_COMPLETED, E::END_TOR_ISSUED}};
      return {M::MRM, {}};

    case M::MD:
    case M::STANDSTILL:
      return {mode, {}};
  }
  throw IllegalState("unreachable automation mode");
}

/// Braking applied while holding the vehicle at standstill (m/s^2, magnitude).
inline constexpr double kStandstillHoldDecel = 2.0;

inline ControlCommand arbitrate(AutomationMode mode, const ControlCommand& system_cmd,
                                const ControlCommand& driver_cmd) {
  switch (mode) {
    case AutomationMode::AD:
    case AutomationMode::TOR:
    case AutomationMode::AD_REDUCED:
    case AutomationMode::MRM: {
      ControlCommand c = system_cmd;
      c.source = CommandSource::System;
      return c;
    }
    case AutomationMode::MD: {
      ControlCommand c = driver_cmd;
      c.source = CommandSource::Driver;
      return c;
    }
    case AutomationMode::STANDSTILL:
      return ControlCommand{0.0, -kStandstillHoldDecel, CommandSource::System};
  }
  throw IllegalState("undefined automation mode " + std::to_string(static_cast<int>(mode)));
}

/// Lane line held by dead reckoning after the camera lost the markings.
struct LaneReference {
  double d_ref = 0.0;
  double psi_ref = 0.0;

  bool operator==(const LaneReference&) const = default;
};

struct FallbackReference {
  LaneReference lane;
  double mrm_elapsed_s = 0.0;
};

inline double shoulder_center(const RoadModel& road) { return -0.5 * road.shoulder_width_m; }

/// Lateral path followed during the fallback modes. For the shoulder-stop
/// variant the MRM first moves to the shoulder centre over one lane-change
/// duration; `ramping` reports whether that move is still in progress.
struct FallbackPath {
  double d_ref = 0.0;
  double d_ref_rate = 0.0;
  double psi_ref = 0.0;
  bool ramping = false;
  bool on_shoulder = false;
};

inline FallbackPath fallback_path(AutomationMode mode, const FallbackReference& ref, double v,
                                  const ScenarioConfig& config) {
  FallbackPath path{ref.lane.d_ref, 0.0, ref.lane.psi_ref, false, false};
  if (mode != AutomationMode::MRM && mode != AutomationMode::STANDSTILL) return path;
  if (config.tor.mrm_strategy != MrmStrategy::ShoulderStop) return path;

  const double T = config.tgas.lc_duration_s;
  const double x = ref.mrm_elapsed_s / T;
  const double target = shoulder_center(config.road);
  if (x >= 1.0 - kTimerTolerance / T) {
    return {target, 0.0, 0.0, false, true};
  }
  const auto q = quintic_blend(x);
  const double span = target - ref.lane.d_ref;
  path.d_ref = ref.lane.d_ref + span * q.p;
  path.d_ref_rate = span * q.dp / T;
  path.psi_ref = std::atan(path.d_ref_rate / std::max(v, kMinHeadingSpeed));
  path.ramping = true;
  return path;
}

/// Lateral lane hold against the dead-reckoned lane plus the mode's speed
/// profile: AD_REDUCED slows towards v_reduced, MRM brakes to standstill.
inline ControlCommand fallback_control(AutomationMode mode, const FallbackReference& ref,
                                       const VehicleState& ego, const ScenarioConfig& config) {
  if (mode != AutomationMode::AD_REDUCED && mode != AutomationMode::MRM) {
    throw IllegalState("fallback control is only defined in AD_REDUCED and MRM, not " +
                       std::string(to_string(mode)));
  }
  const auto path = fallback_path(mode, ref, ego.v, config);
  ControlCommand cmd;
  cmd.source = CommandSource::System;
  cmd.delta_cmd = stanley_steering(path.d_ref - ego.d, path.psi_ref - ego.psi, ego.v, config.tgas.k_e,
                                   config.vehicle.delta_max);
  if (mode == AutomationMode::AD_REDUCED) {
    const double v_reduced = config.tor.v_reduced_factor * config.tgas.v_set;
    cmd.a_cmd = std::clamp(config.tgas.k_v * (v_reduced - ego.v), -config.tor.ad_reduced_decel, 0.0);
  } else {
    cmd.a_cmd = path.ramping ? 0.0 : config.tor.a_mrm;
  }
  return cmd;
}

enum class DviPanel { AD, TOR, MRM, MD };

inline std::string_view to_string(DviPanel p) {
  switch (p) {
    case DviPanel::AD: return "AD";
    case DviPanel::TOR: return "TOR";
    case DviPanel::MRM: return "MRM";
    case DviPanel::MD: return "MD";
  }
  return "?";
}

struct DviState {
  AutomationMode mode = AutomationMode::AD;
  DviPanel panel = DviPanel::AD;
  bool tor_active = false;
  bool audio_alert = false;
  std::string message;
  std::optional<double> tor_elapsed_s;

  bool operator==(const DviState&) const = default;
};

struct DviTimers {
  std::optional<double> tor_elapsed;
  std::optional<double> end_tor_elapsed;
};

/// Maps an automation mode onto the four display panels. AD_REDUCED and
/// STANDSTILL share the MRM panel with their own message.
inline DviState dvi_state(AutomationMode mode, const DviTimers& timers) {
  DviState s;
  s.mode = mode;
  switch (mode) {
    case AutomationMode::AD:
      s.panel = DviPanel::AD;
      s.message = "Automated driving";
      break;
    case AutomationMode::TOR:
      s.panel = DviPanel::TOR;
      s.tor_active = true;
      s.audio_alert = true;
      s.message = "Take over now";
      s.tor_elapsed_s = timers.tor_elapsed.value_or(0.0);
      break;
    case AutomationMode::AD_REDUCED:
      s.panel = DviPanel::MRM;
      s.tor_active = true;
      s.message = "Reduced functionality - take over";
      s.tor_elapsed_s = timers.tor_elapsed.value_or(0.0);
      break;
    case AutomationMode::MRM:
      s.panel = DviPanel::MRM;
      s.tor_active = true;
      s.message = "Minimal risk maneuver - take over";
      s.tor_elapsed_s = timers.tor_elapsed.value_or(0.0);
      break;
    case AutomationMode::MD:
      s.panel = DviPanel::MD;
      s.message = "Manual driving";
      break;
    case AutomationMode::STANDSTILL:
      s.panel = DviPanel::MRM;
      s.tor_active = true;
      s.audio_alert = true;
      s.message = "Vehicle stopped — take over";
      s.tor_elapsed_s = timers.end_tor_elapsed.value_or(0.0);
      break;
  }
  return s;
}

}  // namespace fmsim
