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

// Transverse guidance: the overtaking maneuver plan, its lateral reference,
// and the lateral/longitudinal control laws used while automation drives.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include "fmsim/dynamics.hpp"
#include "fmsim/perception.hpp"
#include "fmsim/scenario.hpp"

namespace fmsim {

enum class ManeuverPhase { FollowRight, LaneChangeLeft, OvertakeLeft, LaneChangeRight, Done };

inline std::string_view to_string(ManeuverPhase p) {
  switch (p) {
    case ManeuverPhase::FollowRight: return "FollowRight";
    case ManeuverPhase::LaneChangeLeft: return "LaneChangeLeft";
    case ManeuverPhase::OvertakeLeft: return "OvertakeLeft";
    case ManeuverPhase::LaneChangeRight: return "LaneChangeRight";
    case ManeuverPhase::Done: return "Done";
  }
  return "?";
}

struct ManeuverPlan {
  ManeuverPhase phase = ManeuverPhase::FollowRight;
  double phase_start_t = 0.0;
  int source_lane = 0;
  int target_lane = 0;
  double lc_duration_s = 4.0;

  bool in_lane_change() const {
    return phase == ManeuverPhase::LaneChangeLeft || phase == ManeuverPhase::LaneChangeRight;
  }

  bool operator==(const ManeuverPlan&) const = default;
};

inline ManeuverPlan initial_plan(const TgasParams& params, int lane = 0) {
  return ManeuverPlan{ManeuverPhase::FollowRight, 0.0, lane, lane, params.lc_duration_s};
}

/// Phase timers are compared with a tolerance well below any usable dt so
/// that accumulated tick times do not postpone a transition by one step.
inline constexpr double kPhaseTimeTolerance = 1e-9;

/// Advances the plan by at most one phase.
inline ManeuverPlan plan_step(ManeuverPlan plan, const VehicleState& ego, const VehicleState& lead,
                              double t, const TgasParams& params) {
  auto enter = [&](ManeuverPhase phase, int source, int target) {
    plan.phase = phase;
    plan.phase_start_t = t;
    plan.source_lane = source;
    plan.target_lane = target;
    plan.lc_duration_s = params.lc_duration_s;
  };
  const bool window_elapsed = t - plan.phase_start_t >= plan.lc_duration_s - kPhaseTimeTolerance;

  switch (plan.phase) {
    case ManeuverPhase::FollowRight: {
      const double range = lead.s - ego.s;
      if (range >= 0.0 && ego.v > 0.0 && range / ego.v < params.lc_trigger_gap_s) {
        enter(ManeuverPhase::LaneChangeLeft, plan.target_lane, plan.target_lane + 1);
      }
      break;
    }
    case ManeuverPhase::LaneChangeLeft:
      if (window_elapsed) enter(ManeuverPhase::OvertakeLeft, plan.target_lane, plan.target_lane);
      break;
    case ManeuverPhase::OvertakeLeft:
      if (ego.s > lead.s + params.overtake_clear_m) {
        enter(ManeuverPhase::LaneChangeRight, plan.target_lane, plan.target_lane - 1);
      }
      break;
    case ManeuverPhase::LaneChangeRight:
      if (window_elapsed) enter(ManeuverPhase::Done, plan.target_lane, plan.target_lane);
      break;
    case ManeuverPhase::Done:
      break;
  }
  return plan;
}

/// Quintic blend from 0 to 1 over [0, 1] with zero end velocity and acceleration.
struct QuinticBlend {
  double p;    // position
  double dp;   // d/dx
  double ddp;  // d^2/dx^2
};

inline QuinticBlend quintic_blend(double x) {
  x = std::clamp(x, 0.0, 1.0);
  const double x2 = x * x;
  const double x3 = x2 * x;
  return {x3 * (10.0 - 15.0 * x + 6.0 * x2), 30.0 * x2 * (1.0 - 2.0 * x + x2),
          60.0 * x * (1.0 - 3.0 * x + 2.0 * x2)};
}

struct LateralReference {
  double d_ref = 0.0;
  double d_ref_rate = 0.0;
  double d_ref_accel = 0.0;
};

inline LateralReference lateral_reference(const ManeuverPlan& plan, double t, const RoadModel& road) {
  const double target = road.lane_center(plan.target_lane);
  if (!plan.in_lane_change()) return {target, 0.0, 0.0};

  const double source = road.lane_center(plan.source_lane);
  const double T = plan.lc_duration_s;
  const double x = (t - plan.phase_start_t) / T;
  if (x >= 1.0) return {target, 0.0, 0.0};
  const auto q = quintic_blend(x);
  const double span = target - source;
  return {source + span * q.p, span * q.dp / T, span * q.ddp / (T * T)};
}

/// Reference expressed relative to the target-lane centre, the quantity the
/// camera measures against.
struct ReferenceOffset {
  double lateral = 0.0;  // d_ref - lane centre
  double heading = 0.0;  // reference path heading
};

/// Below this speed the reference heading is computed as if the ego were
/// moving at it, keeping the heading bounded near standstill.
inline constexpr double kMinHeadingSpeed = 1.0;

inline double reference_heading(const LateralReference& ref, double v) {
  return std::atan(ref.d_ref_rate / std::max(v, kMinHeadingSpeed));
}

inline ReferenceOffset reference_offset(const ManeuverPlan& plan, const LateralReference& ref,
                                        const RoadModel& road, double v) {
  return {ref.d_ref - road.lane_center(plan.target_lane), reference_heading(ref, v)};
}

/// Softening speed of the cross-track term.
inline constexpr double kStanleySoftening = 0.1;

/// Stanley law for a cross-track error e_y (reference minus ego, leftwards
/// positive) and heading error e_psi.
inline double stanley_steering(double e_y, double e_psi, double v, double gain, double delta_max) {
  return std::clamp(e_psi + std::atan(gain * e_y / (v + kStanleySoftening)), -delta_max, delta_max);
}

inline double lateral_control(const PerceptionOutput& p, const ReferenceOffset& offset, double v,
                              const TgasParams& params, const DynamicsParams& limits) {
  if (!p.valid || !p.e_y || !p.e_psi) {
    throw InvalidPerception("lateral control requires a valid lane estimate");
  }
  return stanley_steering(*p.e_y + offset.lateral, *p.e_psi + offset.heading, v, params.k_e,
                          limits.delta_max);
}

/// Speed control, limited by time-gap control while a lead is tracked in the
/// ego lane. range_rate is the finite-differenced lead range (m/s).
inline double longitudinal_control(const PerceptionOutput& p, double v,
                                   std::optional<double> range_rate, const TgasParams& params,
                                   const DynamicsParams& limits) {
  double a = params.k_v * (params.v_set - v);
  if (p.lead_range) {
    const double desired = v * params.time_gap_s;
    const double a_gap = params.k_gap * (*p.lead_range - desired) + params.k_rel * range_rate.value_or(0.0);
    a = std::min(a, a_gap);
  }
  return std::clamp(a, limits.a_min, limits.a_max);
}

}  // namespace fmsim
