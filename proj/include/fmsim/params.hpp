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

// Parameter aggregates shared by the scenario file and the simulation modules.

#include <optional>
#include <string_view>

namespace fmsim {

struct DynamicsParams {
  double wheelbase_m = 2.8;
  double delta_max = 0.5;       // rad
  double a_min = -8.0;          // m/s^2
  double a_max = 3.0;           // m/s^2
  double steer_rate_max = 0.7;  // rad/s
  double vehicle_length_m = 4.5;
  double vehicle_width_m = 1.8;

  bool operator==(const DynamicsParams&) const = default;
};

struct PerceptionParams {
  double noise_sigma_ey = 0.03;     // m
  double noise_sigma_epsi = 0.005;  // rad
  double detection_range = 120.0;   // m
  double dropout_latch_s = 0.2;

  bool operator==(const PerceptionParams&) const = default;
};

struct TgasParams {
  double v_set = 33.3;  // m/s
  double k_v = 0.5;
  double time_gap_s = 1.8;
  double k_gap = 0.3;
  double k_rel = 0.8;
  double k_e = 0.8;
  double lc_duration_s = 4.0;
  double lc_trigger_gap_s = 3.0;
  double overtake_clear_m = 30.0;

  bool operator==(const TgasParams&) const = default;
};

enum class MrmStrategy { InLane, ShoulderStop };

/// Take-over request timing and fallback behaviour.
struct AutomationParams {
  double tor_timeout_s = 4.0;
  double ad_reduced_duration_s = 2.0;
  double v_reduced_factor = 0.6;  // fraction of v_set targeted in AD_REDUCED
  double ad_reduced_decel = 1.5;  // m/s^2, magnitude
  double a_mrm = -2.0;            // m/s^2
  double standstill_speed = 0.05;
  MrmStrategy mrm_strategy = MrmStrategy::InLane;

  bool operator==(const AutomationParams&) const = default;
};

enum class DriverModelKind { Nominal, DelayedTakeover, UnderSteer, NoResponse, External };

struct DriverParams {
  DriverModelKind model = DriverModelKind::Nominal;
  double reaction_time_s = 1.0;  // tau
  double extra_delay_s = 0.0;    // used by DelayedTakeover
  double steer_gain = 1.0;       // used by UnderSteer, in [0, 1]
  std::optional<double> manual_v_target;  // unset: hold the speed at take-over
  double k_e = 1.0;  // cross-track gain of the driver's adequate steering
  double k_v = 0.5;  // speed-hold gain in manual driving

  bool operator==(const DriverParams&) const = default;
};

struct SimParams {
  double dt_s = 0.01;
  double t_end_s = 60.0;
  unsigned long long seed = 0;

  bool operator==(const SimParams&) const = default;
};

inline std::string_view to_string(DriverModelKind m) {
  switch (m) {
    case DriverModelKind::Nominal: return "nominal";
    case DriverModelKind::DelayedTakeover: return "delayed";
    case DriverModelKind::UnderSteer: return "understeer";
    case DriverModelKind::NoResponse: return "noresponse";
    case DriverModelKind::External: return "external";
  }
  return "?";
}

inline std::optional<DriverModelKind> driver_model_from_string(std::string_view s) {
  if (s == "nominal") return DriverModelKind::Nominal;
  if (s == "delayed") return DriverModelKind::DelayedTakeover;
  if (s == "understeer") return DriverModelKind::UnderSteer;
  if (s == "noresponse") return DriverModelKind::NoResponse;
  if (s == "external") return DriverModelKind::External;
  return std::nullopt;
}

inline std::string_view to_string(MrmStrategy s) {
  return s == MrmStrategy::InLane ? "in_lane" : "shoulder_stop";
}

inline std::optional<MrmStrategy> mrm_strategy_from_string(std::string_view s) {
  if (s == "in_lane") return MrmStrategy::InLane;
  if (s == "shoulder_stop") return MrmStrategy::ShoulderStop;
  return std::nullopt;
}

}  // namespace fmsim
