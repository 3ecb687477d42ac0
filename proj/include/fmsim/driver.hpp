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
#include <optional>

#include "fmsim/automation.hpp"
#include "fmsim/dynamics.hpp"
#include "fmsim/params.hpp"
#include "fmsim/tgas.hpp"

namespace fmsim {

/// Latest input received from a human through the telemetry service.
/// steer and accel are normalised to [-1, 1]; negative steer is to the left.
struct ExternalInput {
  bool takeover = false;
  double steer = 0.0;
  double accel = 0.0;

  bool operator==(const ExternalInput&) const = default;
};

struct DriverOutput {
  bool takeover_pressed = false;
  ControlCommand cmd{0.0, 0.0, CommandSource::Driver};
};

/// Steering that tracks the true lane reference: the driver sees the road
/// even when the camera does not.
inline double adequate_steering(const VehicleState& ego, const LaneReference& true_lane_ref, double v,
                                const DynamicsParams& limits, double k_e = 1.0) {
  return stanley_steering(true_lane_ref.d_ref - ego.d, true_lane_ref.psi_ref - ego.psi, v, k_e,
                          limits.delta_max);
}

/// Maps normalised human input to a physical command.
inline ControlCommand external_command(const ExternalInput& in, const DynamicsParams& limits) {
  const double steer = std::clamp(in.steer, -1.0, 1.0);
  const double accel = std::clamp(in.accel, -1.0, 1.0);
  return ControlCommand{-steer * limits.delta_max,
                        accel >= 0.0 ? accel * limits.a_max : -accel * limits.a_min,
                        CommandSource::Driver};
}

/// Driver behaviour for one run. The take-over press latches.
class DriverModel {
 public:
  explicit DriverModel(DriverParams params = {}) : params_(params) {}

  DriverOutput act(AutomationMode mode, std::optional<double> tor_elapsed, const VehicleState& ego,
                   const LaneReference& true_lane_ref, const DynamicsParams& limits,
                   const ExternalInput& external = {}) {
    if (!pressed_ && tor_elapsed && wants_takeover(*tor_elapsed, external)) {
      pressed_ = true;
      v_target_ = params_.manual_v_target.value_or(ego.v);
    }

    DriverOutput out;
    out.takeover_pressed = pressed_;
    if (params_.model == DriverModelKind::External) {
      out.cmd = external_command(external, limits);
      return out;
    }
    if (!pressed_ && mode != AutomationMode::MD) return out;
    if (params_.model == DriverModelKind::NoResponse) return out;

    const double gain = params_.model == DriverModelKind::UnderSteer ? params_.steer_gain : 1.0;
    const double v_target = v_target_.value_or(params_.manual_v_target.value_or(ego.v));
    out.cmd.delta_cmd = gain * adequate_steering(ego, true_lane_ref, ego.v, limits, params_.k_e);
    out.cmd.a_cmd = std::clamp(params_.k_v * (v_target - ego.v), limits.a_min, limits.a_max);
    return out;
  }

  bool pressed() const { return pressed_; }
  const DriverParams& params() const { return params_; }

  /// Time after TOR issue at which this model presses the take-over button.
  std::optional<double> takeover_threshold() const {
    switch (params_.model) {
      case DriverModelKind::Nominal:
      case DriverModelKind::UnderSteer:
        return params_.reaction_time_s;
      case DriverModelKind::DelayedTakeover:
        return params_.reaction_time_s + params_.extra_delay_s;
      case DriverModelKind::NoResponse:
      case DriverModelKind::External:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  bool wants_takeover(double tor_elapsed, const ExternalInput& external) const {
    if (params_.model == DriverModelKind::External) return external.takeover;
    const auto threshold = takeover_threshold();
    return threshold && tor_elapsed >= *threshold - kTimerTolerance;
  }

  DriverParams params_;
  bool pressed_ = false;
  std::optional<double> v_target_;
};

}  // namespace fmsim
