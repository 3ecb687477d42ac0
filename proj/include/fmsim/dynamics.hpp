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
#include <array>
#include <cmath>
#include <string_view>

#include "fmsim/errors.hpp"
#include "fmsim/params.hpp"

namespace fmsim {

/// Vehicle pose in the road frame: s along the road, d leftwards from the
/// right road edge, psi counter-clockwise from the road direction.
struct VehicleState {
  double s = 0.0;
  double d = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double delta = 0.0;

  bool operator==(const VehicleState&) const = default;
};

enum class CommandSource { System, Driver };

inline std::string_view to_string(CommandSource s) {
  return s == CommandSource::System ? "system" : "driver";
}

/// Positive delta_cmd steers left.
struct ControlCommand {
  double delta_cmd = 0.0;
  double a_cmd = 0.0;
  CommandSource source = CommandSource::System;

  bool operator==(const ControlCommand&) const = default;
};

struct Point2 {
  double s = 0.0;
  double d = 0.0;
};

/// Kinematic bicycle, semi-implicit Euler: steering and speed are updated
/// first, the pose is then integrated with the new values.
inline VehicleState step(const VehicleState& x, const ControlCommand& cmd, const DynamicsParams& p,
                         double dt) {
  if (!(std::isfinite(x.s) && std::isfinite(x.d) && std::isfinite(x.psi) && std::isfinite(x.v) &&
        std::isfinite(x.delta) && std::isfinite(cmd.delta_cmd) && std::isfinite(cmd.a_cmd) &&
        std::isfinite(dt))) {
    throw NonFiniteInput("dynamics step received a non-finite value");
  }

  const double delta_target = std::clamp(cmd.delta_cmd, -p.delta_max, p.delta_max);
  const double max_slew = p.steer_rate_max * dt;
  const double delta = std::clamp(x.delta + std::clamp(delta_target - x.delta, -max_slew, max_slew),
                                  -p.delta_max, p.delta_max);
  const double a = std::clamp(cmd.a_cmd, p.a_min, p.a_max);
  const double v = std::max(0.0, x.v + a * dt);

  VehicleState next;
  next.delta = delta;
  next.v = v;
  next.psi = x.psi + v * std::tan(delta) / p.wheelbase_m * dt;
  next.s = x.s + v * std::cos(next.psi) * dt;
  next.d = x.d + v * std::sin(next.psi) * dt;
  return next;
}

/// Corners of the vehicle rectangle: front-left, front-right, rear-right, rear-left.
inline std::array<Point2, 4> footprint(const VehicleState& x, const DynamicsParams& p) {
  const double hl = 0.5 * p.vehicle_length_m;
  const double hw = 0.5 * p.vehicle_width_m;
  const double c = std::cos(x.psi);
  const double s = std::sin(x.psi);
  auto corner = [&](double lon, double lat) {
    return Point2{x.s + lon * c - lat * s, x.d + lon * s + lat * c};
  };
  return {corner(hl, hw), corner(hl, -hw), corner(-hl, -hw), corner(-hl, hw)};
}

}  // namespace fmsim
