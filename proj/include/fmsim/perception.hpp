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

#include <optional>
#include <random>

#include "fmsim/dynamics.hpp"
#include "fmsim/scenario.hpp"

namespace fmsim {

using Rng = std::mt19937_64;

/// Camera lane estimate relative to the target lane.
///
/// e_y is the lateral offset of the target-lane centre as seen from the ego
/// (positive: centre lies to the left), e_psi the lane heading minus the ego
/// heading. Both are empty whenever the estimate is invalid.
struct PerceptionOutput {
  bool valid = false;
  std::optional<double> e_y;
  std::optional<double> e_psi;
  std::optional<double> lead_range;

  bool operator==(const PerceptionOutput&) const = default;
};

/// Lane camera with a deterministic performance insufficiency: no estimate
/// while the markings under the ego are missing, plus a minimum invalid dwell
/// once they have been lost.
class LaneCamera {
 public:
  explicit LaneCamera(PerceptionParams params = {}) : params_(params) {}

  PerceptionOutput sense(const VehicleState& ego, const VehicleState& lead, int target_lane,
                         const ScenarioConfig& config, double dt, Rng& rng) {
    if (!(ego.s >= 0.0 && ego.s <= config.road.length_m)) {
      throw OutOfRange("ego s=" + std::to_string(ego.s) + " is beyond the road");
    }

    PerceptionOutput out;
    out.lead_range = lead_range(ego, lead, config.road);

    if (marking_quality_at(config, ego.s) == MarkingQuality::Missing) {
      latch_remaining_ = params_.dropout_latch_s;
      return out;
    }
    if (latch_remaining_ > 0.0) {
      latch_remaining_ -= dt;
      // Residue below a nanosecond is rounding, not dwell.
      if (latch_remaining_ < 1e-9) latch_remaining_ = 0.0;
      return out;
    }

    out.valid = true;
    double e_y = config.road.lane_center(target_lane) - ego.d;
    double e_psi = -ego.psi;
    if (params_.noise_sigma_ey > 0.0) {
      e_y += std::normal_distribution<double>(0.0, params_.noise_sigma_ey)(rng);
    }
    if (params_.noise_sigma_epsi > 0.0) {
      e_psi += std::normal_distribution<double>(0.0, params_.noise_sigma_epsi)(rng);
    }
    out.e_y = e_y;
    out.e_psi = e_psi;
    return out;
  }

  /// Idealised object detection: range to a lead in the ego lane, ahead and
  /// within detection range.
  std::optional<double> lead_range(const VehicleState& ego, const VehicleState& lead,
                                   const RoadModel& road) const {
    if (road.lane_at(ego.d) != road.lane_at(lead.d)) return std::nullopt;
    const double range = lead.s - ego.s;
    if (range < 0.0 || range > params_.detection_range) return std::nullopt;
    return range;
  }

  bool latched() const { return latch_remaining_ > 0.0; }
  const PerceptionParams& params() const { return params_; }

 private:
  PerceptionParams params_;
  double latch_remaining_ = 0.0;
};

}  // namespace fmsim
