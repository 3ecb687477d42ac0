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
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "fmsim/automation.hpp"
#include "fmsim/driver.hpp"
#include "fmsim/dynamics.hpp"
#include "fmsim/metrics.hpp"
#include "fmsim/perception.hpp"
#include "fmsim/scenario.hpp"
#include "fmsim/tgas.hpp"

namespace fmsim {

/// Raised when a module fails inside a tick; the message carries t and mode.
class SimulationError : public Error {
 public:
  using Error::Error;
};

struct StepResult {
  TraceSample sample;
  std::vector<TransitionEvent> events;
};

/// Fixed-step simulation of one scenario run.
///
/// Every tick runs, in this order: sense, plan + system command, driver,
/// mode transition, arbitration, vehicle integration, departure check, trace
/// append. The random generator is consumed by the camera only, so equal
/// (config, seed) pairs reproduce the same trace bit for bit.
class SimEngine {
 public:
  explicit SimEngine(ScenarioConfig config)
      : config_(std::move(config)),
        rng_(config_.sim.seed),
        camera_(config_.perception),
        driver_(config_.driver),
        plan_(initial_plan(config_.tgas, config_.ego.lane)) {
    validate(config_);
    const auto& road = config_.road;
    ego_ = VehicleState{config_.ego.s, road.lane_center(config_.ego.lane), 0.0, config_.ego.speed, 0.0};
    lead_ = VehicleState{config_.lead.s, road.lane_center(config_.lead.lane), 0.0, config_.lead.speed,
                         0.0};
    dead_reckoned_ = LaneReference{road.lane_center(config_.ego.lane), 0.0};
    total_steps_ = static_cast<long>(std::ceil(config_.sim.t_end_s / config_.sim.dt_s - 1e-9));
  }

  StepResult step() {
    if (finished_) throw IllegalState("simulation already finished");
    try {
      return step_impl();
    } catch (const Error& e) {
      finished_ = true;
      throw SimulationError("t=" + std::to_string(t()) + " mode=" + std::string(to_string(mode_)) +
                            ": " + e.what());
    }
  }

  /// Latest human input; sampled at the next tick boundary.
  void set_external_input(const ExternalInput& in) { external_ = in; }

  bool finished() const { return finished_; }
  double t() const { return static_cast<double>(step_count_) * config_.sim.dt_s; }
  long step_count() const { return step_count_; }
  AutomationMode mode() const { return mode_; }
  const VehicleState& ego() const { return ego_; }
  const VehicleState& lead() const { return lead_; }
  const ManeuverPlan& plan() const { return plan_; }
  const LaneReference& dead_reckoned_lane() const { return dead_reckoned_; }
  const ScenarioConfig& config() const { return config_; }
  const std::vector<TraceSample>& trace() const { return trace_; }
  const std::vector<TransitionEvent>& events() const { return events_; }
  std::optional<std::string> end_reason() const { return end_reason_; }

  MetricsReport report() const { return compute_report(trace_, events_, config_); }

 private:
  std::optional<double> elapsed_since(const std::optional<long>& start) const {
    if (!start) return std::nullopt;
    return static_cast<double>(step_count_ - *start) * config_.sim.dt_s;
  }

  static bool tor_pending(AutomationMode m) {
    return m == AutomationMode::TOR || m == AutomationMode::AD_REDUCED || m == AutomationMode::MRM;
  }

  // Modes whose intended lane is the dead-reckoned one rather than the plan.
  static bool on_fallback_path(AutomationMode m) {
    return m == AutomationMode::AD_REDUCED || m == AutomationMode::MRM ||
           m == AutomationMode::STANDSTILL;
  }

  StepResult step_impl() {
    const double t_now = t();
    const double dt = config_.sim.dt_s;
    const auto& road = config_.road;
    const auto& limits = config_.vehicle;

    // 1. sense
    const PerceptionOutput p = camera_.sense(ego_, lead_, plan_.target_lane, config_, dt, rng_);
    std::optional<double> range_rate;
    if (p.lead_range && prev_lead_range_) range_rate = (*p.lead_range - *prev_lead_range_) / dt;
    prev_lead_range_ = p.lead_range;
    if (mode_ == AutomationMode::AD && p.valid) {
      dead_reckoned_ = LaneReference{ego_.d + *p.e_y, ego_.psi + *p.e_psi};
    }

    // 2. plan and system command
    plan_ = plan_step(plan_, ego_, lead_, t_now, config_.tgas);
    const LateralReference ref = lateral_reference(plan_, t_now, road);
    const auto mrm_elapsed = elapsed_since(mrm_start_step_);

    ControlCommand system_cmd{0.0, 0.0, CommandSource::System};
    switch (mode_) {
      case AutomationMode::AD:
      case AutomationMode::TOR:
        if (mode_ == AutomationMode::AD && p.valid) {
          held_steer_ = lateral_control(p, reference_offset(plan_, ref, road, ego_.v), ego_.v,
                                        config_.tgas, limits);
        }
        // Without a lane estimate the last valid steering command is held.
        system_cmd.delta_cmd = held_steer_;
        system_cmd.a_cmd = longitudinal_control(p, ego_.v, range_rate, config_.tgas, limits);
        break;
      case AutomationMode::AD_REDUCED:
      case AutomationMode::MRM:
        system_cmd = fallback_control(mode_, {dead_reckoned_, mrm_elapsed.value_or(0.0)}, ego_, config_);
        break;
      case AutomationMode::MD:
      case AutomationMode::STANDSTILL:
        break;
    }

    // 3. driver
    const auto tor_elapsed = elapsed_since(tor_start_step_);
    const LaneReference true_lane{ref.d_ref, reference_heading(ref, ego_.v)};
    const DriverOutput drv = driver_.act(mode_, tor_pending(mode_) ? tor_elapsed : std::nullopt, ego_,
                                         true_lane, limits, external_);
    const bool takeover = drv.takeover_pressed || (external_.takeover && tor_pending(mode_));

    // 4. transition
    ModeTimers timers;
    if (mode_ != AutomationMode::AD) timers.tor_elapsed = tor_elapsed;
    timers.ad_reduced_elapsed = elapsed_since(ad_reduced_start_step_);
    const TransitionResult tr = transition(mode_, p.valid, takeover, timers, ego_.v, config_);

    StepResult out;
    for (EventKind k : tr.events) {
      std::string detail;
      switch (k) {
        case EventKind::TOR_ISSUED:
          tor_start_step_ = step_count_;
          detail = "lane markings lost at s=" + format_number(ego_.s);
          break;
        case EventKind::TAKEOVER:
          detail = "driver took over in " + std::string(to_string(mode_));
          break;
        case EventKind::AD_REDUCED_ENTERED:
          ad_reduced_start_step_ = step_count_;
          break;
        case EventKind::MRM_STARTED:
          mrm_start_step_ = step_count_;
          detail = "v=" + format_number(ego_.v);
          break;
        case EventKind::END_TOR_ISSUED:
          end_tor_step_ = step_count_;
          break;
        default:
          break;
      }
      out.events.push_back(TransitionEvent{t_now, k, detail});
    }
    mode_ = tr.mode;

    // 5. arbitration, 6. integration
    const ControlCommand applied = arbitrate(mode_, system_cmd, drv.cmd);
    const VehicleState ego_next = fmsim::step(ego_, applied, limits, dt);
    const VehicleState lead_next = fmsim::step(lead_, ControlCommand{}, limits, dt);

    // 7. metrics sample
    TraceSample& s = out.sample;
    s.t = t_now;
    s.ego = ego_;
    s.lead = lead_;
    s.mode = mode_;
    s.perception_valid = p.valid;
    s.cmd = applied;
    DviTimers dvi_timers;
    if (tor_pending(mode_)) dvi_timers.tor_elapsed = elapsed_since(tor_start_step_);
    dvi_timers.end_tor_elapsed = elapsed_since(end_tor_step_);
    s.dvi = dvi_state(mode_, dvi_timers);
    if (on_fallback_path(mode_)) {
      const auto path = fallback_path(mode_, {dead_reckoned_, elapsed_since(mrm_start_step_).value_or(0.0)},
                                      ego_.v, config_);
      s.intended = IntendedLane{path.d_ref, path.on_shoulder ? road.shoulder_width_m : road.lane_width_m};
      s.in_lane_change = path.ramping;
    } else {
      s.intended = IntendedLane{ref.d_ref, road.lane_width_m};
      s.in_lane_change = plan_.in_lane_change();
    }
    if (!departure_emitted_ && detect_lane_departure(s, limits)) {
      departure_emitted_ = true;
      out.events.push_back(TransitionEvent{t_now, EventKind::LANE_DEPARTURE,
                                           "|d - d_ref|=" + format_number(std::abs(s.ego.d - s.intended.d_ref))});
    }

    ++step_count_;
    ego_ = ego_next;
    lead_ = lead_next;

    if (mode_ == AutomationMode::STANDSTILL && end_tor_step_) {
      end_reason_ = "standstill";
    } else if (mode_ == AutomationMode::MD && plan_.phase == ManeuverPhase::Done) {
      end_reason_ = "maneuver_complete";
    } else if (step_count_ >= total_steps_) {
      end_reason_ = "t_end";
    }
    if (end_reason_) {
      finished_ = true;
      out.events.push_back(TransitionEvent{t_now, EventKind::SIM_END, *end_reason_});
    }

    // 8. trace
    trace_.push_back(out.sample);
    events_.insert(events_.end(), out.events.begin(), out.events.end());
    return out;
  }

  static std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
  }

  ScenarioConfig config_;
  Rng rng_;
  LaneCamera camera_;
  DriverModel driver_;
  ManeuverPlan plan_;
  VehicleState ego_;
  VehicleState lead_;
  AutomationMode mode_ = AutomationMode::AD;
  LaneReference dead_reckoned_;
  ExternalInput external_;
  double held_steer_ = 0.0;
  std::optional<double> prev_lead_range_;
  std::optional<long> tor_start_step_;
  std::optional<long> ad_reduced_start_step_;
  std::optional<long> mrm_start_step_;
  std::optional<long> end_tor_step_;
  long step_count_ = 0;
  long total_steps_ = 0;
  bool departure_emitted_ = false;
  bool finished_ = false;
  std::optional<std::string> end_reason_;
  std::vector<TraceSample> trace_;
  std::vector<TransitionEvent> events_;
};

struct RunResult {
  std::vector<TraceSample> trace;
  std::vector<TransitionEvent> events;
  MetricsReport report;
};

/// Steps a fresh engine until it finishes.
inline RunResult run(const ScenarioConfig& config) {
  SimEngine engine(config);
  while (!engine.finished()) engine.step();
  RunResult r{engine.trace(), engine.events(), engine.report()};
  return r;
}

}  // namespace fmsim
