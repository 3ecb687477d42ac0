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

// Transport-free core of the live server. The pacing loop owns a LiveSession
// and feeds it client events between ticks; every call returns the frames to
// send. Nothing here touches sockets or clocks.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fmsim/engine.hpp"
#include "fmsim/scenario_io.hpp"
#include "fmsim/telemetry/protocol.hpp"

namespace fmsim::telemetry {

using ClientId = std::uint64_t;

struct Frame {
  std::optional<ClientId> to;  // empty: every connected client
  std::string text;
  bool close = false;  // close the recipient after sending
};

using Frames = std::vector<Frame>;

/// Largest state-frame rate on the wire.
inline constexpr double kMaxStateRateHz = 50.0;

/// Ticks between state frames so that frames stay at or under 50 Hz.
inline long state_stride(double dt) {
  return std::max(1L, static_cast<long>(std::ceil(1.0 / (kMaxStateRateHz * dt) - 1e-9)));
}

class LiveSession {
 public:
  explicit LiveSession(ScenarioConfig config) : config_(std::move(config)) { restart(); }

  Frames connect(ClientId id) {
    clients_.insert(id);
    Frames out{{id, hello_frame().dump()}, {id, scene_frame(config_).dump()}};
    if (last_sample_) out.push_back({id, state_frame(*last_sample_).dump()});
    return out;
  }

  Frames disconnect(ClientId id) {
    clients_.erase(id);
    if (owner_ == id) owner_.reset();
    return {};
  }

  /// Handles one text frame from a client. Malformed or unknown messages
  /// close that client; input from anyone but the session owner is refused.
  Frames receive(ClientId id, const std::string& text) {
    InboundMsg msg;
    try {
      msg = parse_inbound(text);
    } catch (const ProtocolError& e) {
      disconnect(id);
      return {{id, error_frame(e.what()).dump(), true}};
    }

    if (auto* start = std::get_if<StartMsg>(&msg)) return handle_start(id, *start);
    if (owner_ != id) return {{id, error_frame("not the session owner").dump()}};

    if (auto* c = std::get_if<ControlMsg>(&msg)) {
      input_.steer = c->steer;
      input_.accel = c->accel;
    } else if (std::holds_alternative<TakeoverMsg>(msg)) {
      takeover_next_tick_ = true;
    } else if (std::holds_alternative<PauseMsg>(msg)) {
      paused_ = !paused_;
    } else if (std::holds_alternative<ResetMsg>(msg)) {
      restart();
      return {{std::nullopt, scene_frame(config_).dump()}};
    }
    return {};
  }

  /// Advances the engine by one tick when running.
  Frames tick() {
    if (!running()) return {};
    ExternalInput in = input_;
    in.takeover = takeover_next_tick_;
    takeover_next_tick_ = false;
    engine_->set_external_input(in);

    Frames out;
    StepResult r;
    try {
      r = engine_->step();
    } catch (const Error& e) {
      failed_ = true;
      out.push_back({std::nullopt, error_frame(e.what()).dump()});
      return out;
    }

    const bool mode_changed = !last_sample_ || last_sample_->mode != r.sample.mode;
    const bool due = (engine_->step_count() - 1) % stride_ == 0;
    last_sample_ = r.sample;
    if (due || mode_changed || engine_->finished()) {
      out.push_back({std::nullopt, state_frame(r.sample).dump()});
    }
    if (engine_->finished()) {
      out.push_back({std::nullopt, end_frame(engine_->report(), engine_->end_reason().value_or("")).dump()});
    }
    return out;
  }

  bool running() const { return engine_ && !engine_->finished() && !paused_ && !failed_; }
  bool done() const { return failed_ || (engine_ && engine_->finished()); }
  bool failed() const { return failed_; }
  bool paused() const { return paused_; }
  std::optional<ClientId> owner() const { return owner_; }
  const std::set<ClientId>& clients() const { return clients_; }
  const ScenarioConfig& config() const { return config_; }
  const SimEngine& engine() const { return *engine_; }

 private:
  Frames handle_start(ClientId id, const StartMsg& m) {
    if (owner_ && *owner_ != id) return {{id, error_frame("session is owned by another client").dump()}};

    Frames out;
    if (m.scenario || m.driver || done()) {
      ScenarioConfig next = config_;
      try {
        if (m.scenario) {
          next = m.scenario->is_string() ? resolve_builtin(m.scenario->get<std::string>())
                                         : parse_scenario(m.scenario->dump());
        }
        if (m.driver) next.driver.model = *m.driver;
        validate(next);
      } catch (const Error& e) {
        return {{id, error_frame(e.what()).dump()}};
      }
      config_ = std::move(next);
      restart();
      out.push_back({std::nullopt, scene_frame(config_).dump()});
    }
    owner_ = id;
    paused_ = false;
    out.push_back({id, session_frame(true).dump()});
    return out;
  }

  // Clients may name built-in scenarios only; file paths stay server-side.
  static ScenarioConfig resolve_builtin(const std::string& name) {
    if (name == "table1") return table1_scenario();
    throw ValidationError("scenario", "unknown built-in scenario '" + name + "'");
  }

  void restart() {
    engine_ = std::make_unique<SimEngine>(config_);
    stride_ = state_stride(config_.sim.dt_s);
    input_ = {};
    takeover_next_tick_ = false;
    paused_ = false;
    failed_ = false;
    last_sample_.reset();
  }

  ScenarioConfig config_;
  std::unique_ptr<SimEngine> engine_;
  long stride_ = 1;
  std::set<ClientId> clients_;
  std::optional<ClientId> owner_;
  ExternalInput input_;
  bool takeover_next_tick_ = false;
  bool paused_ = false;
  bool failed_ = false;
  std::optional<TraceSample> last_sample_;
};

}  // namespace fmsim::telemetry
