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

// Live telemetry wire format, version 1. Every frame is one JSON text
// message carrying "type" and "v".

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "fmsim/metrics.hpp"
#include "fmsim/scenario.hpp"
#include "fmsim/trace_io.hpp"

namespace fmsim::telemetry {

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// ---- outbound -------------------------------------------------------------

inline nlohmann::json hello_frame() { return {{"type", "hello"}, {"v", kProtocolVersion}}; }

inline nlohmann::json scene_frame(const ScenarioConfig& c) {
  using nlohmann::json;
  json markings = json::array();
  for (const auto& m : c.markings) {
    markings.push_back({{"start_s", m.start_s}, {"end_s", m.end_s}, {"quality", std::string(to_string(m.quality))}});
  }
  return {{"type", "scene"},
          {"v", kProtocolVersion},
          {"lane_width", c.road.lane_width_m},
          {"num_lanes", c.road.num_lanes},
          {"road_length", c.road.length_m},
          {"shoulder_width", c.road.shoulder_width_m},
          {"markings", markings},
          {"vehicle", {{"length", c.vehicle.vehicle_length_m}, {"width", c.vehicle.vehicle_width_m}}}};
}

inline nlohmann::json state_frame(const TraceSample& s) {
  return {{"type", "state"},
          {"v", kProtocolVersion},
          {"t", s.t},
          {"ego", {{"s", s.ego.s}, {"d", s.ego.d}, {"psi", s.ego.psi}, {"v", s.ego.v}, {"delta", s.ego.delta}}},
          {"lead", {{"s", s.lead.s}, {"d", s.lead.d}, {"v", s.lead.v}}},
          {"mode", std::string(to_string(s.mode))},
          {"dvi",
           {{"panel", std::string(to_string(s.dvi.panel))},
            {"tor_active", s.dvi.tor_active},
            {"audio_alert", s.dvi.audio_alert},
            {"message", s.dvi.message},
            {"tor_elapsed_s", optional_json(s.dvi.tor_elapsed_s)}}},
          {"perception_valid", s.perception_valid}};
}

inline nlohmann::json error_frame(const std::string& message) {
  return {{"type", "error"}, {"v", kProtocolVersion}, {"message", message}};
}

inline nlohmann::json session_frame(bool owner) {
  return {{"type", "session"}, {"v", kProtocolVersion}, {"owner", owner}};
}

inline nlohmann::json end_frame(const MetricsReport& r, const std::string& reason) {
  return {{"type", "end"}, {"v", kProtocolVersion}, {"reason", reason}, {"report", report_to_json(r)}};
}

// ---- inbound --------------------------------------------------------------

struct ControlMsg {
  double steer = 0.0;  // normalized, clamped to [-1, 1]
  double accel = 0.0;
};
struct TakeoverMsg {};
struct StartMsg {
  std::optional<nlohmann::json> scenario;  // "table1" or an inline scenario object
  std::optional<DriverModelKind> driver;
};
struct PauseMsg {};
struct ResetMsg {};

using InboundMsg = std::variant<ControlMsg, TakeoverMsg, StartMsg, PauseMsg, ResetMsg>;

namespace detail {

inline double control_axis(const nlohmann::json& body, const char* key) {
  if (!body.contains(key)) return 0.0;
  const auto& v = body.at(key);
  if (!v.is_number()) throw ProtocolError(std::string("control.") + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ProtocolError(std::string("control.") + key + " must be finite");
  return std::clamp(x, -1.0, 1.0);
}

}  // namespace detail

/// Decodes one client text frame. Throws ProtocolError on malformed JSON,
/// a missing or unknown type, or ill-typed fields.
inline InboundMsg parse_inbound(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("malformed JSON");
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) throw ProtocolError("missing message type");
  const auto type = type_it->get<std::string>();

  if (type == "control") {
    // Axes may sit at the top level or under "control".
    const auto& body = j.contains("control") && j.at("control").is_object() ? j.at("control") : j;
    return ControlMsg{detail::control_axis(body, "steer"), detail::control_axis(body, "accel")};
  }
  if (type == "takeover") return TakeoverMsg{};
  if (type == "pause") return PauseMsg{};
  if (type == "reset") return ResetMsg{};
  if (type == "start") {
    StartMsg m;
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      const auto& s = j.at("scenario");
      if (!s.is_string() && !s.is_object()) throw ProtocolError("start.scenario must be a name or an object");
      m.scenario = s;
    }
    if (j.contains("driver") && !j.at("driver").is_null()) {
      if (!j.at("driver").is_string()) throw ProtocolError("start.driver must be a string");
      m.driver = driver_model_from_string(j.at("driver").get<std::string>());
      if (!m.driver) throw ProtocolError("unknown driver model '" + j.at("driver").get<std::string>() + "'");
    }
    return m;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

}  // namespace fmsim::telemetry
