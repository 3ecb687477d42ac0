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

// Trace CSV, event-log CSV and report JSON. Doubles are written with 17
// significant digits so a persisted trace replays to the same report.

#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmsim/metrics.hpp"

namespace fmsim {

inline constexpr const char* kTraceHeader =
    "t,ego_s,ego_d,ego_psi,ego_v,ego_delta,lead_s,lead_d,mode,perc_valid,delta_cmd,a_cmd,src,"
    "ref_d,ref_width,in_lc";

inline constexpr const char* kEventsHeader = "t,kind,detail";

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t max_fields) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (out.size() + 1 < max_fields) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) break;
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  out.push_back(line.substr(start));
  return out;
}

inline double parse_double(const std::string& s, std::size_t line, const char* field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + s + "' in " + field, line,
                     field);
  }
}

inline bool parse_flag(const std::string& s, std::size_t line, const char* field) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError("line " + std::to_string(line) + ": expected 0/1 in " + field, line, field);
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, std::span<const TraceSample> trace) {
  using detail::fmt_double;
  os << kTraceHeader << '\n';
  for (const auto& s : trace) {
    os << fmt_double(s.t) << ',' << fmt_double(s.ego.s) << ',' << fmt_double(s.ego.d) << ','
       << fmt_double(s.ego.psi) << ',' << fmt_double(s.ego.v) << ',' << fmt_double(s.ego.delta) << ','
       << fmt_double(s.lead.s) << ',' << fmt_double(s.lead.d) << ',' << to_string(s.mode) << ','
       << (s.perception_valid ? 1 : 0) << ',' << fmt_double(s.cmd.delta_cmd) << ','
       << fmt_double(s.cmd.a_cmd) << ',' << to_string(s.cmd.source) << ','
       << fmt_double(s.intended.d_ref) << ',' << fmt_double(s.intended.width_m) << ','
       << (s.in_lane_change ? 1 : 0) << '\n';
  }
}

inline std::string trace_csv(std::span<const TraceSample> trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

/// Reads a trace written by write_trace_csv. Columns not persisted (lead
/// speed and heading, the display state) are left default.
inline std::vector<TraceSample> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) {
    throw ParseError("line 1: unexpected trace header", 1);
  }
  std::vector<TraceSample> trace;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line, 16);
    if (f.size() != 16) throw ParseError("line " + std::to_string(n) + ": expected 16 columns", n);
    using detail::parse_double;
    TraceSample s;
    s.t = parse_double(f[0], n, "t");
    s.ego = VehicleState{parse_double(f[1], n, "ego_s"), parse_double(f[2], n, "ego_d"),
                         parse_double(f[3], n, "ego_psi"), parse_double(f[4], n, "ego_v"),
                         parse_double(f[5], n, "ego_delta")};
    s.lead.s = parse_double(f[6], n, "lead_s");
    s.lead.d = parse_double(f[7], n, "lead_d");
    const auto mode = automation_mode_from_string(f[8]);
    if (!mode) throw ParseError("line " + std::to_string(n) + ": unknown mode '" + f[8] + "'", n, "mode");
    s.mode = *mode;
    s.perception_valid = detail::parse_flag(f[9], n, "perc_valid");
    s.cmd.delta_cmd = parse_double(f[10], n, "delta_cmd");
    s.cmd.a_cmd = parse_double(f[11], n, "a_cmd");
    if (f[12] == "system") {
      s.cmd.source = CommandSource::System;
    } else if (f[12] == "driver") {
      s.cmd.source = CommandSource::Driver;
    } else {
      throw ParseError("line " + std::to_string(n) + ": unknown src '" + f[12] + "'", n, "src");
    }
    s.intended.d_ref = parse_double(f[13], n, "ref_d");
    s.intended.width_m = parse_double(f[14], n, "ref_width");
    s.in_lane_change = detail::parse_flag(f[15], n, "in_lc");
    trace.push_back(s);
  }
  return trace;
}

/// Detail text is the last column and may contain commas; newlines are
/// replaced by spaces.
inline void write_events_csv(std::ostream& os, std::span<const TransitionEvent> events) {
  os << kEventsHeader << '\n';
  for (const auto& e : events) {
    std::string detail = e.detail;
    for (auto& ch : detail) {
      if (ch == '\n' || ch == '\r') ch = ' ';
    }
    os << detail::fmt_double(e.t) << ',' << to_string(e.kind) << ',' << detail << '\n';
  }
}

inline std::vector<TransitionEvent> read_events_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kEventsHeader) {
    throw ParseError("line 1: unexpected events header", 1);
  }
  std::vector<TransitionEvent> events;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line, 3);
    if (f.size() != 3) throw ParseError("line " + std::to_string(n) + ": expected 3 columns", n);
    const auto kind = event_kind_from_string(f[1]);
    if (!kind) throw ParseError("line " + std::to_string(n) + ": unknown event '" + f[1] + "'", n, "kind");
    events.push_back(TransitionEvent{detail::parse_double(f[0], n, "t"), *kind, f[2]});
  }
  return events;
}

inline nlohmann::json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  using nlohmann::json;
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back({{"t", e.t}, {"kind", std::string(to_string(e.kind))}, {"detail", e.detail}});
  }
  return json{{"lane_departure", r.lane_departure},
              {"departure_t", optional_json(r.departure_t)},
              {"max_abs_ey", r.max_abs_ey},
              {"take_over_time_s", optional_json(r.take_over_time_s)},
              {"final_mode", std::string(to_string(r.final_mode))},
              {"final_speed", r.final_speed},
              {"mrm_stop_distance_m", optional_json(r.mrm_stop_distance_m)},
              {"events", events}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    MetricsReport r;
    r.lane_departure = j.at("lane_departure").get<bool>();
    r.departure_t = opt("departure_t");
    r.max_abs_ey = j.at("max_abs_ey").get<double>();
    r.take_over_time_s = opt("take_over_time_s");
    const auto mode = automation_mode_from_string(j.at("final_mode").get<std::string>());
    if (!mode) throw ParseError("unknown final_mode", 0, "final_mode");
    r.final_mode = *mode;
    r.final_speed = j.at("final_speed").get<double>();
    r.mrm_stop_distance_m = opt("mrm_stop_distance_m");
    for (const auto& e : j.at("events")) {
      const auto kind = event_kind_from_string(e.at("kind").get<std::string>());
      if (!kind) throw ParseError("unknown event kind", 0, "events");
      r.events.push_back(TransitionEvent{e.at("t").get<double>(), *kind, e.at("detail").get<std::string>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace fmsim
