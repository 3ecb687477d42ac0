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

// JSON scenario documents. The key layout is described in docs/scenario-format.md.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmsim/errors.hpp"
#include "fmsim/scenario.hpp"

namespace fmsim {

enum class ParseMode { Strict, Lenient };

namespace detail {

using nlohmann::json;

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

/// Reads the members of one JSON object, remembering which keys were consumed
/// so unknown keys can be reported when the object is finished.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, ParseMode mode, std::vector<std::string>* warnings)
      : obj_(obj), path_(std::move(path)), mode_(mode), warnings_(warnings) {
    if (!obj_.is_object()) throw ParseError("`" + path_ + "` must be an object", 0, path_);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ParseError("`" + field(key) + "` must be a number", 0, field(key));
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ParseError("`" + field(key) + "` must be a number or null", 0, field(key));
      }
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) {
        throw ParseError("`" + field(key) + "` must be an integer", 0, field(key));
      }
      out = v->get<int>();
    }
  }

  void unsigned_integer(const std::string& key, unsigned long long& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw ParseError("`" + field(key) + "` must be a non-negative integer", 0, field(key));
      }
      out = v->get<unsigned long long>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ParseError("`" + field(key) + "` must be a string", 0, field(key));
      out = v->get<std::string>();
    }
  }

  template <class Enum, class Parse>
  void enumeration(const std::string& key, Enum& out, Parse parse) {
    std::string text;
    string(key, text);
    if (text.empty() && !obj_.contains(key)) return;
    auto parsed = parse(text);
    if (!parsed) throw ParseError("`" + field(key) + "`: unknown value '" + text + "'", 0, field(key));
    out = *parsed;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (seen_.count(it.key())) continue;
      const std::string msg = "unknown key `" + field(it.key()) + "`";
      if (mode_ == ParseMode::Strict) throw ParseError(msg, 0, field(it.key()));
      if (warnings_) warnings_->push_back(msg);
    }
  }

 private:
  const json& obj_;
  std::string path_;
  ParseMode mode_;
  std::vector<std::string>* warnings_;
  std::set<std::string> seen_;
};

inline std::optional<MarkingQuality> marking_quality_from_string(std::string_view s) {
  if (s == "present") return MarkingQuality::Present;
  if (s == "missing") return MarkingQuality::Missing;
  return std::nullopt;
}

}  // namespace detail

/// Parses and validates a scenario document held in memory.
inline ScenarioConfig parse_scenario(const std::string& text, ParseMode mode = ParseMode::Strict,
                                     std::vector<std::string>* warnings = nullptr) {
  using detail::json;
  using detail::ObjectReader;

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }

  ScenarioConfig c;
  ObjectReader top(doc, "", mode, warnings);

  if (const json* v = top.find("road")) {
    ObjectReader r(*v, "road", mode, warnings);
    r.number("length_m", c.road.length_m);
    r.number("lane_width_m", c.road.lane_width_m);
    r.integer("num_lanes", c.road.num_lanes);
    r.number("shoulder_width_m", c.road.shoulder_width_m);
    r.finish();
  }

  if (const json* v = top.find("markings")) {
    if (!v->is_array()) throw ParseError("`markings` must be an array", 0, "markings");
    for (std::size_t i = 0; i < v->size(); ++i) {
      ObjectReader m((*v)[i], "markings[" + std::to_string(i) + "]", mode, warnings);
      MarkingSegment seg;
      m.number("start_s", seg.start_s);
      m.number("end_s", seg.end_s);
      m.enumeration("quality", seg.quality, detail::marking_quality_from_string);
      m.finish();
      c.markings.push_back(seg);
    }
  }

  if (const json* v = top.find("ego")) {
    ObjectReader r(*v, "ego", mode, warnings);
    r.number("s", c.ego.s);
    r.integer("lane", c.ego.lane);
    r.number("speed", c.ego.speed);
    r.finish();
  }

  if (const json* v = top.find("lead")) {
    ObjectReader r(*v, "lead", mode, warnings);
    r.number("s", c.lead.s);
    r.integer("lane", c.lead.lane);
    r.number("speed", c.lead.speed);
    r.string("behavior", c.lead.behavior);
    r.finish();
  }

  if (const json* v = top.find("vehicle")) {
    ObjectReader r(*v, "vehicle", mode, warnings);
    r.number("wheelbase_m", c.vehicle.wheelbase_m);
    r.number("delta_max", c.vehicle.delta_max);
    r.number("a_min", c.vehicle.a_min);
    r.number("a_max", c.vehicle.a_max);
    r.number("steer_rate_max", c.vehicle.steer_rate_max);
    r.number("vehicle_length_m", c.vehicle.vehicle_length_m);
    r.number("vehicle_width_m", c.vehicle.vehicle_width_m);
    r.finish();
  }

  if (const json* v = top.find("perception")) {
    ObjectReader r(*v, "perception", mode, warnings);
    r.number("noise_sigma_ey", c.perception.noise_sigma_ey);
    r.number("noise_sigma_epsi", c.perception.noise_sigma_epsi);
    r.number("detection_range", c.perception.detection_range);
    r.number("dropout_latch_s", c.perception.dropout_latch_s);
    r.finish();
  }

  if (const json* v = top.find("tgas")) {
    ObjectReader r(*v, "tgas", mode, warnings);
    r.number("v_set", c.tgas.v_set);
    r.number("k_v", c.tgas.k_v);
    r.number("time_gap_s", c.tgas.time_gap_s);
    r.number("k_gap", c.tgas.k_gap);
    r.number("k_rel", c.tgas.k_rel);
    r.number("k_e", c.tgas.k_e);
    r.number("lc_duration_s", c.tgas.lc_duration_s);
    r.number("lc_trigger_gap_s", c.tgas.lc_trigger_gap_s);
    r.number("overtake_clear_m", c.tgas.overtake_clear_m);
    r.finish();
  }

  if (const json* v = top.find("tor")) {
    ObjectReader r(*v, "tor", mode, warnings);
    r.number("timeout_s", c.tor.tor_timeout_s);
    r.number("ad_reduced_duration_s", c.tor.ad_reduced_duration_s);
    r.number("v_reduced_factor", c.tor.v_reduced_factor);
    r.number("ad_reduced_decel", c.tor.ad_reduced_decel);
    r.number("a_mrm", c.tor.a_mrm);
    r.number("standstill_speed", c.tor.standstill_speed);
    r.enumeration("mrm_strategy", c.tor.mrm_strategy, mrm_strategy_from_string);
    r.finish();
  }

  if (const json* v = top.find("driver")) {
    ObjectReader r(*v, "driver", mode, warnings);
    r.enumeration("model", c.driver.model, driver_model_from_string);
    r.number("reaction_time_s", c.driver.reaction_time_s);
    r.number("extra_delay_s", c.driver.extra_delay_s);
    r.number("steer_gain", c.driver.steer_gain);
    r.optional_number("manual_v_target", c.driver.manual_v_target);
    r.number("k_e", c.driver.k_e);
    r.number("k_v", c.driver.k_v);
    r.finish();
  }

  if (const json* v = top.find("sim")) {
    ObjectReader r(*v, "sim", mode, warnings);
    r.number("dt_s", c.sim.dt_s);
    r.number("t_end_s", c.sim.t_end_s);
    r.unsigned_integer("seed", c.sim.seed);
    r.finish();
  }

  if (const json* v = top.find("metadata")) {
    if (!v->is_object()) throw ParseError("`metadata` must be an object", 0, "metadata");
    for (auto it = v->begin(); it != v->end(); ++it) {
      if (!it->is_string()) {
        throw ParseError("`metadata." + it.key() + "` must be a string", 0, "metadata." + it.key());
      }
      c.metadata[it.key()] = it->get<std::string>();
    }
  }

  top.finish();
  validate(c);
  return c;
}

/// Loads a scenario file. Errors name the path.
inline ScenarioConfig load_scenario(const std::filesystem::path& path,
                                    ParseMode mode = ParseMode::Strict,
                                    std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str(), mode, warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.field());
  }
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json markings = json::array();
  for (const auto& m : c.markings) {
    markings.push_back(
        {{"start_s", m.start_s}, {"end_s", m.end_s}, {"quality", std::string(to_string(m.quality))}});
  }
  json metadata = json::object();
  for (const auto& [k, v] : c.metadata) metadata[k] = v;

  return json{
      {"road",
       {{"length_m", c.road.length_m},
        {"lane_width_m", c.road.lane_width_m},
        {"num_lanes", c.road.num_lanes},
        {"shoulder_width_m", c.road.shoulder_width_m}}},
      {"markings", markings},
      {"ego", {{"s", c.ego.s}, {"lane", c.ego.lane}, {"speed", c.ego.speed}}},
      {"lead",
       {{"s", c.lead.s}, {"lane", c.lead.lane}, {"speed", c.lead.speed}, {"behavior", c.lead.behavior}}},
      {"vehicle",
       {{"wheelbase_m", c.vehicle.wheelbase_m},
        {"delta_max", c.vehicle.delta_max},
        {"a_min", c.vehicle.a_min},
        {"a_max", c.vehicle.a_max},
        {"steer_rate_max", c.vehicle.steer_rate_max},
        {"vehicle_length_m", c.vehicle.vehicle_length_m},
        {"vehicle_width_m", c.vehicle.vehicle_width_m}}},
      {"perception",
       {{"noise_sigma_ey", c.perception.noise_sigma_ey},
        {"noise_sigma_epsi", c.perception.noise_sigma_epsi},
        {"detection_range", c.perception.detection_range},
        {"dropout_latch_s", c.perception.dropout_latch_s}}},
      {"tgas",
       {{"v_set", c.tgas.v_set},
        {"k_v", c.tgas.k_v},
        {"time_gap_s", c.tgas.time_gap_s},
        {"k_gap", c.tgas.k_gap},
        {"k_rel", c.tgas.k_rel},
        {"k_e", c.tgas.k_e},
        {"lc_duration_s", c.tgas.lc_duration_s},
        {"lc_trigger_gap_s", c.tgas.lc_trigger_gap_s},
        {"overtake_clear_m", c.tgas.overtake_clear_m}}},
      {"tor",
       {{"timeout_s", c.tor.tor_timeout_s},
        {"ad_reduced_duration_s", c.tor.ad_reduced_duration_s},
        {"v_reduced_factor", c.tor.v_reduced_factor},
        {"ad_reduced_decel", c.tor.ad_reduced_decel},
        {"a_mrm", c.tor.a_mrm},
        {"standstill_speed", c.tor.standstill_speed},
        {"mrm_strategy", std::string(to_string(c.tor.mrm_strategy))}}},
      {"driver",
       {{"model", std::string(to_string(c.driver.model))},
        {"reaction_time_s", c.driver.reaction_time_s},
        {"extra_delay_s", c.driver.extra_delay_s},
        {"steer_gain", c.driver.steer_gain},
        {"manual_v_target",
         c.driver.manual_v_target ? json(*c.driver.manual_v_target) : json(nullptr)},
        {"k_e", c.driver.k_e},
        {"k_v", c.driver.k_v}}},
      {"sim", {{"dt_s", c.sim.dt_s}, {"t_end_s", c.sim.t_end_s}, {"seed", c.sim.seed}}},
      {"metadata", metadata},
  };
}

inline std::string write_scenario(const ScenarioConfig& c) { return scenario_to_json(c).dump(2) + "\n"; }

/// Resolves `--scenario` style arguments: the literal `table1` selects the
/// built-in scenario, anything else is a file path.
inline ScenarioConfig resolve_scenario(const std::string& spec, ParseMode mode = ParseMode::Strict,
                                       std::vector<std::string>* warnings = nullptr) {
  if (spec == "table1") return table1_scenario();
  return load_scenario(spec, mode, warnings);
}

}  // namespace fmsim
