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

// Parameter sweeps over scenario fields, run concurrently with one private
// engine per point, merged back in parameter order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fmsim/engine.hpp"
#include "fmsim/trace_io.hpp"

namespace fmsim {

class SweepError : public Error {
 public:
  using Error::Error;
};

/// Numeric scenario fields addressable by a sweep, keyed by dotted path.
inline const std::map<std::string, std::function<double&(ScenarioConfig&)>>& sweep_parameters() {
  static const std::map<std::string, std::function<double&(ScenarioConfig&)>> params = {
      {"driver.reaction_time_s", [](ScenarioConfig& c) -> double& { return c.driver.reaction_time_s; }},
      {"driver.extra_delay_s", [](ScenarioConfig& c) -> double& { return c.driver.extra_delay_s; }},
      {"driver.steer_gain", [](ScenarioConfig& c) -> double& { return c.driver.steer_gain; }},
      {"driver.k_e", [](ScenarioConfig& c) -> double& { return c.driver.k_e; }},
      {"driver.k_v", [](ScenarioConfig& c) -> double& { return c.driver.k_v; }},
      {"tor.timeout_s", [](ScenarioConfig& c) -> double& { return c.tor.tor_timeout_s; }},
      {"tor.ad_reduced_duration_s",
       [](ScenarioConfig& c) -> double& { return c.tor.ad_reduced_duration_s; }},
      {"tor.a_mrm", [](ScenarioConfig& c) -> double& { return c.tor.a_mrm; }},
      {"tgas.v_set", [](ScenarioConfig& c) -> double& { return c.tgas.v_set; }},
      {"tgas.k_e", [](ScenarioConfig& c) -> double& { return c.tgas.k_e; }},
      {"tgas.lc_duration_s", [](ScenarioConfig& c) -> double& { return c.tgas.lc_duration_s; }},
      {"tgas.lc_trigger_gap_s", [](ScenarioConfig& c) -> double& { return c.tgas.lc_trigger_gap_s; }},
      {"ego.speed", [](ScenarioConfig& c) -> double& { return c.ego.speed; }},
      {"lead.speed", [](ScenarioConfig& c) -> double& { return c.lead.speed; }},
      {"lead.s", [](ScenarioConfig& c) -> double& { return c.lead.s; }},
      {"perception.noise_sigma_ey", [](ScenarioConfig& c) -> double& { return c.perception.noise_sigma_ey; }},
      {"road.lane_width_m", [](ScenarioConfig& c) -> double& { return c.road.lane_width_m; }},
  };
  return params;
}

/// Resolves a full dotted path, or a bare field name when exactly one
/// registered path ends with it.
inline std::string resolve_parameter_path(const std::string& name) {
  const auto& params = sweep_parameters();
  if (params.count(name)) return name;
  std::vector<std::string> matches;
  for (const auto& [path, _] : params) {
    const auto dot = path.rfind('.');
    if (path.substr(dot + 1) == name) matches.push_back(path);
  }
  if (matches.size() == 1) return matches.front();
  if (matches.empty()) throw SweepError("unknown parameter path: " + name);
  throw SweepError("ambiguous parameter name: " + name);
}

struct SweepAxis {
  std::string path;
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;

  /// Number of grid points; the endpoint is included when it lies on the grid.
  std::size_t count() const {
    return static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  }
  double value(std::size_t i) const { return from + static_cast<double>(i) * step; }
};

enum class SeedPolicy { Fixed, PerPoint };

struct SweepSpec {
  std::vector<SweepAxis> axes;
  SeedPolicy seed_policy = SeedPolicy::Fixed;
};

inline constexpr std::size_t kMaxSweepAxes = 3;

/// Parses `path=from:to:step`.
inline SweepAxis parse_sweep_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw SweepError("expected path=from:to:step, got '" + text + "'");
  SweepAxis axis;
  axis.path = resolve_parameter_path(text.substr(0, eq));

  std::vector<double> nums;
  std::stringstream range(text.substr(eq + 1));
  std::string part;
  while (std::getline(range, part, ':')) {
    try {
      std::size_t used = 0;
      nums.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw SweepError("bad number '" + part + "' in '" + text + "'");
    }
  }
  if (nums.size() != 3) throw SweepError("expected from:to:step in '" + text + "'");
  axis.from = nums[0];
  axis.to = nums[1];
  axis.step = nums[2];
  if (!(axis.step > 0.0)) throw SweepError("step must be > 0 in '" + text + "'");
  if (!(axis.from <= axis.to)) throw SweepError("from must be <= to in '" + text + "'");
  return axis;
}

inline void validate(const SweepSpec& spec) {
  if (spec.axes.empty()) throw SweepError("a sweep needs at least one --param");
  if (spec.axes.size() > kMaxSweepAxes) throw SweepError("at most 3 sweep parameters are supported");
}

struct SweepRow {
  std::vector<double> values;
  bool lane_departure = false;
  std::optional<double> take_over_time_s;
  std::optional<double> departure_t;
};

/// The cross product of all axes, first axis outermost.
inline std::vector<std::vector<double>> sweep_points(const SweepSpec& spec) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : spec.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : points) {
      for (std::size_t i = 0; i < axis.count(); ++i) {
        auto p = prefix;
        p.push_back(axis.value(i));
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

inline ScenarioConfig sweep_point_config(const ScenarioConfig& base, const SweepSpec& spec,
                                         const std::vector<double>& values, std::size_t index) {
  ScenarioConfig c = base;
  for (std::size_t a = 0; a < spec.axes.size(); ++a) {
    sweep_parameters().at(spec.axes[a].path)(c) = values[a];
  }
  if (spec.seed_policy == SeedPolicy::PerPoint) c.sim.seed = base.sim.seed + index;
  validate(c);
  return c;
}

/// Runs every point with `workers` threads. Rows come back in point order
/// regardless of the worker count.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec,
                                       unsigned workers = 1) {
  validate(spec);
  const auto points = sweep_points(spec);
  std::vector<ScenarioConfig> configs;
  configs.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    configs.push_back(sweep_point_config(base, spec, points[i], i));
  }

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        const auto result = run(configs[i]);
        rows[i] = SweepRow{points[i], result.report.lane_departure, result.report.take_over_time_s,
                           result.report.departure_t};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  for (const auto& axis : spec.axes) os << axis.path << ',';
  os << "lane_departure,take_over_time,departure_t\n";
  auto opt = [](const std::optional<double>& x) { return x ? detail::fmt_double(*x) : std::string(); };
  for (const auto& r : rows) {
    for (double v : r.values) os << detail::fmt_double(v) << ',';
    os << (r.lane_departure ? "true" : "false") << ',' << opt(r.take_over_time_s) << ','
       << opt(r.departure_t) << '\n';
  }
}

enum class Monotonicity { Constant, NonDecreasing, NonIncreasing, Mixed };

inline std::string_view to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Constant: return "constant";
    case Monotonicity::NonDecreasing: return "non_decreasing";
    case Monotonicity::NonIncreasing: return "non_increasing";
    case Monotonicity::Mixed: return "mixed";
  }
  return "?";
}

/// Shape of a boolean outcome sequence ordered by increasing parameter.
inline Monotonicity classify(const std::vector<bool>& outcome) {
  bool rises = false;
  bool falls = false;
  for (std::size_t i = 1; i < outcome.size(); ++i) {
    if (!outcome[i - 1] && outcome[i]) rises = true;
    if (outcome[i - 1] && !outcome[i]) falls = true;
  }
  if (rises && falls) return Monotonicity::Mixed;
  if (rises) return Monotonicity::NonDecreasing;
  if (falls) return Monotonicity::NonIncreasing;
  return Monotonicity::Constant;
}

/// Hazard frontier of one axis: the extreme parameter values at which a
/// departure occurred, and whether the outcome is monotone along the axis
/// (for every fixed setting of the other axes).
struct AxisFrontier {
  std::string path;
  Monotonicity monotonicity = Monotonicity::Constant;
  std::optional<double> min_hazard_value;
  std::optional<double> max_hazard_value;
  std::optional<double> min_safe_value;
  std::optional<double> max_safe_value;
};

struct SweepSummary {
  std::size_t points = 0;
  std::size_t hazardous_points = 0;
  std::vector<AxisFrontier> frontier;
};

inline SweepSummary summarize(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  SweepSummary s;
  s.points = rows.size();
  for (const auto& r : rows) s.hazardous_points += r.lane_departure ? 1 : 0;

  for (std::size_t a = 0; a < spec.axes.size(); ++a) {
    AxisFrontier f;
    f.path = spec.axes[a].path;
    auto widen = [](std::optional<double>& lo, std::optional<double>& hi, double v) {
      if (!lo || v < *lo) lo = v;
      if (!hi || v > *hi) hi = v;
    };
    // Group rows by the values of the other axes; within a group the rows
    // appear in increasing order of this axis.
    std::map<std::vector<double>, std::vector<bool>> lines;
    for (const auto& r : rows) {
      const double v = r.values[a];
      if (r.lane_departure) {
        widen(f.min_hazard_value, f.max_hazard_value, v);
      } else {
        widen(f.min_safe_value, f.max_safe_value, v);
      }
      auto key = r.values;
      key.erase(key.begin() + static_cast<std::ptrdiff_t>(a));
      lines[key].push_back(r.lane_departure);
    }
    bool rises = false;
    bool falls = false;
    for (const auto& [_, outcome] : lines) {
      const auto m = classify(outcome);
      rises |= m == Monotonicity::NonDecreasing || m == Monotonicity::Mixed;
      falls |= m == Monotonicity::NonIncreasing || m == Monotonicity::Mixed;
    }
    f.monotonicity = rises && falls ? Monotonicity::Mixed
                     : rises        ? Monotonicity::NonDecreasing
                     : falls        ? Monotonicity::NonIncreasing
                                    : Monotonicity::Constant;
    s.frontier.push_back(f);
  }
  return s;
}

inline nlohmann::json summary_to_json(const SweepSpec& spec, const SweepSummary& s) {
  using nlohmann::json;
  json axes = json::array();
  for (const auto& a : spec.axes) {
    axes.push_back({{"path", a.path}, {"from", a.from}, {"to", a.to}, {"step", a.step}, {"count", a.count()}});
  }
  json frontier = json::object();
  for (std::size_t a = 0; a < s.frontier.size(); ++a) {
    const auto& f = s.frontier[a];
    const auto& axis = spec.axes[a];
    auto index = [&](const std::optional<double>& v) -> json {
      if (!v) return nullptr;
      return std::llround((*v - axis.from) / axis.step);
    };
    frontier[f.path] = {{"monotonicity", std::string(to_string(f.monotonicity))},
                        {"min_hazard_index", index(f.min_hazard_value)},
                        {"max_hazard_index", index(f.max_hazard_value)},
                        {"min_hazard_value", optional_json(f.min_hazard_value)},
                        {"max_hazard_value", optional_json(f.max_hazard_value)},
                        {"min_safe_value", optional_json(f.min_safe_value)},
                        {"max_safe_value", optional_json(f.max_safe_value)}};
  }
  return json{{"points", s.points},
              {"hazardous_points", s.hazardous_points},
              {"seed_policy", spec.seed_policy == SeedPolicy::Fixed ? "fixed" : "per-point"},
              {"axes", axes},
              {"frontier", frontier}};
}

}  // namespace fmsim
