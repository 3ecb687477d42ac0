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

// Acceptance checks A1..A8. Prints one PASS/FAIL line per check and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fmsim/engine.hpp"
#include "fmsim/sweep.hpp"
#include "fmsim/telemetry/server.hpp"
#include "fmsim/trace_io.hpp"
#include "oracles.hpp"
#include "state_machine_checks.hpp"

namespace {

using namespace fmsim;

// Tolerances.
constexpr double kNominalReactionTime = 1.0;  // s
constexpr int kTakeoverSlackTicks = 2;
constexpr double kMaxNominalRuntime = 2.0;  // s, wall clock
constexpr double kStandstillSpeed = 0.05;   // m/s
constexpr double kStandstillLaneError = 0.3;  // m
constexpr double kMrmDistanceRelTol = 0.05;
constexpr double kPinnedDelayThreshold = 1.5;  // s, first departing extra delay
constexpr double kCircleDeviation = 1e-3;     // m
constexpr long kFuzzSteps = 100000;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::optional<double> first_event(const std::vector<TransitionEvent>& events, EventKind k) {
  for (const auto& e : events) {
    if (e.kind == k) return e.t;
  }
  return std::nullopt;
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, spec, rows);
  return os.str();
}

Outcome a1_nominal() {
  Outcome o;
  auto c = table1_scenario();
  c.driver.model = DriverModelKind::Nominal;
  c.driver.reaction_time_s = kNominalReactionTime;
  c.driver.steer_gain = 1.0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(c);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto tor_count = std::count_if(r.events.begin(), r.events.end(),
                                       [](const auto& e) { return e.kind == EventKind::TOR_ISSUED; });
  o.require(r.report.final_mode == AutomationMode::MD,
            "final mode " + std::string(to_string(r.report.final_mode)));
  o.require(!r.report.lane_departure, "lane departure");
  o.require(tor_count == 1, std::to_string(tor_count) + " TOR_ISSUED events");
  const auto tot = r.report.take_over_time_s;
  o.require(tot && *tot >= kNominalReactionTime - 1e-9 &&
                *tot <= kNominalReactionTime + kTakeoverSlackTicks * c.sim.dt_s + 1e-9,
            "take-over time " + (tot ? num(*tot) : std::string("none")));
  o.require(wall < kMaxNominalRuntime, "runtime " + num(wall) + " s");
  if (o.pass) o.detail = "take-over " + num(*tot) + " s, runtime " + num(wall) + " s";
  return o;
}

Outcome a2_mrm() {
  Outcome o;
  auto c = table1_scenario();
  c.driver.model = DriverModelKind::NoResponse;
  SimEngine e(c);
  while (!e.finished()) e.step();

  std::vector<EventKind> order;
  for (const auto& ev : e.events()) {
    if (ev.kind != EventKind::LANE_DEPARTURE && ev.kind != EventKind::SIM_END) order.push_back(ev.kind);
  }
  const std::vector<EventKind> expected{EventKind::TOR_ISSUED,     EventKind::TOR_TIMEOUT,
                                        EventKind::AD_REDUCED_ENTERED, EventKind::MRM_STARTED,
                                        EventKind::MRM_COMPLETED,  EventKind::END_TOR_ISSUED};
  o.require(order == expected, "event order");

  const auto& last = e.trace().back();
  o.require(last.ego.v <= kStandstillSpeed, "final speed " + num(last.ego.v));
  const double lane_error = std::abs(last.ego.d - e.dead_reckoned_lane().d_ref);
  o.require(lane_error <= kStandstillLaneError, "lane error " + num(lane_error));

  const auto t_mrm = first_event(e.events(), EventKind::MRM_STARTED);
  const auto report = e.report();
  if (!t_mrm || !report.mrm_stop_distance_m) {
    o.require(false, "no MRM distance");
    return o;
  }
  const auto start = std::find_if(e.trace().begin(), e.trace().end(),
                                  [&](const auto& s) { return s.t == *t_mrm; });
  const double expected_distance = oracle::braking_distance(start->ego.v, c.tor.a_mrm);
  const double rel = std::abs(*report.mrm_stop_distance_m - expected_distance) / expected_distance;
  o.require(rel <= kMrmDistanceRelTol, "MRM distance " + num(*report.mrm_stop_distance_m) + " vs " +
                                           num(expected_distance));
  if (o.pass) {
    o.detail = "MRM distance " + num(*report.mrm_stop_distance_m) + " m vs " + num(expected_distance) +
               " m, lane error " + num(lane_error) + " m";
  }
  return o;
}

Outcome a3_delay_frontier() {
  Outcome o;
  auto base = table1_scenario();
  base.driver.model = DriverModelKind::DelayedTakeover;
  const SweepSpec spec{{parse_sweep_axis("driver.extra_delay_s=0:6:0.25")}};
  const auto rows = run_sweep(base, spec, 2);
  const auto f = summarize(spec, rows).frontier.at(0);
  o.require(rows.size() == 25, std::to_string(rows.size()) + " points");
  o.require(f.monotonicity == Monotonicity::NonDecreasing || f.monotonicity == Monotonicity::Constant,
            "outcome " + std::string(to_string(f.monotonicity)));
  o.require(!rows.empty() && !rows.front().lane_departure, "departure at zero delay");
  o.require(f.min_hazard_value.has_value(), "no threshold within range");
  if (f.min_hazard_value) {
    o.require(std::abs(*f.min_hazard_value - kPinnedDelayThreshold) < 1e-9,
              "threshold " + num(*f.min_hazard_value) + " s, pinned " + num(kPinnedDelayThreshold) + " s");
  }
  if (o.pass) o.detail = "threshold " + num(*f.min_hazard_value) + " s";
  return o;
}

Outcome a4_gain_frontier() {
  Outcome o;
  auto base = table1_scenario();
  base.driver.model = DriverModelKind::UnderSteer;
  base.driver.reaction_time_s = kNominalReactionTime;
  const SweepSpec spec{{parse_sweep_axis("driver.steer_gain=0:1:0.05")}};
  const auto rows = run_sweep(base, spec, 2);
  const auto f = summarize(spec, rows).frontier.at(0);
  o.require(rows.size() == 21, std::to_string(rows.size()) + " points");
  o.require(f.monotonicity == Monotonicity::NonIncreasing || f.monotonicity == Monotonicity::Constant,
            "outcome " + std::string(to_string(f.monotonicity)));
  o.require(!rows.empty() && rows.front().lane_departure, "no departure at k=0");
  o.require(!rows.empty() && !rows.back().lane_departure, "departure at k=1");
  if (o.pass) o.detail = "largest departing gain " + num(*f.max_hazard_value);
  return o;
}

Outcome a5_determinism() {
  Outcome o;
  auto c = table1_scenario();
  c.driver.model = DriverModelKind::NoResponse;
  c.sim.seed = 20260501;
  o.require(trace_csv(run(c).trace) == trace_csv(run(c).trace), "traces differ between runs");

  auto base = table1_scenario();
  base.driver.model = DriverModelKind::DelayedTakeover;
  const SweepSpec spec{{parse_sweep_axis("driver.extra_delay_s=0:3:0.5"), parse_sweep_axis("driver.reaction_time_s=0.5:1.5:0.5")},
                       SeedPolicy::PerPoint};
  const auto one = sweep_csv(spec, run_sweep(base, spec, 1));
  const auto four = sweep_csv(spec, run_sweep(base, spec, 4));
  o.require(one == four, "sweep depends on worker count");
  if (o.pass) o.detail = "trace and 21-point sweep identical";
  return o;
}

Outcome a6_circle() {
  Outcome o;
  const auto fit = oracle::constant_steer_circle(20.0, 0.05, 20.0, 1e-3, DynamicsParams{});
  o.require(fit.max_radial_deviation <= kCircleDeviation, "deviation " + num(fit.max_radial_deviation) + " m");
  o.detail = o.pass ? "max deviation " + num(fit.max_radial_deviation) + " m from R=" + num(fit.analytic_radius)
                    : o.detail;
  return o;
}

Outcome a7_state_machine() {
  Outcome o;
  const auto c = table1_scenario();
  std::size_t cases = 0;
  auto add = [&](const std::vector<std::string>& failures, const char* what) {
    for (const auto& f : failures) o.require(false, std::string(what) + ": " + f);
  };
  add(checks::exhaustive_table(c, &cases), "table");
  add(checks::illegal_inputs(c), "illegal");
  add(checks::fuzz(c, 7, kFuzzSteps), "fuzz");
  if (o.pass) o.detail = std::to_string(cases) + " table cases, " + std::to_string(kFuzzSteps) + " fuzz steps";
  return o;
}

Outcome a8_serve() {
  Outcome o;
  const auto c = table1_scenario();
  telemetry::ServerOptions opts;
  opts.port = 0;
  opts.realtime_factor = std::numeric_limits<double>::infinity();
  opts.exit_on_end = true;
  telemetry::Server server(c, opts);
  server.listen();
  server.run();
  o.require(server.session().done() && !server.session().failed(), "serve run did not finish");
  o.require(trace_csv(server.session().engine().trace()) == trace_csv(run(c).trace),
            "serve trace differs from headless trace");
  if (o.pass) o.detail = std::to_string(server.session().engine().trace().size()) + " samples identical";
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"A1", a1_nominal},       {"A2", a2_mrm},      {"A3", a3_delay_frontier},
      {"A4", a4_gain_frontier}, {"A5", a5_determinism}, {"A6", a6_circle},
      {"A7", a7_state_machine}, {"A8", a8_serve}};
  int failed = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
