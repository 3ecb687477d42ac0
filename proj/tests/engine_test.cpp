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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "fmsim/engine.hpp"
#include "fmsim/trace_io.hpp"
#include "oracles.hpp"
#include "state_machine_checks.hpp"

namespace fmsim {
namespace {

ScenarioConfig with_driver(DriverModelKind kind) {
  auto c = table1_scenario();
  c.driver.model = kind;
  return c;
}

std::vector<EventKind> kinds(const std::vector<TransitionEvent>& events) {
  std::vector<EventKind> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::LANE_DEPARTURE) out.push_back(e.kind);
  }
  return out;
}

TEST(SimEngine, DeterministicTraces) {
  auto c = table1_scenario();
  c.sim.seed = 1234;
  EXPECT_EQ(trace_csv(run(c).trace), trace_csv(run(c).trace));
}

TEST(SimEngine, SeedChangesNoise) {
  auto a = table1_scenario();
  auto b = a;
  b.sim.seed = 99;
  EXPECT_NE(trace_csv(run(a).trace), trace_csv(run(b).trace));
}

TEST(SimEngine, FirstStepIsQuiet) {
  SimEngine e(table1_scenario());
  const auto r = e.step();
  EXPECT_EQ(r.sample.t, 0.0);
  EXPECT_EQ(r.sample.mode, AutomationMode::AD);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(e.step_count(), 1);
}

TEST(SimEngine, SingleStepHorizon) {
  auto c = table1_scenario();
  c.sim.t_end_s = c.sim.dt_s;
  const auto r = run(c);
  ASSERT_EQ(r.trace.size(), 1u);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, EventKind::SIM_END);
  EXPECT_EQ(r.events[0].detail, "t_end");
}

TEST(SimEngine, StepAfterFinishThrows) {
  auto c = table1_scenario();
  c.sim.t_end_s = c.sim.dt_s;
  SimEngine e(c);
  e.step();
  ASSERT_TRUE(e.finished());
  EXPECT_THROW(e.step(), IllegalState);
}

TEST(SimEngine, TorIssuedAtZoneEntry) {
  const auto c = table1_scenario();
  const auto r = run(c);
  const auto tor = std::find_if(r.events.begin(), r.events.end(),
                                [](const auto& e) { return e.kind == EventKind::TOR_ISSUED; });
  ASSERT_NE(tor, r.events.end());
  const auto& at = *std::find_if(r.trace.begin(), r.trace.end(), [&](const auto& s) { return s.t == tor->t; });
  EXPECT_FALSE(at.perception_valid);
  EXPECT_EQ(at.mode, AutomationMode::TOR);
  EXPECT_GE(at.ego.s, c.markings[0].start_s);
  EXPECT_LT(at.ego.s - c.markings[0].start_s, at.ego.v * c.sim.dt_s + 1e-9);
  // The ego is mid lane change when the markings vanish.
  EXPECT_TRUE(at.in_lane_change);
}

TEST(SimEngine, EventsLandOnSampleTimes) {
  for (auto kind : {DriverModelKind::Nominal, DriverModelKind::NoResponse}) {
    const auto r = run(with_driver(kind));
    for (const auto& e : r.events) {
      const bool found =
          std::any_of(r.trace.begin(), r.trace.end(), [&](const auto& s) { return s.t == e.t; });
      EXPECT_TRUE(found) << to_string(e.kind) << " at " << e.t;
    }
    EXPECT_TRUE(std::is_sorted(r.events.begin(), r.events.end(),
                               [](const auto& a, const auto& b) { return a.t < b.t; }));
  }
}

TEST(SimEngine, NominalEventSequence) {
  const auto r = run(table1_scenario());
  const std::vector<EventKind> expected{EventKind::TOR_ISSUED, EventKind::TAKEOVER, EventKind::SIM_END};
  EXPECT_EQ(kinds(r.events), expected);
  EXPECT_EQ(r.events.back().detail, "maneuver_complete");
  EXPECT_EQ(r.trace.back().mode, AutomationMode::MD);
}

TEST(SimEngine, NoResponseEventSequence) {
  const auto r = run(with_driver(DriverModelKind::NoResponse));
  const std::vector<EventKind> expected{EventKind::TOR_ISSUED,  EventKind::TOR_TIMEOUT,
                                        EventKind::AD_REDUCED_ENTERED, EventKind::MRM_STARTED,
                                        EventKind::MRM_COMPLETED, EventKind::END_TOR_ISSUED,
                                        EventKind::SIM_END};
  EXPECT_EQ(kinds(r.events), expected);
  EXPECT_EQ(r.events.back().detail, "standstill");
}

TEST(SimEngine, ModeSequenceUsesAllowedEdges) {
  for (auto kind : {DriverModelKind::Nominal, DriverModelKind::NoResponse, DriverModelKind::UnderSteer,
                    DriverModelKind::DelayedTakeover}) {
    const auto r = run(with_driver(kind));
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      ASSERT_TRUE(checks::allowed_edge(r.trace[i - 1].mode, r.trace[i].mode))
          << to_string(r.trace[i - 1].mode) << " -> " << to_string(r.trace[i].mode);
    }
  }
}

TEST(SimEngine, NoResponseStopsInDeadReckonedLane) {
  const auto c = with_driver(DriverModelKind::NoResponse);
  SimEngine e(c);
  while (!e.finished()) e.step();
  const auto& events = e.events();
  auto at = [&](EventKind k) {
    return std::find_if(events.begin(), events.end(), [k](const auto& ev) { return ev.kind == k; })->t;
  };
  const auto& trace = e.trace();
  EXPECT_LE(trace.back().ego.v, c.tor.standstill_speed);
  EXPECT_LE(std::abs(trace.back().ego.d - e.dead_reckoned_lane().d_ref), 0.3);

  const double t_mrm = at(EventKind::MRM_STARTED);
  const auto start = std::find_if(trace.begin(), trace.end(), [&](const auto& s) { return s.t == t_mrm; });
  const double expected = oracle::braking_distance(start->ego.v, c.tor.a_mrm);
  const auto report = e.report();
  ASSERT_TRUE(report.mrm_stop_distance_m);
  EXPECT_NEAR(*report.mrm_stop_distance_m, expected, 0.05 * expected);
}

TEST(SimEngine, TorHoldsLastSteering) {
  const auto r = run(with_driver(DriverModelKind::NoResponse));
  std::size_t i = 1;
  while (r.trace[i].mode != AutomationMode::TOR) ++i;
  const double held = r.trace[i - 1].cmd.delta_cmd;
  for (; r.trace[i].mode == AutomationMode::TOR; ++i) ASSERT_EQ(r.trace[i].cmd.delta_cmd, held);
}

TEST(SimEngine, DriverCommandsAfterTakeover) {
  const auto r = run(table1_scenario());
  for (const auto& s : r.trace) {
    if (s.mode == AutomationMode::MD) {
      ASSERT_EQ(s.cmd.source, CommandSource::Driver);
    }
    if (s.mode == AutomationMode::AD) {
      ASSERT_EQ(s.cmd.source, CommandSource::System);
    }
  }
}

TEST(SimEngine, TorPanelAndAudio) {
  const auto r = run(with_driver(DriverModelKind::NoResponse));
  for (const auto& s : r.trace) {
    if (s.mode == AutomationMode::TOR) {
      ASSERT_EQ(s.dvi.panel, DviPanel::TOR);
      ASSERT_TRUE(s.dvi.audio_alert);
    }
  }
}

TEST(SimEngine, ShoulderStopEndsOnShoulder) {
  auto c = with_driver(DriverModelKind::NoResponse);
  c.tor.mrm_strategy = MrmStrategy::ShoulderStop;
  const auto r = run(c);
  EXPECT_EQ(r.trace.back().mode, AutomationMode::STANDSTILL);
  EXPECT_LE(r.trace.back().ego.v, c.tor.standstill_speed);
  EXPECT_NEAR(r.trace.back().ego.d, -0.5 * c.road.shoulder_width_m, 0.05);
  // The drift under held steering may depart; the move to the shoulder may not.
  for (const auto& s : r.trace) {
    if (s.mode == AutomationMode::MRM || s.mode == AutomationMode::STANDSTILL) {
      ASSERT_FALSE(detect_lane_departure(s, c.vehicle)) << "t=" << s.t;
    }
  }
}

TEST(SimEngine, ExternalDriverTakesOverOnPress) {
  auto c = with_driver(DriverModelKind::External);
  SimEngine e(c);
  while (e.mode() != AutomationMode::TOR) e.step();
  e.set_external_input({true, 0.0, 0.0});
  e.step();
  EXPECT_EQ(e.mode(), AutomationMode::MD);
}

TEST(SimEngine, ExternalPressBeforeTorIsIgnored) {
  SimEngine e(with_driver(DriverModelKind::External));
  e.set_external_input({true, 0.0, 0.0});
  for (int i = 0; i < 10; ++i) e.step();
  EXPECT_EQ(e.mode(), AutomationMode::AD);
}

}  // namespace
}  // namespace fmsim
