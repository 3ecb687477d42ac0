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

// Exhaustive and randomised checks of the automation state machine, shared
// by the unit tests and the acceptance binary. Each returns a list of
// human-readable failures; empty means pass.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fmsim/automation.hpp"
#include "oracles.hpp"

namespace fmsim::checks {

inline AutomationMode to_mode(oracle::Mode m) { return static_cast<AutomationMode>(static_cast<int>(m)); }

inline std::vector<std::string> event_names(const std::vector<EventKind>& events) {
  std::vector<std::string> out;
  for (auto e : events) out.emplace_back(to_string(e));
  return out;
}

/// Every row of the oracle table, with consistent timers, must give exactly
/// the oracle's next mode and events.
inline std::vector<std::string> exhaustive_table(const ScenarioConfig& c, std::size_t* cases = nullptr) {
  std::vector<std::string> failures;
  std::size_t n = 0;
  for (const auto& row : oracle::transition_table()) {
    ++n;
    const auto mode = to_mode(row.mode);
    ModeTimers timers;
    double v = 20.0;
    switch (mode) {
      case AutomationMode::TOR:
        timers.tor_elapsed = row.timer_reached ? c.tor.tor_timeout_s : 0.5 * c.tor.tor_timeout_s;
        break;
      case AutomationMode::AD_REDUCED:
        timers.tor_elapsed = c.tor.tor_timeout_s + 0.1;
        timers.ad_reduced_elapsed =
            row.timer_reached ? c.tor.ad_reduced_duration_s : 0.5 * c.tor.ad_reduced_duration_s;
        break;
      case AutomationMode::MRM:
        timers.tor_elapsed = 10.0;
        v = row.timer_reached ? 0.04 : 20.0;
        break;
      default:
        break;
    }
    const std::string label = std::string(to_string(mode)) + " valid=" + std::to_string(row.perception_valid) +
                              " takeover=" + std::to_string(row.takeover) +
                              " reached=" + std::to_string(row.timer_reached);
    try {
      const auto r = transition(mode, row.perception_valid, row.takeover, timers, v, c);
      if (r.mode != to_mode(row.next) || event_names(r.events) != row.events) {
        failures.push_back(label + ": got " + std::string(to_string(r.mode)));
      }
    } catch (const std::exception& e) {
      failures.push_back(label + ": threw " + e.what());
    }
  }
  if (cases) *cases = n;
  return failures;
}

/// Inconsistent inputs must raise IllegalState and nothing else.
inline std::vector<std::string> illegal_inputs(const ScenarioConfig& c) {
  std::vector<std::string> failures;
  struct Case {
    const char* name;
    int mode;
    ModeTimers timers;
    double v;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<Case> cases = {
      {"undefined mode", 99, {}, 10.0},
      {"negative mode", -1, {}, 10.0},
      {"AD with tor timer", 0, {1.0, std::nullopt}, 10.0},
      {"AD with dwell timer", 0, {std::nullopt, 1.0}, 10.0},
      {"TOR without timer", 1, {}, 10.0},
      {"TOR with dwell timer", 1, {1.0, 1.0}, 10.0},
      {"AD_REDUCED without dwell timer", 2, {5.0, std::nullopt}, 10.0},
      {"negative timer", 1, {-1.0, std::nullopt}, 10.0},
      {"NaN timer", 2, {5.0, nan}, 10.0},
      {"negative speed", 3, {}, -1.0},
      {"NaN speed", 4, {}, nan},
  };
  for (const auto& k : cases) {
    for (bool pv : {false, true}) {
      for (bool tk : {false, true}) {
        try {
          transition(static_cast<AutomationMode>(k.mode), pv, tk, k.timers, k.v, c);
          failures.push_back(std::string(k.name) + ": no error");
        } catch (const IllegalState&) {
        } catch (const std::exception& e) {
          failures.push_back(std::string(k.name) + ": wrong error " + e.what());
        }
      }
    }
  }
  return failures;
}

inline bool allowed_edge(AutomationMode from, AutomationMode to) {
  using M = AutomationMode;
  static const std::set<std::pair<M, M>> edges = {
      {M::AD, M::AD},         {M::AD, M::TOR},          {M::TOR, M::TOR},
      {M::TOR, M::MD},        {M::TOR, M::AD_REDUCED},  {M::AD_REDUCED, M::AD_REDUCED},
      {M::AD_REDUCED, M::MD}, {M::AD_REDUCED, M::MRM},  {M::MRM, M::MRM},
      {M::MRM, M::MD},        {M::MRM, M::STANDSTILL},  {M::MD, M::MD},
      {M::STANDSTILL, M::STANDSTILL}};
  return edges.count({from, to}) > 0;
}

/// Random input sequences driven through the state machine with timers kept
/// the way the engine keeps them. Absorbing modes are
/// held for a random while, then the machine restarts from AD.
inline std::vector<std::string> fuzz(const ScenarioConfig& c, std::uint64_t seed, long steps) {
  std::vector<std::string> failures;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution invalid(0.05);
  std::bernoulli_distribution press(0.01);
  std::bernoulli_distribution restart(0.05);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  const double dt = 0.01;

  AutomationMode mode = AutomationMode::AD;
  std::optional<double> tor;
  std::optional<double> dwell;
  double v = 30.0;
  for (long i = 0; i < steps && failures.size() < 10; ++i) {
    ModeTimers timers{mode == AutomationMode::AD ? std::nullopt : tor,
                      mode == AutomationMode::TOR ? std::nullopt : dwell};
    v = mode == AutomationMode::MRM ? std::max(0.0, v - 0.3) : speed(rng);
    TransitionResult r;
    try {
      r = transition(mode, !invalid(rng), press(rng), timers, v, c);
    } catch (const std::exception& e) {
      failures.push_back("step " + std::to_string(i) + " in " + std::string(to_string(mode)) + ": " + e.what());
      break;
    }
    if (!is_valid(r.mode)) failures.push_back("step " + std::to_string(i) + ": undefined mode");
    if (!allowed_edge(mode, r.mode)) {
      failures.push_back("step " + std::to_string(i) + ": edge " + std::string(to_string(mode)) + " -> " +
                         std::string(to_string(r.mode)));
    }
    if (mode == AutomationMode::AD && r.mode == AutomationMode::MRM) failures.push_back("AD jumped to MRM");

    if (r.mode == AutomationMode::TOR && mode == AutomationMode::AD) tor = 0.0;
    if (r.mode == AutomationMode::AD_REDUCED && mode == AutomationMode::TOR) dwell = 0.0;
    mode = r.mode;
    if (tor) *tor += dt;
    if (dwell) *dwell += dt;
    if ((mode == AutomationMode::MD || mode == AutomationMode::STANDSTILL) && restart(rng)) {
      mode = AutomationMode::AD;
      tor.reset();
      dwell.reset();
    }
  }
  return failures;
}

}  // namespace fmsim::checks
