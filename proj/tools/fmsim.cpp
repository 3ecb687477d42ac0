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

// fmsim: run, sweep or serve take-over scenarios.
//
// Exit codes: 0 success, 1 error, 2 lane departure with --fail-on-hazard.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fmsim/engine.hpp"
#include "fmsim/scenario_io.hpp"
#include "fmsim/sweep.hpp"
#include "fmsim/telemetry/server.hpp"
#include "fmsim/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitHazard = 2;

struct ScenarioOptions {
  std::string scenario = "table1";
  std::optional<std::string> driver;
  std::optional<double> delay;
  std::optional<double> gain;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  bool lenient = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "scenario file, or 'table1' for the built-in one")
        ->capture_default_str();
    cmd->add_option("--driver", driver, "nominal|delayed|understeer|noresponse|external");
    cmd->add_option("--delay", delay, "extra take-over delay of the delayed driver [s]");
    cmd->add_option("--gain", gain, "steering gain of the under-steering driver, 0..1");
    cmd->add_option("--tau", tau, "driver reaction time [s]");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_flag("--lenient", lenient, "warn about unknown scenario keys instead of failing");
  }

  fmsim::ScenarioConfig load() const {
    std::vector<std::string> warnings;
    auto c = fmsim::resolve_scenario(scenario, lenient ? fmsim::ParseMode::Lenient : fmsim::ParseMode::Strict,
                                     &warnings);
    for (const auto& w : warnings) spdlog::warn("{}", w);
    if (driver) {
      const auto kind = fmsim::driver_model_from_string(*driver);
      if (!kind) throw fmsim::ValidationError("driver", "unknown driver model '" + *driver + "'");
      c.driver.model = *kind;
    }
    if (delay) c.driver.extra_delay_s = *delay;
    if (gain) c.driver.steer_gain = *gain;
    if (tau) c.driver.reaction_time_s = *tau;
    if (seed) c.sim.seed = *seed;
    fmsim::validate(c);
    return c;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fmsim::Error("cannot write '" + path + "'");
  return out;
}

void write_report(const std::string& path, const fmsim::MetricsReport& r) {
  auto out = open_output(path);
  out << fmsim::report_to_json(r).dump(2) << '\n';
}

void log_report(const fmsim::MetricsReport& r) {
  spdlog::info("final mode {}, lane departure {}, take-over time {}", fmsim::to_string(r.final_mode),
               r.lane_departure, r.take_over_time_s ? std::to_string(*r.take_over_time_s) : "-");
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("fmsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("FMSIM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

fmsim::telemetry::Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Foreseeable-misuse take-over simulation harness"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario");
  ScenarioOptions run_opts;
  run_opts.add_to(run_cmd);
  std::string run_out;
  std::string run_trace;
  std::string run_events;
  bool run_fail_on_hazard = false;
  run_cmd->add_option("--out", run_out, "report JSON path (default: stdout)");
  run_cmd->add_option("--trace", run_trace, "trace CSV path");
  run_cmd->add_option("--events", run_events, "event log CSV path");
  run_cmd->add_flag("--fail-on-hazard", run_fail_on_hazard, "exit 2 on lane departure");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "simulate a grid of parameter values");
  ScenarioOptions sweep_opts;
  sweep_opts.add_to(sweep_cmd);
  std::vector<std::string> sweep_params;
  unsigned sweep_workers = std::max(1u, std::thread::hardware_concurrency());
  std::string seed_policy = "fixed";
  std::string sweep_out;
  std::string sweep_summary;
  bool sweep_fail_on_hazard = false;
  sweep_cmd->add_option("--param", sweep_params, "path=from:to:step, up to three times")->required();
  sweep_cmd->add_option("--workers", sweep_workers, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed-policy", seed_policy, "fixed|per-point")
      ->check(CLI::IsMember({"fixed", "per-point"}))
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "result CSV path (default: stdout)");
  sweep_cmd->add_option("--summary", sweep_summary, "summary JSON path (default: next to --out)");
  sweep_cmd->add_flag("--fail-on-hazard", sweep_fail_on_hazard, "exit 2 if any point departs its lane");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run live with WebSocket telemetry and input");
  ScenarioOptions serve_opts;
  serve_opts.add_to(serve_cmd);
  fmsim::telemetry::ServerOptions server_opts;
  std::string realtime = "1.0";
  std::string serve_out;
  std::string serve_trace;
  serve_cmd->add_option("--port", server_opts.port, "TCP port, 0 for any")->capture_default_str();
  serve_cmd->add_option("--bind", server_opts.bind_address, "listen address")->capture_default_str();
  serve_cmd->add_option("--realtime", realtime, "simulated seconds per wall second, 'inf' for batch")
      ->capture_default_str();
  serve_cmd->add_flag("--exit-on-end", server_opts.exit_on_end, "stop serving when the run ends");
  serve_cmd->add_option("--out", serve_out, "report JSON path, written on exit");
  serve_cmd->add_option("--trace", serve_trace, "trace CSV path, written on exit");

  // scenario
  auto* scenario_cmd = app.add_subcommand("scenario", "print a scenario in canonical form");
  std::string scenario_name = "table1";
  std::string scenario_out;
  bool scenario_lenient = false;
  scenario_cmd->add_option("name", scenario_name, "scenario file or 'table1'")->capture_default_str();
  scenario_cmd->add_option("--out", scenario_out, "output path (default: stdout)");
  scenario_cmd->add_flag("--lenient", scenario_lenient, "ignore unknown keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run_cmd) {
      const auto config = run_opts.load();
      const auto result = fmsim::run(config);
      if (!run_trace.empty()) {
        auto out = open_output(run_trace);
        fmsim::write_trace_csv(out, result.trace);
      }
      if (!run_events.empty()) {
        auto out = open_output(run_events);
        fmsim::write_events_csv(out, result.events);
      }
      if (run_out.empty()) {
        std::cout << fmsim::report_to_json(result.report).dump(2) << '\n';
      } else {
        write_report(run_out, result.report);
      }
      log_report(result.report);
      return run_fail_on_hazard && result.report.lane_departure ? kExitHazard : kExitOk;
    }

    if (*sweep_cmd) {
      const auto base = sweep_opts.load();
      fmsim::SweepSpec spec;
      for (const auto& p : sweep_params) spec.axes.push_back(fmsim::parse_sweep_axis(p));
      spec.seed_policy = seed_policy == "fixed" ? fmsim::SeedPolicy::Fixed : fmsim::SeedPolicy::PerPoint;
      fmsim::validate(spec);

      const auto rows = fmsim::run_sweep(base, spec, sweep_workers);
      const auto summary = fmsim::summarize(spec, rows);
      if (sweep_out.empty()) {
        fmsim::write_sweep_csv(std::cout, spec, rows);
      } else {
        auto out = open_output(sweep_out);
        fmsim::write_sweep_csv(out, spec, rows);
      }
      std::string summary_path = sweep_summary;
      if (summary_path.empty() && !sweep_out.empty()) {
        summary_path = std::filesystem::path(sweep_out).replace_extension(".summary.json").string();
      }
      if (!summary_path.empty()) {
        auto out = open_output(summary_path);
        out << fmsim::summary_to_json(spec, summary).dump(2) << '\n';
      }
      spdlog::info("{} points, {} with lane departure", summary.points, summary.hazardous_points);
      return sweep_fail_on_hazard && summary.hazardous_points > 0 ? kExitHazard : kExitOk;
    }

    if (*serve_cmd) {
      server_opts.realtime_factor = fmsim::telemetry::parse_realtime_factor(realtime);
      fmsim::telemetry::Server server(serve_opts.load(), server_opts);
      server.listen();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.run();
      g_server = nullptr;

      const auto& session = server.session();
      if (!serve_trace.empty()) {
        auto out = open_output(serve_trace);
        fmsim::write_trace_csv(out, session.engine().trace());
      }
      if (!serve_out.empty()) write_report(serve_out, session.engine().report());
      return session.failed() ? kExitError : kExitOk;
    }

    if (*scenario_cmd) {
      const auto c = fmsim::resolve_scenario(
          scenario_name, scenario_lenient ? fmsim::ParseMode::Lenient : fmsim::ParseMode::Strict);
      if (scenario_out.empty()) {
        std::cout << fmsim::write_scenario(c);
      } else {
        auto out = open_output(scenario_out);
        out << fmsim::write_scenario(c);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
