// Copyright 2026 The simdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// simdb: run, compare and trace memory-governance simulations.
//
//   simdb run     --config sales30.json --seed 7 --out out/
//   simdb compare --config sales30.json --seed 7 --out cmp/
//   simdb trace   fig2 --out trace/ [--override throttling=off]
//   simdb config  [--config PATH] [--override KEY=VALUE]...

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "simdb/config.h"
#include "simdb/engine.h"
#include "simdb/error.h"
#include "simdb/report.h"
#include "simdb/scenarios.h"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> overrides;
};

simdb::ScenarioConfig ResolveConfig(const CommonOptions& opts) {
  simdb::ScenarioConfig config = opts.config_path.empty()
                                     ? simdb::CanonicalSalesConfig()
                                     : simdb::LoadConfigFile(opts.config_path);
  std::vector<std::string> overrides = opts.overrides;
  if (opts.seed) overrides.push_back("seed=" + std::to_string(*opts.seed));
  return simdb::ApplyOverrides(config, overrides);
}

void PrintSummary(const std::string& label, const simdb::SimulationReport& r) {
  const simdb::ReportSummary& s = r.summary;
  fmt::print("{}: completed={} (degraded {}) failed_oom={} failed_timeout={} "
             "mean/slice={:.2f}\n",
             label, s.completed, s.completed_degraded, s.failed_oom, s.failed_timeout,
             simdb::MeanSliceThroughput(r));
}

void AddCommon(CLI::App* cmd, CommonOptions& opts, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", opts.config_path, "Scenario configuration (JSON)");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  }
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--override", opts.overrides, "KEY=VALUE, repeatable")
      ->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for DBMS memory brokering and "
               "compilation throttling"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Run one scenario and write reports");
  AddCommon(run, run_opts, true);

  CommonOptions compare_opts;
  CLI::App* compare =
      app.add_subcommand("compare", "Run a scenario with throttling on and off");
  AddCommon(compare, compare_opts, true);

  CommonOptions trace_opts;
  std::string scenario;
  CLI::App* trace = app.add_subcommand("trace", "Run a canned scenario with a per-task trace");
  trace->add_option("scenario", scenario, "Canned scenario name (fig2)")->required();
  AddCommon(trace, trace_opts, false);

  CommonOptions config_opts;
  CLI::App* config_cmd =
      app.add_subcommand("config", "Print the fully resolved configuration");
  AddCommon(config_cmd, config_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const simdb::ScenarioConfig config = ResolveConfig(run_opts);
      const simdb::SimulationReport report = simdb::RunScenario(config);
      simdb::WriteRunFiles(report, run_opts.out);
      PrintSummary(config.throttling ? "throttled" : "unthrottled", report);
    } else if (*compare) {
      const simdb::ScenarioConfig config = ResolveConfig(compare_opts);
      const simdb::CompareResult result = simdb::RunComparison(config);
      const std::filesystem::path out(compare_opts.out);
      simdb::WriteRunFiles(result.throttled, out / "throttled");
      simdb::WriteRunFiles(result.unthrottled, out / "unthrottled");
      const nlohmann::json cmp = simdb::CompareJson(result);
      simdb::WriteTextFile(out / "compare.json", cmp.dump(2) + "\n");
      PrintSummary("throttled", result.throttled);
      PrintSummary("unthrottled", result.unthrottled);
      fmt::print("throughput_ratio={}\n", cmp["throughput_ratio"].dump());
    } else if (*trace) {
      bool throttling = true;
      for (const std::string& o : trace_opts.overrides) {
        if (o == "throttling=off" || o == "throttling=false") {
          throttling = false;
        } else if (o == "throttling=on" || o == "throttling=true") {
          throttling = true;
        } else {
          throw simdb::ConfigError(o, "trace only accepts throttling=on|off");
        }
      }
      const simdb::SimulationReport report = simdb::RunCannedScenario(scenario, throttling);
      const std::filesystem::path out(trace_opts.out);
      std::error_code ec;
      std::filesystem::create_directories(out, ec);
      if (ec) throw std::runtime_error("cannot create " + out.string());
      simdb::WriteTextFile(out / "trace.csv", simdb::TraceCsv(report));
      fmt::print("{}: {} trace rows\n", scenario, report.trace.size());
    } else if (*config_cmd) {
      std::cout << simdb::ToJson(ResolveConfig(config_opts)).dump(2) << "\n";
    }
  } catch (const simdb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const simdb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == simdb::ErrorCode::kUnknownScenario ? kExitConfig : kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
