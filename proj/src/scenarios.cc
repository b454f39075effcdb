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

#include "simdb/scenarios.h"

#include <algorithm>

#include "simdb/error.h"

namespace simdb {

namespace {

// rate MB per step, capped at `cap_mb`, for `steps` steps.
std::vector<Bytes> Ramp(int steps, Bytes rate_mb, Bytes cap_mb) {
  std::vector<Bytes> curve;
  curve.reserve(steps);
  for (int k = 1; k <= steps; ++k) curve.push_back(std::min(rate_mb * k, cap_mb) * kMiB);
  return curve;
}

}  // namespace

ScenarioConfig Fig2Config() {
  ScenarioConfig c;
  c.physical_bytes = 4 * kGiB;
  c.cpu_count = 1;
  c.gateways.cpu_count = 1;
  c.gateways.dynamic_thresholds = false;
  c.gateways.t1_static_bytes = 10 * kMiB;
  c.gateways.static_t2_bytes = 40 * kMiB;
  c.gateways.static_t3_bytes = 80 * kMiB;
  c.engine.floors.buffer_pool = 64 * kMiB;
  c.engine.warmup_s = 0;
  c.engine.duration_s = 120;
  c.engine.slice_s = 10;
  c.workload = LightDefault(1);
  return c;
}

std::vector<ScriptedQuery> Fig2Script() {
  auto q = [](std::string label, Seconds arrival, std::vector<Bytes> curve) {
    return ScriptedQuery{std::move(label), arrival, std::move(curve), 5, kMiB, kMiB};
  };
  return {
      // Background: take every small slot at t=2; B4 also holds the medium
      // gateway from t=8 to t=25.
      q("B1", 0, Ramp(10, 5, 20)),
      q("B2", 0, Ramp(60, 5, 20)),
      q("B3", 0, Ramp(60, 5, 20)),
      q("B4", 0, Ramp(25, 5, 45)),
      q("Q1", 0, Ramp(25, 4, 100)),
      q("Q2", 0, Ramp(15, 2, 30)),
      q("Q3", 6, Ramp(10, 2, 20)),
  };
}

std::vector<std::string> CannedScenarioNames() { return {"fig2"}; }

SimulationReport RunCannedScenario(const std::string& name, bool throttling) {
  if (name != "fig2") {
    throw Error(ErrorCode::kUnknownScenario, "unknown scenario '" + name + "'");
  }
  ScenarioConfig config = Fig2Config();
  config.throttling = throttling;
  Simulation sim(config);
  sim.SetScript(Fig2Script());
  sim.EnableTrace(true);
  SimulationReport report = sim.Run();
  report.scenario = name;
  return report;
}

}  // namespace simdb
