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

#ifndef SIMDB_SCENARIOS_H_
#define SIMDB_SCENARIOS_H_

#include <string>
#include <vector>

#include "simdb/config.h"
#include "simdb/engine.h"

namespace simdb {

// Three foreground compilations (Q1 fast-growing and large, Q2 slower and
// smaller, Q3 late) competing with four background compilations B1..B4 for
// one CPU's worth of gateway slots under static thresholds 10/40/80 MB.
ScenarioConfig Fig2Config();
std::vector<ScriptedQuery> Fig2Script();

std::vector<std::string> CannedScenarioNames();

// Runs a canned scenario with tracing on. Throws Error(kUnknownScenario).
SimulationReport RunCannedScenario(const std::string& name, bool throttling = true);

}  // namespace simdb

#endif  // SIMDB_SCENARIOS_H_
