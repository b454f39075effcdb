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

#ifndef SIMDB_REPORT_H_
#define SIMDB_REPORT_H_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "simdb/engine.h"

namespace simdb {

inline constexpr int kFormatVersion = 1;

// slice_start_s,completed,completed_degraded,failed_oom,failed_timeout
std::string ThroughputCsv(const SimulationReport& report);
// time_s,buffer_pool,compilation,execution,plan_cache,free
std::string MemoryCsv(const SimulationReport& report);
// time_s,S,M,L,queue0,queue1,queue2,t2_bytes,t3_bytes
std::string GatewaysCsv(const SimulationReport& report);
// time_s,task_id,memory_bytes,state,held_tiers
std::string TraceCsv(const SimulationReport& report);

// "-" for none, otherwise the held tier digits: "0", "01", "012".
std::string HeldTiersLabel(int held_tiers);

nlohmann::json SummaryJson(const SimulationReport& report);

// Mean successful completions per reported slice.
double MeanSliceThroughput(const SimulationReport& report);

struct CompareResult {
  SimulationReport throttled;
  SimulationReport unthrottled;
};

// Same scenario and seed, throttling on and off.
CompareResult RunComparison(const ScenarioConfig& config);

nlohmann::json CompareJson(const CompareResult& result);

// Writes summary.json, throughput.csv, memory.csv and gateways.csv (plus
// trace.csv when the report carries a trace). Throws std::runtime_error on
// I/O failure.
void WriteRunFiles(const SimulationReport& report, const std::filesystem::path& dir);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace simdb

#endif  // SIMDB_REPORT_H_
