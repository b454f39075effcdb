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

#ifndef SIMDB_CONFIG_H_
#define SIMDB_CONFIG_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simdb/gateways.h"
#include "simdb/units.h"
#include "simdb/workload.h"

namespace simdb {

struct BrokerSettings {
  Seconds tick_s = 1;
  std::size_t window = 16;
  Seconds horizon_s = 1;
  double slack_fraction = 0.05;
  double low_water = 0.9;
};

struct ComponentFloors {
  Bytes buffer_pool = 256 * kMiB;
  Bytes compilation = 0;
  Bytes execution = 0;
  Bytes plan_cache = 0;
};

struct PlanCacheSettings {
  double hit_rate_at_full = 0;
  Bytes working_size_bytes = 64 * kMiB;
  Bytes plan_bytes = 1 * kMiB;
};

struct EngineSettings {
  double io_penalty_k = 2;
  ComponentFloors floors;
  Seconds retry_delay_s = 5;
  Seconds grant_backoff_initial_s = 1;
  Seconds grant_backoff_cap_s = 60;
  Seconds grant_timeout_s = 120;
  Seconds compile_step_s = 1;
  Seconds finalize_s = 2;
  Seconds warmup_s = 600;
  Seconds duration_s = 3600;
  Seconds slice_s = 30;
  PlanCacheSettings plan_cache;
};

struct ScenarioConfig {
  Bytes physical_bytes = 4 * kGiB;
  int cpu_count = 8;
  bool throttling = true;
  std::uint64_t seed = 1;
  BrokerSettings broker;
  // cpu_count above is authoritative; the policy's copy is overwritten.
  GatewayPolicy gateways;
  EngineSettings engine;
  WorkloadSpec workload = SalesDefault();

  // Checks every module-level invariant. Throws ConfigError with the field
  // path of the first violation.
  void Validate() const;
};

// The canonical oversubscribed scenario: 4 GB, 8 CPUs, sales mix, with the
// broker, gateway and engine knobs tuned for it.
ScenarioConfig CanonicalSalesConfig(int clients = 30);

// Light queries on a large machine; no gateway ever engages.
ScenarioConfig NoPressureConfig();

// JSON with every field spelled out (defaults applied). Byte values are
// written as integers.
nlohmann::json ToJson(const ScenarioConfig& config);

// Strict parse: unknown keys are rejected. Missing keys keep defaults from
// the preset (if any) or from ScenarioConfig. Throws ConfigError.
ScenarioConfig FromJson(const nlohmann::json& json);

ScenarioConfig ParseConfigText(const std::string& text);
ScenarioConfig LoadConfigFile(const std::string& path);

// Applies "dotted.path=value" overrides. The value is read as JSON when it
// parses, otherwise as a string; "on"/"off" are accepted for booleans.
ScenarioConfig ApplyOverrides(const ScenarioConfig& config,
                              const std::vector<std::string>& overrides);

}  // namespace simdb

#endif  // SIMDB_CONFIG_H_
