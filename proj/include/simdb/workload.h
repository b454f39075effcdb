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

#ifndef SIMDB_WORKLOAD_H_
#define SIMDB_WORKLOAD_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simdb/units.h"

namespace simdb {

enum class GrowthShape { kLinear, kFrontLoaded, kBackLoaded };

const char* ToString(GrowthShape shape);
GrowthShape ParseGrowthShape(const std::string& text);

// Fraction of peak compile memory reached after `progress` of the work.
// Piecewise linear, monotone, shape(0) = 0, shape(1) = 1.
double GrowthFraction(GrowthShape shape, double progress);

// Closed interval. lo == hi is a point value.
struct Range {
  double lo = 0;
  double hi = 0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct QueryClass {
  std::string name;
  double weight = 1;
  Range compile_s;
  Range peak_compile_bytes;  // sampled log-uniformly
  GrowthShape growth_shape = GrowthShape::kLinear;
  Range exec_s;
  Range exec_grant_bytes;
  Range working_set_bytes;
};

struct ClientModel {
  int clients = 1;
  Range think_s = {0, 5};
  bool retry_on_failure = true;
};

struct WorkloadSpec {
  std::string preset;  // informational; empty for inline class lists
  std::vector<QueryClass> classes;
  ClientModel client;

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

// Ad hoc decision-support mix: compile 10-90 s, execute 30-600 s, compile
// memory heavy enough that a full client population compiling at once asks
// for roughly twice the canonical 4 GB machine.
WorkloadSpec SalesDefault(int clients = 30);

// Small cheap queries that never reach the first gateway threshold.
WorkloadSpec LightDefault(int clients = 4);

WorkloadSpec PresetByName(const std::string& name, int clients);

struct QuerySample {
  std::size_t class_index = 0;
  Seconds compile_s = 0;
  Bytes peak_compile_bytes = 0;
  GrowthShape growth_shape = GrowthShape::kLinear;
  Seconds exec_s = 0;
  Bytes exec_grant_bytes = 0;
  Bytes working_set_bytes = 0;

  // Cumulative compile memory after each compile step of `step_s` seconds.
  // Non-decreasing, ends at the peak, at least one entry.
  std::vector<Bytes> CompileCurve(Seconds step_s) const;

  friend bool operator==(const QuerySample&, const QuerySample&) = default;
};

// Expected peak compile memory of one query drawn from `spec`.
double MeanPeakCompileBytes(const WorkloadSpec& spec);

// Per-client random stream. Seeded from (master seed, client index) so that
// adding clients never perturbs existing streams.
class ClientStream {
 public:
  ClientStream(std::uint64_t master_seed, std::uint64_t client_index);

  QuerySample NextQuery(const WorkloadSpec& spec);
  Seconds NextThink(const ClientModel& client);
  // Uniform in [0, 1).
  double NextUnit();

 private:
  double Uniform(const Range& r);
  double LogUniform(const Range& r);

  std::mt19937_64 engine_;
};

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace simdb

#endif  // SIMDB_WORKLOAD_H_
