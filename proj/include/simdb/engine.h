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

#ifndef SIMDB_ENGINE_H_
#define SIMDB_ENGINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simdb/broker.h"
#include "simdb/config.h"
#include "simdb/event_queue.h"
#include "simdb/gateways.h"
#include "simdb/ledger.h"
#include "simdb/units.h"
#include "simdb/workload.h"

namespace simdb {

enum class EventKind {
  kQueryArrival,
  kCompileStep,
  kCompileDone,
  kExecGrantRetry,
  kExecDone,
  kGatewayTimeoutScan,
  kBrokerTick,
  kClientResubmit,
  kMetricsSample,
};

const char* ToString(EventKind kind);

enum class QueryPhase {
  kQueued,
  kCompiling,
  kAwaitingGrant,
  kExecuting,
  kDone,
  kFailed,
};

enum class FailureReason { kOom, kTimeout };

// base * (1 + io_penalty_k * (1 - min(1, pool / working_set_demand))).
// A zero demand counts as fully covered.
Seconds ExecutionDuration(Seconds base, Bytes pool_usage,
                          Bytes working_set_demand, double io_penalty_k);

// One query of a canned scenario. Arrives once, is never resubmitted.
struct ScriptedQuery {
  std::string label;
  Seconds arrival = 0;
  // Compile memory after each compile step.
  std::vector<Bytes> compile_curve;
  Seconds exec_s = 1;
  Bytes exec_grant_bytes = 0;
  Bytes working_set_bytes = 0;
};

struct SliceCounts {
  Seconds start = 0;
  std::int64_t completed = 0;  // includes degraded
  std::int64_t completed_degraded = 0;
  std::int64_t failed_oom = 0;
  std::int64_t failed_timeout = 0;
};

struct MemoryRow {
  Seconds time = 0;
  std::array<Bytes, kComponentCount> usage{};
  Bytes free = 0;
};

struct GatewayRow {
  Seconds time = 0;
  ActiveCounts counts;
  std::array<std::size_t, kTierCount> queues{};
  Bytes t2 = 0;
  Bytes t3 = 0;
};

struct TraceRow {
  Seconds time = 0;
  std::string task;
  Bytes memory_bytes = 0;
  TaskState state = TaskState::kRunning;
  int held_tiers = 0;
};

struct ReportSummary {
  std::int64_t submitted = 0;
  std::int64_t completed = 0;
  std::int64_t completed_degraded = 0;
  std::int64_t failed_oom = 0;
  std::int64_t failed_oom_compile = 0;
  std::int64_t failed_oom_grant = 0;
  std::int64_t failed_timeout = 0;
  std::int64_t gateway_acquisitions = 0;
  double mean_latency_s = 0;
  double p50_latency_s = 0;
  double p95_latency_s = 0;
  double p99_latency_s = 0;
  std::array<Bytes, kComponentCount> peak_bytes{};
};

// Everything after the warm-up window. Events before warm-up shape the state
// but are not counted.
struct SimulationReport {
  ScenarioConfig config;
  std::string scenario;  // canned scenario name, empty for closed-loop runs
  std::vector<SliceCounts> slices;
  std::vector<MemoryRow> memory;
  std::vector<GatewayRow> gateways;
  std::vector<TraceRow> trace;
  ReportSummary summary;
};

// Deterministic discrete-event model of a DBMS whose buffer pool, execution
// grants, plan cache and query compilations share one physical memory,
// governed by a MemoryBroker and (optionally) the compilation gateways.
class Simulation {
 public:
  using Observer = std::function<void(const Simulation&)>;

  // Validates the config; throws ConfigError.
  explicit Simulation(ScenarioConfig config);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Replaces the closed-loop clients with a fixed list of one-shot queries.
  void SetScript(std::vector<ScriptedQuery> script);
  void SetThrottling(bool enabled);
  void EnableTrace(bool enabled) { trace_enabled_ = enabled; }

  // Runs after every dispatched event.
  void SetObserver(Observer observer) { observer_ = std::move(observer); }
  // Sees every gateway acquire/enqueue/release/timeout.
  void SetGatewayEventSink(GatewaySet::EventSink sink);

  SimulationReport Run();

  Seconds now() const { return now_; }
  const MemoryLedger& ledger() const { return ledger_; }
  const MemoryBroker& broker() const { return *broker_; }
  const GatewaySet& gateways() const { return *gateways_; }
  const ScenarioConfig& config() const { return config_; }
  std::size_t in_flight() const { return queries_.size(); }
  std::size_t compiling() const;
  // Peak compile memory seen so far for a live query's gateway task.
  std::optional<Bytes> PeakCompileBytes(TaskId task) const;
  std::uint64_t events_dispatched() const { return events_dispatched_; }

 private:
  struct Query;
  struct ClientState;
  using Queue = EventQueue<EventKind, std::uint64_t>;

  void Init();
  void Dispatch(const Queue::Event& e);

  void OnArrival(std::uint64_t payload, bool resubmit);
  void StartQuery(Query q);
  void OnCompileStep(std::uint64_t id);
  void OnCompileDone(std::uint64_t id);
  void OnGrantAttempt(std::uint64_t id);
  void OnExecDone(std::uint64_t id);
  void OnTimeoutScan();
  void OnBrokerTick();
  void OnMetricsSample();

  void HandleCompileDenied(Query& q);
  void FinishQuery(Query& q);
  void FailQuery(Query& q, FailureReason reason, bool grant_phase);
  void ResumeTasks(const std::vector<TaskId>& ids);
  void ScheduleNextWork(Query& q);
  void AdjustCaches();
  void RecordAllUsage();
  void Allocate(Component c, Bytes bytes);
  void Free(Component c, Bytes bytes);
  AllocationResult Request(Component c, Bytes bytes);
  void Trace(const Query& q, std::optional<TaskState> state = std::nullopt);
  bool InWindow() const;
  ComponentHandle Handle(Component c) const;

  ScenarioConfig config_;
  bool trace_enabled_ = false;
  bool started_ = false;
  std::optional<std::vector<ScriptedQuery>> script_;
  Observer observer_;
  GatewaySet::EventSink gateway_sink_;

  MemoryLedger ledger_;
  std::unique_ptr<MemoryBroker> broker_;
  std::unique_ptr<GatewaySet> gateways_;
  std::array<ComponentHandle, kComponentCount> handles_;
  Queue events_;
  Seconds now_ = 0;
  std::uint64_t events_dispatched_ = 0;

  std::map<std::uint64_t, Query> queries_;
  std::vector<ClientState> clients_;
  std::uint64_t next_query_id_ = 1;
  Bytes exec_working_demand_ = 0;

  SimulationReport report_;
  std::vector<double> latencies_;
};

// Convenience wrapper: construct, run, return the report.
SimulationReport RunScenario(const ScenarioConfig& config);

}  // namespace simdb

#endif  // SIMDB_ENGINE_H_
