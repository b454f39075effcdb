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

#include "simdb/engine.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "simdb/error.h"

namespace simdb {

const char* ToString(EventKind kind) {
  switch (kind) {
    case EventKind::kQueryArrival:
      return "QUERY_ARRIVAL";
    case EventKind::kCompileStep:
      return "COMPILE_STEP";
    case EventKind::kCompileDone:
      return "COMPILE_DONE";
    case EventKind::kExecGrantRetry:
      return "EXEC_GRANT_RETRY";
    case EventKind::kExecDone:
      return "EXEC_DONE";
    case EventKind::kGatewayTimeoutScan:
      return "GATEWAY_TIMEOUT_SCAN";
    case EventKind::kBrokerTick:
      return "BROKER_TICK";
    case EventKind::kClientResubmit:
      return "CLIENT_RESUBMIT";
    case EventKind::kMetricsSample:
      return "METRICS_SAMPLE";
  }
  return "?";
}

Seconds ExecutionDuration(Seconds base, Bytes pool_usage,
                          Bytes working_set_demand, double io_penalty_k) {
  double coverage = 1;
  if (working_set_demand > 0) {
    coverage = std::min(1.0, static_cast<double>(pool_usage) /
                                 static_cast<double>(working_set_demand));
  }
  return base * (1 + io_penalty_k * (1 - coverage));
}

struct Simulation::Query {
  std::uint64_t id = 0;
  int client = -1;
  int attempt = 1;
  Seconds first_submit = 0;
  Seconds submit = 0;
  std::string label;
  std::vector<Bytes> curve;
  Seconds exec_s = 0;
  Bytes grant_bytes = 0;
  Bytes working_set_bytes = 0;
  QueryPhase phase = QueryPhase::kQueued;
  std::size_t steps_done = 0;
  Bytes compile_bytes = 0;
  bool degraded = false;
  bool finalizing = false;
  Seconds grant_wait_start = 0;
  Seconds backoff = 0;
};

struct Simulation::ClientState {
  ClientStream stream;
  int attempt = 0;
  Seconds first_submit = 0;
};

Simulation::Simulation(ScenarioConfig config)
    : config_(std::move(config)), ledger_(config_.physical_bytes) {
  config_.gateways.cpu_count = config_.cpu_count;
  config_.Validate();
}

Simulation::~Simulation() = default;

void Simulation::SetScript(std::vector<ScriptedQuery> script) {
  if (started_) throw std::logic_error("script set after the run started");
  script_ = std::move(script);
}

void Simulation::SetThrottling(bool enabled) {
  if (started_) {
    throw Error(ErrorCode::kInvalidConfig, "throttling toggled mid-run");
  }
  config_.throttling = enabled;
}

void Simulation::SetGatewayEventSink(GatewaySet::EventSink sink) {
  gateway_sink_ = std::move(sink);
}

std::size_t Simulation::compiling() const {
  std::size_t n = 0;
  for (const auto& [id, q] : queries_) n += q.phase == QueryPhase::kCompiling;
  return n;
}

std::optional<Bytes> Simulation::PeakCompileBytes(TaskId task) const {
  auto it = queries_.find(task);
  if (it == queries_.end() || it->second.curve.empty()) return std::nullopt;
  return it->second.curve.back();
}

ComponentHandle Simulation::Handle(Component c) const {
  return handles_[static_cast<std::size_t>(c)];
}

bool Simulation::InWindow() const {
  return now_ >= config_.engine.warmup_s && now_ < config_.engine.duration_s;
}

void Simulation::Init() {
  const EngineSettings& eng = config_.engine;
  BrokerConfig bc;
  bc.physical_bytes = config_.physical_bytes;
  bc.slack_fraction = config_.broker.slack_fraction;
  bc.window = config_.broker.window;
  bc.horizon_s = config_.broker.horizon_s;
  bc.low_water = config_.broker.low_water;
  broker_ = std::make_unique<MemoryBroker>(bc);
  handles_[0] = broker_->Register("buffer_pool", true, eng.floors.buffer_pool);
  handles_[1] = broker_->Register("compilation", false, eng.floors.compilation);
  handles_[2] = broker_->Register("execution", false, eng.floors.execution);
  handles_[3] = broker_->Register("plan_cache", true, eng.floors.plan_cache);

  gateways_ = std::make_unique<GatewaySet>(
      config_.gateways, broker_->Target(Handle(Component::kCompilation)),
      config_.throttling);
  gateways_->SetEventSink([this](const GatewayEvent& e) {
    if (e.kind == GatewayEvent::Kind::kAcquire && InWindow()) {
      ++report_.summary.gateway_acquisitions;
    }
    if (gateway_sink_) gateway_sink_(e);
  });
  // Thresholds track the target in both modes so that the gateway report
  // only differs where a gateway actually engaged.
  GatewaySet* gw = gateways_.get();
  broker_->SetTargetListener(Handle(Component::kCompilation),
                             [gw](Bytes target) { gw->RecomputeThresholds(target); });

  ledger_.Allocate(Component::kBufferPool, eng.floors.buffer_pool);
  ledger_.Allocate(Component::kPlanCache, eng.floors.plan_cache);
  RecordAllUsage();

  report_ = SimulationReport{};
  report_.config = config_;
  const Seconds window = eng.duration_s - eng.warmup_s;
  const auto slices = static_cast<std::size_t>(std::ceil(window / eng.slice_s - 1e-9));
  for (std::size_t i = 0; i < slices; ++i) {
    const Seconds start = eng.warmup_s + static_cast<double>(i) * eng.slice_s;
    report_.slices.push_back({start, 0, 0, 0, 0});
    events_.Schedule(start, EventKind::kMetricsSample, 0);
  }

  events_.Schedule(0, EventKind::kBrokerTick, 0);
  if (config_.throttling) {
    events_.Schedule(config_.broker.tick_s, EventKind::kGatewayTimeoutScan, 0);
  }

  if (script_) {
    for (std::size_t i = 0; i < script_->size(); ++i) {
      events_.Schedule((*script_)[i].arrival, EventKind::kQueryArrival, i);
    }
  } else {
    const WorkloadSpec& w = config_.workload;
    clients_.reserve(w.client.clients);
    for (int i = 0; i < w.client.clients; ++i) {
      clients_.push_back(ClientState{ClientStream(config_.seed, i), 0, 0});
      const Seconds first = clients_.back().stream.NextThink(w.client);
      events_.Schedule(first, EventKind::kQueryArrival, i);
    }
  }
}

SimulationReport Simulation::Run() {
  if (started_) throw std::logic_error("Simulation::Run called twice");
  started_ = true;
  Init();
  while (!events_.empty() && events_.top().time < config_.engine.duration_s) {
    const Queue::Event e = events_.Pop();
    now_ = e.time;
    Dispatch(e);
    ++events_dispatched_;
    if (InWindow()) {
      for (std::size_t i = 0; i < kComponentCount; ++i) {
        report_.summary.peak_bytes[i] =
            std::max(report_.summary.peak_bytes[i], ledger_.usage(kAllComponents[i]));
      }
    }
    if (observer_) observer_(*this);
  }

  ReportSummary& s = report_.summary;
  for (const SliceCounts& slice : report_.slices) {
    s.completed += slice.completed;
    s.completed_degraded += slice.completed_degraded;
    s.failed_oom += slice.failed_oom;
    s.failed_timeout += slice.failed_timeout;
  }
  if (!latencies_.empty()) {
    std::sort(latencies_.begin(), latencies_.end());
    const double sum = std::accumulate(latencies_.begin(), latencies_.end(), 0.0);
    s.mean_latency_s = sum / static_cast<double>(latencies_.size());
    auto rank = [&](double p) {
      const auto n = latencies_.size();
      auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
      idx = std::clamp<std::size_t>(idx, 1, n);
      return latencies_[idx - 1];
    };
    s.p50_latency_s = rank(0.50);
    s.p95_latency_s = rank(0.95);
    s.p99_latency_s = rank(0.99);
  }
  return std::move(report_);
}

void Simulation::Dispatch(const Queue::Event& e) {
  switch (e.kind) {
    case EventKind::kQueryArrival:
      OnArrival(e.payload, false);
      break;
    case EventKind::kClientResubmit:
      OnArrival(e.payload, true);
      break;
    case EventKind::kCompileStep:
      OnCompileStep(e.payload);
      break;
    case EventKind::kCompileDone:
      OnCompileDone(e.payload);
      break;
    case EventKind::kExecGrantRetry:
      OnGrantAttempt(e.payload);
      break;
    case EventKind::kExecDone:
      OnExecDone(e.payload);
      break;
    case EventKind::kGatewayTimeoutScan:
      OnTimeoutScan();
      break;
    case EventKind::kBrokerTick:
      OnBrokerTick();
      break;
    case EventKind::kMetricsSample:
      OnMetricsSample();
      break;
  }
}

void Simulation::OnArrival(std::uint64_t payload, bool resubmit) {
  Query q;
  q.id = next_query_id_++;
  q.submit = now_;
  bool plan_cache_hit = false;
  if (script_) {
    const ScriptedQuery& s = (*script_)[payload];
    q.label = s.label;
    q.curve = s.compile_curve;
    q.exec_s = s.exec_s;
    q.grant_bytes = s.exec_grant_bytes;
    q.working_set_bytes = s.working_set_bytes;
    q.first_submit = now_;
  } else {
    ClientState& client = clients_[payload];
    q.client = static_cast<int>(payload);
    if (resubmit) {
      ++client.attempt;
    } else {
      client.attempt = 1;
      client.first_submit = now_;
    }
    q.attempt = client.attempt;
    q.first_submit = client.first_submit;
    q.label = "q" + std::to_string(q.id);
    const QuerySample sample = client.stream.NextQuery(config_.workload);
    q.curve = sample.CompileCurve(config_.engine.compile_step_s);
    q.exec_s = sample.exec_s;
    q.grant_bytes = sample.exec_grant_bytes;
    q.working_set_bytes = sample.working_set_bytes;
    const PlanCacheSettings& pc = config_.engine.plan_cache;
    const double fill =
        pc.working_size_bytes > 0
            ? std::min(1.0, static_cast<double>(ledger_.usage(Component::kPlanCache)) /
                                static_cast<double>(pc.working_size_bytes))
            : 0.0;
    plan_cache_hit = client.stream.NextUnit() < pc.hit_rate_at_full * fill;
  }
  if (InWindow()) ++report_.summary.submitted;

  const std::uint64_t id = q.id;
  Query& stored = queries_.emplace(id, std::move(q)).first->second;
  if (plan_cache_hit) {
    stored.phase = QueryPhase::kAwaitingGrant;
    stored.grant_wait_start = now_;
    stored.backoff = config_.engine.grant_backoff_initial_s;
    OnGrantAttempt(id);
    return;
  }
  stored.phase = QueryPhase::kCompiling;
  gateways_->AddTask(id);
  Trace(stored);
  events_.Schedule(now_ + config_.engine.compile_step_s, EventKind::kCompileStep, id);
}

void Simulation::OnCompileStep(std::uint64_t id) {
  auto it = queries_.find(id);
  if (it == queries_.end()) return;
  Query& q = it->second;
  if (q.phase != QueryPhase::kCompiling || q.finalizing) return;
  if (q.steps_done >= q.curve.size()) return;

  if (config_.throttling) {
    // The broker says compilation is over budget and this task would not fit
    // in what is left: settle for the best plan found so far.
    const ComponentHandle comp = Handle(Component::kCompilation);
    if (broker_->NotificationOf(comp) == Notification::kMustShrink) {
      const Bytes headroom = std::max<Bytes>(
          0, broker_->Target(comp) - ledger_.usage(Component::kCompilation));
      const Bytes remaining = q.curve.back() - q.compile_bytes;
      if (remaining > headroom && gateways_->OomImminent(id)) {
        q.finalizing = true;
        q.degraded = true;
        Trace(q);
        events_.Schedule(now_ + config_.engine.finalize_s, EventKind::kCompileDone, id);
        return;
      }
    }
  }

  const Bytes next = q.curve[q.steps_done];
  const Bytes delta = next - q.compile_bytes;
  if (Request(Component::kCompilation, delta) == AllocationResult::kDenied) {
    HandleCompileDenied(q);
    return;
  }
  q.compile_bytes = next;
  ++q.steps_done;
  gateways_->SetProgress(id, static_cast<double>(q.steps_done) /
                                 static_cast<double>(q.curve.size()));
  const AllocationOutcome outcome = gateways_->OnAllocation(id, next, now_);
  Trace(q);
  if (outcome.blocked) return;
  ScheduleNextWork(q);
}

void Simulation::ScheduleNextWork(Query& q) {
  if (q.steps_done >= q.curve.size()) {
    events_.Schedule(now_, EventKind::kCompileDone, q.id);
  } else {
    events_.Schedule(now_ + config_.engine.compile_step_s, EventKind::kCompileStep, q.id);
  }
}

void Simulation::HandleCompileDenied(Query& q) {
  if (config_.throttling && gateways_->OomImminent(q.id)) {
    q.finalizing = true;
    q.degraded = true;
    Trace(q);
    events_.Schedule(now_ + config_.engine.finalize_s, EventKind::kCompileDone, q.id);
    return;
  }
  FailQuery(q, FailureReason::kOom, false);
}

void Simulation::OnCompileDone(std::uint64_t id) {
  auto it = queries_.find(id);
  if (it == queries_.end()) return;
  Query& q = it->second;
  if (q.phase != QueryPhase::kCompiling) return;

  Free(Component::kCompilation, q.compile_bytes);
  q.compile_bytes = 0;
  const std::vector<TaskId> unblocked = gateways_->Complete(id, now_);
  Trace(q, TaskState::kDone);
  gateways_->Forget(id);

  const PlanCacheSettings& pc = config_.engine.plan_cache;
  const Bytes cached = ledger_.usage(Component::kPlanCache);
  if (pc.plan_bytes > 0 && cached + pc.plan_bytes <= pc.working_size_bytes &&
      broker_->NotificationOf(Handle(Component::kPlanCache)) !=
          Notification::kMustShrink &&
      ledger_.free() >= pc.plan_bytes) {
    Allocate(Component::kPlanCache, pc.plan_bytes);
  }

  q.phase = QueryPhase::kAwaitingGrant;
  q.grant_wait_start = now_;
  q.backoff = config_.engine.grant_backoff_initial_s;
  ResumeTasks(unblocked);
  OnGrantAttempt(id);
}

void Simulation::OnGrantAttempt(std::uint64_t id) {
  auto it = queries_.find(id);
  if (it == queries_.end()) return;
  Query& q = it->second;
  if (q.phase != QueryPhase::kAwaitingGrant) return;

  const EngineSettings& eng = config_.engine;
  if (Request(Component::kExecution, q.grant_bytes) == AllocationResult::kDenied) {
    const Seconds deadline = q.grant_wait_start + eng.grant_timeout_s;
    if (now_ >= deadline) {
      FailQuery(q, FailureReason::kOom, true);
      return;
    }
    const Seconds retry = std::min(now_ + q.backoff, deadline);
    q.backoff = std::min(q.backoff * 2, eng.grant_backoff_cap_s);
    events_.Schedule(retry, EventKind::kExecGrantRetry, id);
    return;
  }
  q.phase = QueryPhase::kExecuting;
  exec_working_demand_ += q.working_set_bytes;
  const Seconds duration =
      ExecutionDuration(q.exec_s, ledger_.usage(Component::kBufferPool),
                        exec_working_demand_, eng.io_penalty_k);
  events_.Schedule(now_ + duration, EventKind::kExecDone, id);
}

void Simulation::OnExecDone(std::uint64_t id) {
  auto it = queries_.find(id);
  if (it == queries_.end()) return;
  Query& q = it->second;
  Free(Component::kExecution, q.grant_bytes);
  exec_working_demand_ -= q.working_set_bytes;
  q.phase = QueryPhase::kDone;
  FinishQuery(q);
}

void Simulation::FinishQuery(Query& q) {
  if (InWindow()) {
    SliceCounts& slice = report_.slices[static_cast<std::size_t>(
        (now_ - config_.engine.warmup_s) / config_.engine.slice_s)];
    ++slice.completed;
    if (q.degraded) ++slice.completed_degraded;
    latencies_.push_back(now_ - q.first_submit);
  }
  const int client = q.client;
  queries_.erase(q.id);
  if (client >= 0) {
    ClientState& c = clients_[client];
    c.attempt = 0;
    events_.Schedule(now_ + c.stream.NextThink(config_.workload.client),
                     EventKind::kQueryArrival, static_cast<std::uint64_t>(client));
  }
}

void Simulation::FailQuery(Query& q, FailureReason reason, bool grant_phase) {
  std::vector<TaskId> unblocked;
  if (q.phase == QueryPhase::kCompiling) {
    if (reason == FailureReason::kOom) unblocked = gateways_->AbortOom(q.id, now_);
    Free(Component::kCompilation, q.compile_bytes);
    q.compile_bytes = 0;
    Trace(q, reason == FailureReason::kOom ? TaskState::kAbortedOom
                                           : TaskState::kAbortedTimeout);
    gateways_->Forget(q.id);
  }
  q.phase = QueryPhase::kFailed;
  if (InWindow()) {
    SliceCounts& slice = report_.slices[static_cast<std::size_t>(
        (now_ - config_.engine.warmup_s) / config_.engine.slice_s)];
    if (reason == FailureReason::kOom) {
      ++slice.failed_oom;
      ++(grant_phase ? report_.summary.failed_oom_grant
                     : report_.summary.failed_oom_compile);
    } else {
      ++slice.failed_timeout;
    }
  }
  const int client = q.client;
  queries_.erase(q.id);
  if (client >= 0) {
    ClientState& c = clients_[client];
    if (config_.workload.client.retry_on_failure) {
      events_.Schedule(now_ + config_.engine.retry_delay_s, EventKind::kClientResubmit,
                       static_cast<std::uint64_t>(client));
    } else {
      c.attempt = 0;
      events_.Schedule(now_ + c.stream.NextThink(config_.workload.client),
                       EventKind::kQueryArrival, static_cast<std::uint64_t>(client));
    }
  }
  ResumeTasks(unblocked);
}

void Simulation::ResumeTasks(const std::vector<TaskId>& ids) {
  for (TaskId id : ids) {
    auto it = queries_.find(id);
    if (it == queries_.end()) continue;
    Trace(it->second);
    ScheduleNextWork(it->second);
  }
}

void Simulation::OnTimeoutScan() {
  const TimeoutScan scan = gateways_->CheckTimeouts(now_);
  for (TaskId id : scan.timed_out) {
    auto it = queries_.find(id);
    if (it != queries_.end()) FailQuery(it->second, FailureReason::kTimeout, false);
  }
  ResumeTasks(scan.unblocked);
  events_.Schedule(now_ + config_.broker.tick_s, EventKind::kGatewayTimeoutScan, 0);
}

void Simulation::OnBrokerTick() {
  RecordAllUsage();
  broker_->Tick(now_);
  AdjustCaches();
  RecordAllUsage();
  events_.Schedule(now_ + config_.broker.tick_s, EventKind::kBrokerTick, 0);
}

void Simulation::AdjustCaches() {
  const ComponentFloors& floors = config_.engine.floors;
  {
    const ComponentHandle h = Handle(Component::kBufferPool);
    const Bytes target = broker_->Target(h);
    const Bytes usage = ledger_.usage(Component::kBufferPool);
    const Bytes desired =
        std::max(floors.buffer_pool, std::min(exec_working_demand_, target));
    if (usage > desired) {
      ledger_.Free(Component::kBufferPool, usage - desired);
    } else if (usage < desired &&
               broker_->NotificationOf(h) == Notification::kCanGrow) {
      ledger_.Allocate(Component::kBufferPool,
                       std::min(desired - usage, ledger_.free()));
    }
  }
  {
    const ComponentHandle h = Handle(Component::kPlanCache);
    const Bytes usage = ledger_.usage(Component::kPlanCache);
    const Bytes keep = std::max(floors.plan_cache, broker_->Target(h));
    if (broker_->NotificationOf(h) == Notification::kMustShrink && usage > keep) {
      ledger_.Free(Component::kPlanCache, usage - keep);
    }
  }
}

void Simulation::OnMetricsSample() {
  MemoryRow m;
  m.time = now_;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    m.usage[i] = ledger_.usage(kAllComponents[i]);
  }
  m.free = ledger_.free();
  report_.memory.push_back(m);

  GatewayRow g;
  g.time = now_;
  g.counts = gateways_->Counts();
  g.queues = gateways_->QueueLengths();
  const Thresholds t = gateways_->thresholds();
  g.t2 = t.t2;
  g.t3 = t.t3;
  report_.gateways.push_back(g);
}

void Simulation::RecordAllUsage() {
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    broker_->RecordUsage(handles_[i], ledger_.usage(kAllComponents[i]), now_);
  }
}

void Simulation::Allocate(Component c, Bytes bytes) {
  ledger_.Allocate(c, bytes);
  broker_->RecordUsage(Handle(c), ledger_.usage(c), now_);
}

void Simulation::Free(Component c, Bytes bytes) {
  ledger_.Free(c, bytes);
  broker_->RecordUsage(Handle(c), ledger_.usage(c), now_);
}

AllocationResult Simulation::Request(Component c, Bytes bytes) {
  const ComponentFloors& floors = config_.engine.floors;
  const std::array<ShrinkLimit, 2> order = {
      ShrinkLimit{Component::kPlanCache,
                  std::max(floors.plan_cache,
                           broker_->Target(Handle(Component::kPlanCache)))},
      ShrinkLimit{Component::kBufferPool,
                  std::max(floors.buffer_pool,
                           broker_->Target(Handle(Component::kBufferPool)))},
  };
  const AllocationResult r = TryAllocate(ledger_, c, bytes, order);
  if (r == AllocationResult::kGrantedAfterShrink) {
    RecordAllUsage();
  } else if (r == AllocationResult::kGranted) {
    broker_->RecordUsage(Handle(c), ledger_.usage(c), now_);
  }
  return r;
}

void Simulation::Trace(const Query& q, std::optional<TaskState> state) {
  if (!trace_enabled_) return;
  TraceRow row;
  row.time = now_;
  row.task = q.label;
  row.memory_bytes = q.compile_bytes;
  const auto view = gateways_->Task(q.id);
  row.state = state ? *state : (view ? view->state : TaskState::kRunning);
  row.held_tiers = view && !state ? view->held_tiers : 0;
  report_.trace.push_back(row);
}

SimulationReport RunScenario(const ScenarioConfig& config) {
  Simulation sim(config);
  return sim.Run();
}

}  // namespace simdb
