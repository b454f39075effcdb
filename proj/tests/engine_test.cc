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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "invariants.h"
#include "simdb/config.h"
#include "simdb/error.h"
#include "simdb/report.h"

namespace simdb {
namespace {

ScenarioConfig ShortCanonical(std::uint64_t seed, bool throttling) {
  ScenarioConfig c = CanonicalSalesConfig();
  c.seed = seed;
  c.throttling = throttling;
  c.engine.warmup_s = 0;
  c.engine.duration_s = 900;
  return c;
}

ScriptedQuery Tiny(std::string label, Seconds arrival) {
  ScriptedQuery q;
  q.label = std::move(label);
  q.arrival = arrival;
  q.compile_curve = {1 * kMiB, 2 * kMiB};
  q.exec_s = 10;
  q.exec_grant_bytes = 1 * kMiB;
  return q;
}

ScenarioConfig ScriptConfig() {
  ScenarioConfig c;
  c.physical_bytes = 1 * kGiB;
  c.engine.warmup_s = 0;
  c.engine.duration_s = 100;
  c.engine.slice_s = 10;
  return c;
}

TEST(InvariantMonitorTest, CycleDetection) {
  EXPECT_FALSE(check::HasCycle({}));
  EXPECT_FALSE(check::HasCycle({{1, 2}, {2, 3}, {1, 3}}));
  EXPECT_TRUE(check::HasCycle({{1, 2}, {2, 1}}));
  EXPECT_TRUE(check::HasCycle({{5, 6}, {1, 2}, {2, 3}, {3, 1}}));
  EXPECT_TRUE(check::HasCycle({{4, 4}}));
}

TEST(ExecutionDurationTest, FullCoverageRunsAtBase) {
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 0, 0, 2), 100);
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 80, 80, 2), 100);
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 500, 80, 2), 100);
}

TEST(ExecutionDurationTest, PartialCoverageSlowsDown) {
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 50, 100, 2), 200);
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 0, 100, 2), 300);
  EXPECT_NEAR(ExecutionDuration(100, 1, 1'000'000, 2), 300, 1e-3);
  EXPECT_DOUBLE_EQ(ExecutionDuration(100, 25, 100, 8), 700);
}

TEST(SimulationTest, SingleTinyQueryRunsCompileThenExec) {
  Simulation sim(ScriptConfig());
  sim.SetScript({Tiny("a", 0)});
  const SimulationReport r = sim.Run();
  EXPECT_EQ(r.summary.submitted, 1);
  EXPECT_EQ(r.summary.completed, 1);
  EXPECT_EQ(r.summary.failed_oom + r.summary.failed_timeout, 0);
  EXPECT_EQ(r.summary.gateway_acquisitions, 0);
  // Two one-second compile steps, then ten seconds of execution.
  EXPECT_DOUBLE_EQ(r.summary.mean_latency_s, 12);
  EXPECT_EQ(r.summary.peak_bytes[static_cast<int>(Component::kCompilation)], 2 * kMiB);
  EXPECT_EQ(r.slices.size(), 10u);
  EXPECT_EQ(r.slices[1].completed, 1);
  EXPECT_EQ(sim.in_flight(), 0u);
  EXPECT_EQ(sim.ledger().usage(Component::kCompilation), 0);
  EXPECT_EQ(sim.ledger().usage(Component::kExecution), 0);
}

TEST(SimulationTest, WarmupEventsAreNotCounted) {
  ScenarioConfig c = ScriptConfig();
  c.engine.warmup_s = 20;
  Simulation sim(c);
  sim.SetScript({Tiny("early", 0), Tiny("late", 30)});
  const SimulationReport r = sim.Run();
  EXPECT_EQ(r.summary.submitted, 1);
  EXPECT_EQ(r.summary.completed, 1);
  EXPECT_EQ(r.slices.size(), 8u);
  EXPECT_DOUBLE_EQ(r.slices.front().start, 20);
}

TEST(SimulationTest, EmptyScriptOnlyTicks) {
  Simulation sim(ScriptConfig());
  sim.SetScript({});
  const SimulationReport r = sim.Run();
  EXPECT_EQ(r.summary.submitted, 0);
  EXPECT_EQ(r.summary.completed, 0);
  EXPECT_EQ(r.memory.size(), 10u);
  EXPECT_EQ(r.gateways.size(), 10u);
}

TEST(SimulationTest, RunTwiceThrows) {
  Simulation sim(ScriptConfig());
  sim.SetScript({});
  sim.Run();
  EXPECT_THROW(sim.Run(), std::logic_error);
  EXPECT_THROW(sim.SetScript({}), std::logic_error);
  EXPECT_THROW(sim.SetThrottling(false), Error);
}

TEST(SimulationTest, InvalidConfigRejected) {
  ScenarioConfig c = ScriptConfig();
  c.engine.duration_s = -1;
  EXPECT_THROW(Simulation{c}, ConfigError);
}

// The deadline is reached by float accumulation (three 0.1 s steps); the
// retry loop must still stop there instead of rescheduling forever.
TEST(SimulationTest, UnsatisfiableGrantFailsAtItsDeadline) {
  ScenarioConfig c = ScriptConfig();
  c.engine.compile_step_s = 0.1;
  c.engine.grant_backoff_initial_s = 0.1;
  c.engine.grant_backoff_cap_s = 0.1;
  c.engine.grant_timeout_s = 0.7;
  ScriptedQuery q = Tiny("huge", 0);
  q.compile_curve = {1 * kMiB, 2 * kMiB, 3 * kMiB};
  q.exec_grant_bytes = 900 * kMiB;  // more than physical minus the pool floor
  Simulation sim(c);
  sim.SetScript({q});
  const SimulationReport r = sim.Run();
  EXPECT_EQ(r.summary.failed_oom, 1);
  EXPECT_EQ(r.summary.failed_oom_grant, 1);
  EXPECT_EQ(r.summary.completed, 0);
  EXPECT_LT(sim.events_dispatched(), 1000u);
}

TEST(SimulationTest, ThrottlingOffNeverTouchesGateways) {
  Simulation sim(ShortCanonical(3, false));
  check::InvariantMonitor monitor(sim);
  const SimulationReport r = sim.Run();
  EXPECT_EQ(monitor.violation_count(), 0) << monitor.violations().front();
  EXPECT_EQ(monitor.events_seen(), 0);
  EXPECT_EQ(r.summary.gateway_acquisitions, 0);
  EXPECT_EQ(r.summary.completed_degraded, 0);
  for (const GatewayRow& g : r.gateways) {
    EXPECT_EQ(g.counts, ActiveCounts{});
  }
}

TEST(SimulationTest, OversubscribedUnthrottledRunHitsOom) {
  ScenarioConfig c = CanonicalSalesConfig();
  c.throttling = false;
  c.engine.warmup_s = 300;
  c.engine.duration_s = 1200;
  const SimulationReport r = RunScenario(c);
  EXPECT_GE(r.summary.failed_oom, 1);
  EXPECT_GT(r.summary.failed_oom_compile, 0);
}

TEST(SimulationTest, ThrottledRunEngagesGateways) {
  const SimulationReport r = RunScenario(ShortCanonical(1, true));
  EXPECT_GT(r.summary.gateway_acquisitions, 0);
  bool queued = false;
  for (const GatewayRow& g : r.gateways) {
    for (std::size_t n : g.queues) queued |= n > 0;
    EXPECT_LT(g.t2, g.t3);
  }
  EXPECT_TRUE(queued);
}

class InvariantRunTest : public ::testing::TestWithParam<std::tuple<int, bool>> {};

TEST_P(InvariantRunTest, NoViolations) {
  const auto [seed, throttling] = GetParam();
  Simulation sim(ShortCanonical(seed, throttling));
  check::InvariantMonitor monitor(sim);
  sim.Run();
  EXPECT_GT(monitor.states_checked(), 1000);
  EXPECT_EQ(monitor.violation_count(), 0)
      << (monitor.violations().empty() ? "" : monitor.violations().front());
  if (throttling) {
    EXPECT_GT(monitor.events_seen(), 0);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, InvariantRunTest,
                         ::testing::Combine(::testing::Range(1, 6), ::testing::Bool()));

// Random one-shot scripts on a small machine: every query ends one way or
// another and leaves no compilation memory behind.
TEST(SimulationTest, RandomScriptsDrainCompletely) {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 40; ++round) {
    ScenarioConfig c;
    c.physical_bytes = 1 * kGiB;
    c.cpu_count = 1 + static_cast<int>(rng() % 2);
    c.throttling = round % 2 == 0;
    c.engine.warmup_s = 0;
    c.engine.duration_s = 20000;
    c.engine.slice_s = 100;
    std::vector<ScriptedQuery> script;
    const int n = 5 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      ScriptedQuery q;
      q.label = "s" + std::to_string(i);
      q.arrival = static_cast<double>(rng() % 60);
      const int steps = 1 + static_cast<int>(rng() % 30);
      const Bytes peak = static_cast<Bytes>(1 + rng() % 300) * kMiB;
      for (int k = 1; k <= steps; ++k) q.compile_curve.push_back(peak * k / steps);
      q.exec_s = 1 + static_cast<double>(rng() % 100);
      q.exec_grant_bytes = static_cast<Bytes>(rng() % 200) * kMiB;
      q.working_set_bytes = static_cast<Bytes>(rng() % 200) * kMiB;
      script.push_back(std::move(q));
    }
    Simulation sim(c);
    sim.SetScript(script);
    check::InvariantMonitor monitor(sim);
    const SimulationReport r = sim.Run();
    SCOPED_TRACE(round);
    EXPECT_EQ(monitor.violation_count(), 0)
        << (monitor.violations().empty() ? "" : monitor.violations().front());
    EXPECT_EQ(sim.in_flight(), 0u);
    EXPECT_EQ(sim.ledger().usage(Component::kCompilation), 0);
    EXPECT_EQ(sim.ledger().usage(Component::kExecution), 0);
    EXPECT_EQ(r.summary.completed + r.summary.failed_oom + r.summary.failed_timeout, n);
    EXPECT_GT(monitor.quiescent_points(), 0);
  }
}

TEST(SimulationTest, PlanCacheHitsSkipCompilation) {
  ScenarioConfig base = NoPressureConfig();
  base.engine.duration_s = 1200;
  ScenarioConfig cached = base;
  cached.engine.plan_cache.hit_rate_at_full = 1.0;
  cached.engine.plan_cache.working_size_bytes = 8 * kMiB;
  const SimulationReport without = RunScenario(base);
  const SimulationReport with = RunScenario(cached);
  EXPECT_GT(with.summary.completed, without.summary.completed);
  EXPECT_LE(with.summary.peak_bytes[static_cast<int>(Component::kPlanCache)], 8 * kMiB);
}

TEST(SimulationTest, IdenticalInputsGiveIdenticalReports) {
  const ScenarioConfig c = ShortCanonical(9, true);
  const SimulationReport a = RunScenario(c);
  const SimulationReport b = RunScenario(c);
  EXPECT_EQ(SummaryJson(a).dump(), SummaryJson(b).dump());
  EXPECT_EQ(ThroughputCsv(a), ThroughputCsv(b));
  EXPECT_EQ(MemoryCsv(a), MemoryCsv(b));
  EXPECT_EQ(GatewaysCsv(a), GatewaysCsv(b));
}

TEST(SimulationTest, SeedChangesTheRun) {
  const SimulationReport a = RunScenario(ShortCanonical(1, true));
  const SimulationReport b = RunScenario(ShortCanonical(2, true));
  EXPECT_NE(MemoryCsv(a), MemoryCsv(b));
}

TEST(SimulationTest, NoPressureRunsMatchAcrossModes) {
  ScenarioConfig on = NoPressureConfig();
  ScenarioConfig off = on;
  off.throttling = false;
  const SimulationReport a = RunScenario(on);
  const SimulationReport b = RunScenario(off);
  EXPECT_GT(a.summary.completed, 0);
  EXPECT_EQ(a.summary.gateway_acquisitions, 0);
  EXPECT_EQ(ThroughputCsv(a), ThroughputCsv(b));
  EXPECT_EQ(MemoryCsv(a), MemoryCsv(b));
  EXPECT_EQ(GatewaysCsv(a), GatewaysCsv(b));
  nlohmann::json sa = SummaryJson(a);
  nlohmann::json sb = SummaryJson(b);
  sa["config"].erase("throttling");
  sb["config"].erase("throttling");
  EXPECT_EQ(sa.dump(), sb.dump());
}

}  // namespace
}  // namespace simdb
