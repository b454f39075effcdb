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

// Runtime invariant checks hooked into a Simulation through its observer and
// gateway event sink. Shared by the unit tests and the acceptance binary.

#ifndef SIMDB_TESTS_INVARIANTS_H_
#define SIMDB_TESTS_INVARIANTS_H_

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "simdb/engine.h"
#include "simdb/gateways.h"
#include "simdb/ledger.h"

namespace simdb::check {

// True when the directed graph given by `edges` has a cycle.
inline bool HasCycle(const std::vector<std::pair<TaskId, TaskId>>& edges) {
  std::map<TaskId, std::vector<TaskId>> out;
  for (const auto& [from, to] : edges) out[from].push_back(to);
  // 0 unseen, 1 on stack, 2 finished.
  std::map<TaskId, int> color;
  for (const auto& [start, unused] : out) {
    if (color[start] != 0) continue;
    std::vector<std::pair<TaskId, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto it = out.find(node);
      if (it == out.end() || next == it->second.size()) {
        color[node] = 2;
        stack.pop_back();
        continue;
      }
      const TaskId child = it->second[next++];
      if (color[child] == 1) return true;
      if (color[child] == 0) {
        color[child] = 1;
        stack.push_back({child, 0});
      }
    }
  }
  return false;
}

class InvariantMonitor {
 public:
  // Hooks into `sim`; must be called before Run().
  explicit InvariantMonitor(Simulation& sim) : sim_(sim) {
    slots_ = sim.config().gateways.slots();
    sim.SetObserver([this](const Simulation& s) { CheckState(s); });
    sim.SetGatewayEventSink([this](const GatewayEvent& e) { OnEvent(e); });
  }

  InvariantMonitor(const InvariantMonitor&) = delete;
  InvariantMonitor& operator=(const InvariantMonitor&) = delete;

  // A sample of the first breaches; violation_count() has the total.
  const std::vector<std::string>& violations() const { return violations_; }
  std::int64_t violation_count() const { return violation_count_; }
  std::int64_t states_checked() const { return states_checked_; }
  std::int64_t events_seen() const { return events_seen_; }
  // Boundaries at which nothing was compiling.
  std::int64_t quiescent_points() const { return quiescent_points_; }
  // Distinct compilations seen whose peak stays below t1.
  std::size_t bypass_tasks() const { return bypass_tasks_.size(); }

 private:
  void Fail(std::string what) {
    // One run can repeat the same breach thousands of times; keep a sample.
    if (violations_.size() < 20) {
      violations_.push_back(fmt::format("t={} {}", sim_.now(), what));
    }
    ++violation_count_;
  }

  void OnEvent(const GatewayEvent& e) {
    ++events_seen_;
    if (!sim_.config().throttling) {
      Fail("gateway event while throttling is off");
      return;
    }
    int& held = held_[e.task];
    switch (e.kind) {
      case GatewayEvent::Kind::kAcquire:
        if (held != e.tier) {
          Fail(fmt::format("task {} acquired tier {} holding {}", e.task, e.tier, held));
        }
        if (++acquired_[e.tier] > slots_[e.tier]) {
          Fail(fmt::format("tier {} over its {} slots", e.tier, slots_[e.tier]));
        }
        held = e.tier + 1;
        queued_.erase(e.task);
        break;
      case GatewayEvent::Kind::kEnqueue:
        if (held != e.tier) {
          Fail(fmt::format("task {} queued on tier {} holding {}", e.task, e.tier, held));
        }
        queued_[e.task] = e.tier;
        break;
      case GatewayEvent::Kind::kRelease:
        if (held != e.tier + 1) {
          Fail(fmt::format("task {} released tier {} holding {}", e.task, e.tier, held));
        }
        --acquired_[e.tier];
        held = e.tier;
        break;
      case GatewayEvent::Kind::kTimeout: {
        const auto it = queued_.find(e.task);
        if (it == queued_.end() || it->second != e.tier) {
          Fail(fmt::format("task {} timed out on tier {} it was not queued on",
                           e.task, e.tier));
        } else {
          queued_.erase(it);
        }
        break;
      }
    }
  }

  void CheckState(const Simulation& s) {
    ++states_checked_;
    CheckLedger(s);
    CheckGateways(s);
  }

  void CheckLedger(const Simulation& s) {
    const MemoryLedger& ledger = s.ledger();
    Bytes sum = 0;
    for (Component c : kAllComponents) {
      const Bytes u = ledger.usage(c);
      if (u < 0) Fail(fmt::format("{} usage negative", ToString(c)));
      sum += u;
    }
    if (ledger.free() < 0) Fail("free memory negative");
    if (sum + ledger.free() != ledger.physical()) {
      Fail(fmt::format("usage {} + free {} != physical {}", sum, ledger.free(),
                       ledger.physical()));
    }
    if (ledger.usage(Component::kBufferPool) < s.config().engine.floors.buffer_pool) {
      Fail("buffer pool below its floor");
    }
    Bytes compiling_bytes = 0;
    for (const TaskView& t : s.gateways().Tasks()) {
      if (!IsTerminal(t.state)) compiling_bytes += t.memory_bytes;
    }
    if (compiling_bytes != ledger.usage(Component::kCompilation)) {
      Fail(fmt::format("compilation usage {} but live tasks hold {}",
                       ledger.usage(Component::kCompilation), compiling_bytes));
    }
    if (s.compiling() == 0) {
      ++quiescent_points_;
      if (ledger.usage(Component::kCompilation) != 0) {
        Fail("compilation memory left over with nothing compiling");
      }
    }
  }

  void CheckGateways(const Simulation& s) {
    const GatewaySet& gw = s.gateways();
    const Thresholds t = gw.thresholds();
    if (!(t.t1 < t.t2 && t.t2 < t.t3)) {
      Fail(fmt::format("thresholds out of order {} {} {}", t.t1, t.t2, t.t3));
    }
    std::array<std::set<TaskId>, kTierCount> holders;
    std::array<std::set<TaskId>, kTierCount> queued;
    for (int k = 0; k < kTierCount; ++k) {
      const auto h = gw.Holders(k);
      const auto q = gw.Queue(k);
      holders[k].insert(h.begin(), h.end());
      queued[k].insert(q.begin(), q.end());
      if (static_cast<int>(h.size()) > slots_[k]) {
        Fail(fmt::format("tier {} has {} holders for {} slots", k, h.size(), slots_[k]));
      }
      if (!s.config().throttling && (!h.empty() || !q.empty())) {
        Fail("gateways engaged while throttling is off");
      }
      for (TaskId id : h) CheckNotBypassed(s, id, t.t1);
      for (TaskId id : q) CheckNotBypassed(s, id, t.t1);
    }
    for (const TaskView& v : gw.Tasks()) {
      const auto peak = s.PeakCompileBytes(v.id);
      if (peak && *peak < t.t1) bypass_tasks_.insert(v.id);
      for (int k = 0; k < kTierCount; ++k) {
        if ((holders[k].count(v.id) != 0) != (k < v.held_tiers)) {
          Fail(fmt::format("task {} holds tiers out of prefix order", v.id));
        }
        const bool should_queue = v.state == TaskState::kBlocked && v.blocked_tier == k;
        if ((queued[k].count(v.id) != 0) != should_queue) {
          Fail(fmt::format("task {} queue membership wrong on tier {}", v.id, k));
        }
      }
      if (v.state == TaskState::kBlocked && v.blocked_tier != v.held_tiers) {
        Fail(fmt::format("task {} blocked on tier {} holding {}", v.id,
                         v.blocked_tier, v.held_tiers));
      }
      const auto it = held_.find(v.id);
      const int seen = it == held_.end() ? 0 : it->second;
      if (seen != v.held_tiers) {
        Fail(fmt::format("task {} holds {} tiers but events say {}", v.id,
                         v.held_tiers, seen));
      }
    }
    if (HasCycle(gw.WaitForEdges())) Fail("cycle in the gateway wait-for graph");
  }

  void CheckNotBypassed(const Simulation& s, TaskId id, Bytes t1) {
    const auto peak = s.PeakCompileBytes(id);
    if (peak && *peak < t1) {
      Fail(fmt::format("task {} peaking at {} below t1 {} touched a gateway", id,
                       *peak, t1));
    }
  }

  Simulation& sim_;
  std::array<int, kTierCount> slots_{};
  std::array<int, kTierCount> acquired_{};
  std::map<TaskId, int> held_;
  std::map<TaskId, int> queued_;
  std::vector<std::string> violations_;
  std::int64_t violation_count_ = 0;
  std::int64_t states_checked_ = 0;
  std::int64_t events_seen_ = 0;
  std::int64_t quiescent_points_ = 0;
  std::set<TaskId> bypass_tasks_;
};

}  // namespace simdb::check

#endif  // SIMDB_TESTS_INVARIANTS_H_
