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

#include "simdb/gateways.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "simdb/error.h"

namespace simdb {

const char* ToString(TaskState state) {
  switch (state) {
    case TaskState::kRunning:
      return "RUNNING";
    case TaskState::kBlocked:
      return "BLOCKED";
    case TaskState::kAbortedTimeout:
      return "ABORTED_TIMEOUT";
    case TaskState::kAbortedOom:
      return "ABORTED_OOM";
    case TaskState::kFinalizeBestPlan:
      return "FINALIZE_BEST_PLAN";
    case TaskState::kDone:
      return "DONE";
  }
  return "?";
}

bool IsTerminal(TaskState state) {
  return state == TaskState::kDone || state == TaskState::kAbortedTimeout ||
         state == TaskState::kAbortedOom;
}

void GatewayPolicy::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidPolicy, "gateway policy: " + what);
  };
  if (cpu_count < 1) fail("cpu_count must be at least 1");
  if (small_slots_per_cpu < 1 || medium_slots_per_cpu < 1 || large_slots_total < 1) {
    fail("slot counts must be positive");
  }
  if (t1_static_bytes < 0) fail("t1 must be non-negative");
  if (!(small_fraction > 0 && small_fraction < 1) ||
      !(medium_fraction > 0 && medium_fraction < 1) ||
      !(small_fraction + medium_fraction < 1)) {
    fail("fractions must be positive and sum to less than 1");
  }
  if (!(timeouts_s[0] > 0 && timeouts_s[0] < timeouts_s[1] &&
        timeouts_s[1] < timeouts_s[2])) {
    fail("timeouts must be positive and strictly increasing");
  }
  if (!(best_plan_min_progress >= 0 && best_plan_min_progress <= 1)) {
    fail("best_plan_min_progress must be in [0, 1]");
  }
  if (!dynamic_thresholds &&
      !(t1_static_bytes < static_t2_bytes && static_t2_bytes < static_t3_bytes)) {
    fail("static thresholds must satisfy t1 < t2 < t3");
  }
}

std::array<int, kTierCount> GatewayPolicy::slots() const {
  return {small_slots_per_cpu * cpu_count, medium_slots_per_cpu * cpu_count,
          large_slots_total};
}

Thresholds ComputeThresholds(Bytes t1, Bytes target, double small_fraction,
                             double medium_fraction, int small_active,
                             int medium_active) {
  // Fractions are read as multiples of 1e-9 so that decimal settings such as
  // 0.35 divide exactly instead of landing a byte short.
  constexpr __int128 kScale = 1'000'000'000;
  const __int128 base = std::max<Bytes>(target, 0);
  auto share = [&](double fraction, int active) {
    const auto parts = static_cast<__int128>(std::llround(fraction * 1e9));
    return static_cast<Bytes>(base * parts / (kScale * std::max(active, 1)));
  };
  Thresholds t;
  t.t1 = t1;
  t.t2 = std::max(share(small_fraction, small_active), t1 + 1);
  t.t3 = std::max(share(medium_fraction, medium_active), t.t2 + 1);
  return t;
}

GatewaySet::GatewaySet(GatewayPolicy policy, Bytes compilation_target,
                       bool enabled)
    : policy_(std::move(policy)), enabled_(enabled) {
  policy_.Validate();
  const auto slots = policy_.slots();
  for (int i = 0; i < kTierCount; ++i) tiers_[i].slots = slots[i];
  if (policy_.dynamic_thresholds) {
    thresholds_ = ComputeThresholds(policy_.t1_static_bytes, compilation_target,
                                    policy_.small_fraction,
                                    policy_.medium_fraction, 0, 0);
  } else {
    thresholds_ = {policy_.t1_static_bytes, policy_.static_t2_bytes,
                   policy_.static_t3_bytes};
  }
}

void GatewaySet::AddTask(TaskId id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = tasks_.try_emplace(id);
  if (!inserted) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " already registered");
  }
}

AllocationOutcome GatewaySet::OnAllocation(TaskId id, Bytes new_memory,
                                           Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (task.state != TaskState::kRunning) {
    throw Error(ErrorCode::kInvalidTaskState,
                "allocation by task " + std::to_string(id) + " in state " +
                    ToString(task.state));
  }
  if (new_memory < task.memory_bytes) {
    throw Error(ErrorCode::kMemoryDecrease,
                "compile memory of task " + std::to_string(id) + " decreased");
  }
  task.memory_bytes = new_memory;
  if (!enabled_) return AllocationOutcome::Proceed();
  return AcquireLocked(id, task, now);
}

void GatewaySet::SetProgress(TaskId id, double progress) {
  std::lock_guard<std::mutex> lock(mu_);
  EntryLocked(id).progress = std::clamp(progress, 0.0, 1.0);
}

std::vector<TaskId> GatewaySet::Complete(TaskId id, Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (task.state != TaskState::kRunning &&
      task.state != TaskState::kFinalizeBestPlan) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " cannot complete from " +
                    ToString(task.state));
  }
  task.state = TaskState::kDone;
  std::vector<TaskId> unblocked;
  ReleaseAllLocked(id, task, now, unblocked);
  return unblocked;
}

std::vector<TaskId> GatewaySet::AbortOom(TaskId id, Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (IsTerminal(task.state)) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " is already terminal");
  }
  if (task.state == TaskState::kBlocked) RemoveFromQueueLocked(id, task.blocked_tier);
  task.state = TaskState::kAbortedOom;
  task.blocked_tier = -1;
  std::vector<TaskId> unblocked;
  ReleaseAllLocked(id, task, now, unblocked);
  return unblocked;
}

std::vector<TaskId> GatewaySet::OnReleaseEvent(TaskId id, Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (!IsTerminal(task.state) && task.state != TaskState::kFinalizeBestPlan) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " released while " +
                    ToString(task.state));
  }
  std::vector<TaskId> unblocked;
  ReleaseAllLocked(id, task, now, unblocked);
  return unblocked;
}

TimeoutScan GatewaySet::CheckTimeouts(Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  TimeoutScan scan;
  for (int tier = 0; tier < kTierCount; ++tier) {
    auto& queue = tiers_[tier].queue;
    for (auto it = queue.begin(); it != queue.end();) {
      if (it->deadline <= now) {
        scan.timed_out.push_back(it->id);
        it = queue.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (TaskId id : scan.timed_out) {
    TaskEntry& task = EntryLocked(id);
    EmitLocked(GatewayEvent::Kind::kTimeout, id, task.blocked_tier, now);
    task.state = TaskState::kAbortedTimeout;
    task.blocked_tier = -1;
  }
  for (TaskId id : scan.timed_out) {
    ReleaseAllLocked(id, EntryLocked(id), now, scan.unblocked);
  }
  return scan;
}

bool GatewaySet::OomImminent(TaskId id) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (IsTerminal(task.state)) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " is already terminal");
  }
  if (task.state == TaskState::kFinalizeBestPlan) return false;
  if (task.progress < policy_.best_plan_min_progress) return false;
  if (task.state == TaskState::kBlocked) {
    RemoveFromQueueLocked(id, task.blocked_tier);
    task.blocked_tier = -1;
  }
  task.state = TaskState::kFinalizeBestPlan;
  return true;
}

void GatewaySet::Forget(TaskId id) {
  std::lock_guard<std::mutex> lock(mu_);
  TaskEntry& task = EntryLocked(id);
  if (!IsTerminal(task.state) || task.held != 0) {
    throw Error(ErrorCode::kInvalidTaskState,
                "task " + std::to_string(id) + " is still live");
  }
  tasks_.erase(id);
}

Thresholds GatewaySet::RecomputeThresholds(Bytes compilation_target) {
  std::lock_guard<std::mutex> lock(mu_);
  if (policy_.dynamic_thresholds) {
    const ActiveCounts counts = CountsLocked();
    thresholds_ = ComputeThresholds(policy_.t1_static_bytes, compilation_target,
                                    policy_.small_fraction,
                                    policy_.medium_fraction, counts.small,
                                    counts.medium);
  }
  return thresholds_;
}

ActiveCounts GatewaySet::Counts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return CountsLocked();
}

Thresholds GatewaySet::thresholds() const {
  std::lock_guard<std::mutex> lock(mu_);
  return thresholds_;
}

std::array<std::size_t, kTierCount> GatewaySet::QueueLengths() const {
  std::lock_guard<std::mutex> lock(mu_);
  return {tiers_[0].queue.size(), tiers_[1].queue.size(), tiers_[2].queue.size()};
}

std::array<std::size_t, kTierCount> GatewaySet::HolderCounts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return {tiers_[0].holders.size(), tiers_[1].holders.size(),
          tiers_[2].holders.size()};
}

std::vector<TaskId> GatewaySet::Holders(int tier) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto& h = tiers_.at(tier).holders;
  return {h.begin(), h.end()};
}

std::vector<TaskId> GatewaySet::Queue(int tier) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<TaskId> out;
  for (const auto& w : tiers_.at(tier).queue) out.push_back(w.id);
  return out;
}

std::optional<TaskView> GatewaySet::Task(TaskId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) return std::nullopt;
  const TaskEntry& t = it->second;
  return TaskView{id, t.memory_bytes, t.held, t.state, t.progress, t.blocked_tier,
                  t.deadline};
}

std::vector<TaskView> GatewaySet::Tasks() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<TaskView> out;
  out.reserve(tasks_.size());
  for (const auto& [id, t] : tasks_) {
    out.push_back({id, t.memory_bytes, t.held, t.state, t.progress, t.blocked_tier,
                   t.deadline});
  }
  return out;
}

std::vector<std::pair<TaskId, TaskId>> GatewaySet::WaitForEdges() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::pair<TaskId, TaskId>> edges;
  for (const auto& tier : tiers_) {
    for (const auto& w : tier.queue) {
      for (TaskId holder : tier.holders) edges.emplace_back(w.id, holder);
    }
  }
  return edges;
}

void GatewaySet::SetEventSink(EventSink sink) {
  std::lock_guard<std::mutex> lock(mu_);
  sink_ = std::move(sink);
}

GatewaySet::TaskEntry& GatewaySet::EntryLocked(TaskId id) {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) {
    throw Error(ErrorCode::kUnknownTask, "unknown task " + std::to_string(id));
  }
  return it->second;
}

const GatewaySet::TaskEntry& GatewaySet::EntryLocked(TaskId id) const {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) {
    throw Error(ErrorCode::kUnknownTask, "unknown task " + std::to_string(id));
  }
  return it->second;
}

AllocationOutcome GatewaySet::AcquireLocked(TaskId id, TaskEntry& task,
                                            Seconds now) {
  while (task.held < kTierCount && task.memory_bytes >= thresholds_[task.held]) {
    const int tier = task.held;
    Tier& gate = tiers_[tier];
    if (static_cast<int>(gate.holders.size()) < gate.slots) {
      gate.holders.insert(id);
      task.held = tier + 1;
      EmitLocked(GatewayEvent::Kind::kAcquire, id, tier, now);
      continue;
    }
    const Seconds deadline = now + policy_.timeouts_s[tier];
    gate.queue.push_back({id, now, deadline});
    task.state = TaskState::kBlocked;
    task.blocked_tier = tier;
    task.deadline = deadline;
    EmitLocked(GatewayEvent::Kind::kEnqueue, id, tier, now);
    return {true, tier, deadline};
  }
  task.state = TaskState::kRunning;
  return AllocationOutcome::Proceed();
}

void GatewaySet::ReleaseAllLocked(TaskId id, TaskEntry& task, Seconds now,
                                  std::vector<TaskId>& unblocked) {
  while (task.held > 0) {
    const int tier = task.held - 1;
    Tier& gate = tiers_[tier];
    if (gate.holders.erase(id) == 0) {
      throw Error(ErrorCode::kTierNotHeld, "task " + std::to_string(id) +
                                               " does not hold tier " +
                                               std::to_string(tier));
    }
    task.held = tier;
    EmitLocked(GatewayEvent::Kind::kRelease, id, tier, now);
    while (static_cast<int>(gate.holders.size()) < gate.slots &&
           !gate.queue.empty()) {
      const Waiter head = gate.queue.front();
      gate.queue.pop_front();
      TaskEntry& waiter = EntryLocked(head.id);
      gate.holders.insert(head.id);
      waiter.held = tier + 1;
      waiter.blocked_tier = -1;
      waiter.state = TaskState::kRunning;
      EmitLocked(GatewayEvent::Kind::kAcquire, head.id, tier, now);
      if (!AcquireLocked(head.id, waiter, now).blocked) {
        unblocked.push_back(head.id);
      }
    }
  }
  if (IsTerminal(task.state)) task.memory_bytes = 0;
}

void GatewaySet::RemoveFromQueueLocked(TaskId id, int tier) {
  if (tier < 0 || tier >= kTierCount) return;
  auto& queue = tiers_[tier].queue;
  queue.erase(std::remove_if(queue.begin(), queue.end(),
                             [id](const Waiter& w) { return w.id == id; }),
              queue.end());
}

void GatewaySet::EmitLocked(GatewayEvent::Kind kind, TaskId id, int tier,
                            Seconds now) {
  if (sink_) sink_({kind, id, tier, now});
}

ActiveCounts GatewaySet::CountsLocked() const {
  ActiveCounts c;
  for (const auto& [id, t] : tasks_) {
    if (t.held == 1) ++c.small;
  }
  c.medium = static_cast<int>(tiers_[1].holders.size());
  c.large = static_cast<int>(tiers_[2].holders.size());
  return c;
}

}  // namespace simdb
