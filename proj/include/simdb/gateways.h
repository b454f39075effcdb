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

#ifndef SIMDB_GATEWAYS_H_
#define SIMDB_GATEWAYS_H_

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "simdb/units.h"

namespace simdb {

using TaskId = std::uint64_t;

inline constexpr int kTierCount = 3;

enum class TaskState {
  kRunning,
  kBlocked,
  kAbortedTimeout,
  kAbortedOom,
  kFinalizeBestPlan,
  kDone,
};

const char* ToString(TaskState state);
bool IsTerminal(TaskState state);

struct GatewayPolicy {
  int cpu_count = 1;
  int small_slots_per_cpu = 4;
  int medium_slots_per_cpu = 1;
  int large_slots_total = 1;
  // Below this a compilation never touches a gateway.
  Bytes t1_static_bytes = 5 * kMiB;
  // Share of the compilation target handed to small and medium compilations.
  double small_fraction = 0.5;
  double medium_fraction = 0.35;
  std::array<Seconds, kTierCount> timeouts_s = {60, 180, 600};
  double best_plan_min_progress = 0.25;
  // When false, t2/t3 stay at the static values below and broker targets are
  // ignored.
  bool dynamic_thresholds = true;
  Bytes static_t2_bytes = 0;
  Bytes static_t3_bytes = 0;

  void Validate() const;
  std::array<int, kTierCount> slots() const;
};

struct Thresholds {
  Bytes t1 = 0;
  Bytes t2 = 0;
  Bytes t3 = 0;

  Bytes operator[](int tier) const { return tier == 0 ? t1 : tier == 1 ? t2 : t3; }
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Dynamic thresholds for the medium and large gateways:
//   t2 = target * small_fraction / max(small_active, 1)
//   t3 = target * medium_fraction / max(medium_active, 1)
// then raised as needed so that t1 < t2 < t3.
Thresholds ComputeThresholds(Bytes t1, Bytes target, double small_fraction,
                             double medium_fraction, int small_active,
                             int medium_active);

struct ActiveCounts {
  int small = 0;   // tasks whose highest held tier is 0
  int medium = 0;  // holders of tier 1
  int large = 0;   // holders of tier 2

  friend bool operator==(const ActiveCounts&, const ActiveCounts&) = default;
};

struct AllocationOutcome {
  bool blocked = false;
  int tier = -1;
  Seconds deadline = 0;

  static AllocationOutcome Proceed() { return {}; }
};

struct TimeoutScan {
  std::vector<TaskId> timed_out;
  std::vector<TaskId> unblocked;
};

struct TaskView {
  TaskId id = 0;
  Bytes memory_bytes = 0;
  int held_tiers = 0;  // tiers {0 .. held_tiers-1} are held
  TaskState state = TaskState::kRunning;
  double progress = 0;
  int blocked_tier = -1;
  Seconds deadline = 0;
};

struct GatewayEvent {
  enum class Kind { kAcquire, kEnqueue, kRelease, kTimeout };
  Kind kind;
  TaskId task;
  int tier;
  Seconds time;
};

// Three monitors with rising memory thresholds and shrinking slot counts.
// A compilation acquires them in ascending order as its memory grows and
// gives them back in descending order when it finishes or aborts. Waiters
// queue FIFO per tier. All member functions are safe to call concurrently;
// a grant and its queue removal happen under one lock.
class GatewaySet {
 public:
  using EventSink = std::function<void(const GatewayEvent&)>;

  GatewaySet(GatewayPolicy policy, Bytes compilation_target, bool enabled = true);

  GatewaySet(const GatewaySet&) = delete;
  GatewaySet& operator=(const GatewaySet&) = delete;

  void AddTask(TaskId id);

  // Records the task's new memory total and acquires every gateway whose
  // threshold it has reached. Returns the tier it blocked on, if any.
  AllocationOutcome OnAllocation(TaskId id, Bytes new_memory, Seconds now);

  void SetProgress(TaskId id, double progress);

  // Moves a live task to DONE and releases its gateways. Returns the waiters
  // that are running again.
  std::vector<TaskId> Complete(TaskId id, Seconds now);
  std::vector<TaskId> AbortOom(TaskId id, Seconds now);

  // Releases the gateways of a task that already reached a terminal state
  // (or is finalizing), highest tier first, handing each freed slot to the
  // head of that tier's queue.
  std::vector<TaskId> OnReleaseEvent(TaskId id, Seconds now);

  // Aborts every waiter whose deadline is at or before `now`.
  TimeoutScan CheckTimeouts(Seconds now);

  // Switches a task to FINALIZE_BEST_PLAN if it has explored enough of its
  // search; returns whether it did. The task keeps its gateways until
  // Complete/OnReleaseEvent.
  bool OomImminent(TaskId id);

  // Drops a terminal task from the table.
  void Forget(TaskId id);

  Thresholds RecomputeThresholds(Bytes compilation_target);

  ActiveCounts Counts() const;
  Thresholds thresholds() const;
  std::array<std::size_t, kTierCount> QueueLengths() const;
  std::array<std::size_t, kTierCount> HolderCounts() const;
  std::vector<TaskId> Holders(int tier) const;
  std::vector<TaskId> Queue(int tier) const;
  std::optional<TaskView> Task(TaskId id) const;
  std::vector<TaskView> Tasks() const;

  // Edges (waiter, holder): a task queued on tier k waits for every holder
  // of tier k.
  std::vector<std::pair<TaskId, TaskId>> WaitForEdges() const;

  void SetEventSink(EventSink sink);

  bool enabled() const { return enabled_; }
  const GatewayPolicy& policy() const { return policy_; }

 private:
  struct TaskEntry {
    Bytes memory_bytes = 0;
    int held = 0;
    TaskState state = TaskState::kRunning;
    double progress = 0;
    int blocked_tier = -1;
    Seconds deadline = 0;
  };
  struct Waiter {
    TaskId id;
    Seconds enqueued;
    Seconds deadline;
  };
  struct Tier {
    int slots = 0;
    std::set<TaskId> holders;
    std::deque<Waiter> queue;
  };

  TaskEntry& EntryLocked(TaskId id);
  const TaskEntry& EntryLocked(TaskId id) const;
  // Continues acquisition from the next unheld tier. Returns the outcome and
  // leaves the task RUNNING or BLOCKED.
  AllocationOutcome AcquireLocked(TaskId id, TaskEntry& task, Seconds now);
  void ReleaseAllLocked(TaskId id, TaskEntry& task, Seconds now,
                        std::vector<TaskId>& unblocked);
  void RemoveFromQueueLocked(TaskId id, int tier);
  void EmitLocked(GatewayEvent::Kind kind, TaskId id, int tier, Seconds now);
  ActiveCounts CountsLocked() const;

  const GatewayPolicy policy_;
  const bool enabled_;
  mutable std::mutex mu_;
  std::array<Tier, kTierCount> tiers_;
  std::map<TaskId, TaskEntry> tasks_;
  Thresholds thresholds_;
  EventSink sink_;
};

}  // namespace simdb

#endif  // SIMDB_GATEWAYS_H_
