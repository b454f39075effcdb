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

#ifndef SIMDB_BROKER_H_
#define SIMDB_BROKER_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simdb/units.h"

namespace simdb {

enum class Notification { kCanGrow, kStable, kMustShrink };

const char* ToString(Notification n);

struct BrokerConfig {
  Bytes physical_bytes = 4 * kGiB;
  // Fraction of physical memory never handed out as target.
  double slack_fraction = 0.05;
  // Samples kept per component for the trend fit.
  std::size_t window = 16;
  Seconds horizon_s = 1.0;
  // Boundary between CAN_GROW and STABLE, as a fraction of target.
  double low_water = 0.9;

  void Validate() const;
  Bytes budget() const;
};

struct UsageSample {
  Seconds time_s;
  Bytes usage;

  friend bool operator==(const UsageSample&, const UsageSample&) = default;
};

// Index of a registered component. Only the broker that issued it can
// interpret it.
class ComponentHandle {
 public:
  constexpr ComponentHandle() = default;
  constexpr explicit ComponentHandle(std::size_t index) : index_(index) {}
  constexpr std::size_t index() const { return index_; }
  friend constexpr bool operator==(ComponentHandle, ComponentHandle) = default;

 private:
  std::size_t index_ = 0;
};

// Snapshot of one registered consumer.
struct ComponentAccount {
  std::string id;
  bool shrinkable = false;
  Bytes floor_bytes = 0;
  std::vector<UsageSample> samples;
  Bytes predicted_bytes = 0;
  Bytes target_bytes = 0;
  Notification notification = Notification::kCanGrow;

  Bytes usage() const { return samples.empty() ? 0 : samples.back().usage; }
};

struct NotificationChange {
  ComponentHandle component;
  Notification from;
  Notification to;

  friend bool operator==(const NotificationChange&,
                         const NotificationChange&) = default;
};

struct TargetDemand {
  Bytes demand;  // max(predicted, floor)
  Bytes floor;
};

// Least-squares line through `samples`, evaluated `horizon_s` past the newest
// sample and clamped to [0, cap]. Fewer than two samples yields the newest
// usage (0 if empty).
Bytes PredictLinear(std::span<const UsageSample> samples, Seconds horizon_s,
                    Bytes cap);

// Splits `budget` across components. When total demand fits, every component
// gets its demand plus an equal share of the surplus. Otherwise floors are
// honored first and the rest is divided in proportion to demand above floor,
// rounded by a divisor method (D'Hondt) so the split sums to the budget
// exactly and each share stays within n-1 bytes above its exact value.
std::vector<Bytes> ComputeTargets(std::span<const TargetDemand> demands,
                                  Bytes budget);

Notification NotificationFor(Bytes usage, Bytes target, double low_water);

// Accounts per-component memory, predicts short-term demand from recent
// usage, and turns the predictions into targets and notifications. All
// member functions are safe to call concurrently.
class MemoryBroker {
 public:
  using TargetListener = std::function<void(Bytes target)>;

  explicit MemoryBroker(BrokerConfig config);

  MemoryBroker(const MemoryBroker&) = delete;
  MemoryBroker& operator=(const MemoryBroker&) = delete;

  ComponentHandle Register(std::string id, bool shrinkable, Bytes floor_bytes);

  // Appends a sample. A sample at the newest timestamp replaces it.
  void RecordUsage(ComponentHandle component, Bytes usage, Seconds now);

  Bytes PredictUsage(ComponentHandle component, Seconds horizon_s) const;

  // Re-predicts every component, recomputes targets and notifications, and
  // returns the components whose notification changed. Target listeners run
  // after the broker state is updated, outside the broker lock.
  std::vector<NotificationChange> Tick(Seconds now);

  // Called with the component's target after every Tick.
  void SetTargetListener(ComponentHandle component, TargetListener listener);

  Notification NotificationOf(ComponentHandle component) const;
  Bytes Target(ComponentHandle component) const;
  Bytes Usage(ComponentHandle component) const;
  Bytes Predicted(ComponentHandle component) const;
  ComponentAccount Snapshot(ComponentHandle component) const;
  std::optional<ComponentHandle> Find(std::string_view id) const;
  std::size_t size() const;

  // True when the last Tick found predicted demand above the budget.
  bool constrained() const;

  const BrokerConfig& config() const { return config_; }

 private:
  struct Account {
    std::string id;
    bool shrinkable;
    Bytes floor_bytes;
    std::deque<UsageSample> samples;
    Bytes predicted_bytes = 0;
    Bytes target_bytes = 0;
    Notification notification = Notification::kCanGrow;
    bool ticked = false;
    TargetListener listener;
  };

  const Account& AccountLocked(ComponentHandle component) const;
  Account& AccountLocked(ComponentHandle component);
  Bytes FloorSumLocked() const;

  const BrokerConfig config_;
  mutable std::mutex mu_;
  std::vector<Account> accounts_;
  bool constrained_ = false;
};

}  // namespace simdb

#endif  // SIMDB_BROKER_H_
