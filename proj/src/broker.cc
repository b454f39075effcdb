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

#include "simdb/broker.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "simdb/error.h"

namespace simdb {

const char* ToString(Notification n) {
  switch (n) {
    case Notification::kCanGrow:
      return "CAN_GROW";
    case Notification::kStable:
      return "STABLE";
    case Notification::kMustShrink:
      return "MUST_SHRINK";
  }
  return "?";
}

void BrokerConfig::Validate() const {
  if (physical_bytes <= 0) {
    throw ConfigError("broker.physical_bytes", "must be positive");
  }
  if (!(slack_fraction >= 0 && slack_fraction < 1)) {
    throw ConfigError("broker.slack_fraction", "must be in [0, 1)");
  }
  if (window < 2) {
    throw ConfigError("broker.window", "must be at least 2 samples");
  }
  if (!(horizon_s >= 0) || !std::isfinite(horizon_s)) {
    throw ConfigError("broker.horizon_s", "must be non-negative");
  }
  if (!(low_water > 0 && low_water < 1)) {
    throw ConfigError("broker.low_water", "must be in (0, 1)");
  }
}

Bytes BrokerConfig::budget() const {
  return static_cast<Bytes>(
      std::floor(static_cast<long double>(physical_bytes) * (1 - slack_fraction)));
}

Bytes PredictLinear(std::span<const UsageSample> samples, Seconds horizon_s,
                    Bytes cap) {
  if (samples.empty()) return 0;
  if (samples.size() < 2) return std::clamp<Bytes>(samples.back().usage, 0, cap);

  const long double n = static_cast<long double>(samples.size());
  long double mean_t = 0;
  long double mean_u = 0;
  for (const auto& s : samples) {
    mean_t += s.time_s;
    mean_u += static_cast<long double>(s.usage);
  }
  mean_t /= n;
  mean_u /= n;
  long double sxy = 0;
  long double sxx = 0;
  for (const auto& s : samples) {
    const long double dt = s.time_s - mean_t;
    sxy += dt * (static_cast<long double>(s.usage) - mean_u);
    sxx += dt * dt;
  }
  const long double slope = sxx > 0 ? sxy / sxx : 0;
  const long double at = samples.back().time_s + horizon_s;
  const long double value = mean_u + slope * (at - mean_t);
  if (!(value > 0)) return 0;
  if (value >= static_cast<long double>(cap)) return cap;
  return static_cast<Bytes>(std::llround(value));
}

std::vector<Bytes> ComputeTargets(std::span<const TargetDemand> demands,
                                  Bytes budget) {
  std::vector<Bytes> targets(demands.size(), 0);
  if (demands.empty()) return targets;

  __int128 total_demand = 0;
  __int128 total_floor = 0;
  for (const auto& d : demands) {
    total_demand += d.demand;
    total_floor += d.floor;
  }

  const auto n = static_cast<__int128>(demands.size());
  if (total_demand <= budget) {
    const __int128 surplus = budget - total_demand;
    for (std::size_t i = 0; i < demands.size(); ++i) {
      const auto k = static_cast<__int128>(i);
      const __int128 share = surplus * (k + 1) / n - surplus * k / n;
      targets[i] = static_cast<Bytes>(demands[i].demand + share);
    }
    return targets;
  }

  const __int128 remainder = budget - total_floor;
  __int128 total_excess = 0;
  for (const auto& d : demands) total_excess += std::max<Bytes>(0, d.demand - d.floor);
  if (remainder <= 0 || total_excess == 0) {
    for (std::size_t i = 0; i < demands.size(); ++i) targets[i] = demands[i].floor;
    return targets;
  }
  // Divisor apportionment of the remainder: floored proportional shares
  // first, then each leftover byte to the largest excess / (share + 1).
  // Unlike largest-remainder rounding, raising one demand can then never
  // raise anyone else's target, not even by a byte.
  std::vector<__int128> excess(demands.size());
  std::vector<__int128> share(demands.size());
  __int128 given = 0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    excess[i] = std::max<Bytes>(0, demands[i].demand - demands[i].floor);
    share[i] = remainder * excess[i] / total_excess;
    given += share[i];
  }
  // Fewer leftovers than components, so this loop is short.
  for (__int128 left = remainder - given; left > 0; --left) {
    std::size_t best = demands.size();
    for (std::size_t i = 0; i < demands.size(); ++i) {
      if (excess[i] == 0) continue;
      if (best == demands.size() ||
          excess[i] * (share[best] + 1) > excess[best] * (share[i] + 1)) {
        best = i;
      }
    }
    ++share[best];
  }
  for (std::size_t i = 0; i < demands.size(); ++i) {
    targets[i] = static_cast<Bytes>(demands[i].floor + share[i]);
  }
  return targets;
}

Notification NotificationFor(Bytes usage, Bytes target, double low_water) {
  if (usage > target) return Notification::kMustShrink;
  // 0.9 * 100 must compare as exactly 90, not a hair above it.
  long double boundary =
      static_cast<long double>(low_water) * static_cast<long double>(target);
  const long double nearest = std::round(boundary);
  if (std::fabs(boundary - nearest) <= 1e-9L * std::max(1.0L, boundary)) {
    boundary = nearest;
  }
  if (static_cast<long double>(usage) < boundary) return Notification::kCanGrow;
  return Notification::kStable;
}

MemoryBroker::MemoryBroker(BrokerConfig config) : config_(std::move(config)) {
  config_.Validate();
}

ComponentHandle MemoryBroker::Register(std::string id, bool shrinkable,
                                       Bytes floor_bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& a : accounts_) {
    if (a.id == id) {
      throw Error(ErrorCode::kDuplicateComponent,
                  "component '" + id + "' is already registered");
    }
  }
  if (floor_bytes < 0) {
    throw Error(ErrorCode::kFloorOverflow, "floor of '" + id + "' is negative");
  }
  const Bytes floors = FloorSumLocked();
  if (floors + floor_bytes >= config_.physical_bytes) {
    throw Error(ErrorCode::kFloorOverflow,
                "floors would reach physical memory when registering '" + id + "'");
  }
  Account account;
  account.id = std::move(id);
  account.shrinkable = shrinkable;
  account.floor_bytes = floor_bytes;
  accounts_.push_back(std::move(account));

  // Untouched accounts are unconstrained: everything except other floors.
  const Bytes all_floors = floors + floor_bytes;
  for (auto& a : accounts_) {
    if (!a.ticked) {
      a.target_bytes = config_.physical_bytes - (all_floors - a.floor_bytes);
    }
  }
  return ComponentHandle(accounts_.size() - 1);
}

void MemoryBroker::RecordUsage(ComponentHandle component, Bytes usage,
                               Seconds now) {
  std::lock_guard<std::mutex> lock(mu_);
  Account& a = AccountLocked(component);
  if (usage < 0) {
    throw Error(ErrorCode::kInvalidPolicy,
                "negative usage reported for '" + a.id + "'");
  }
  if (!a.samples.empty()) {
    UsageSample& newest = a.samples.back();
    if (now < newest.time_s) {
      throw Error(ErrorCode::kTimeRegression,
                  "sample for '" + a.id + "' goes back in time");
    }
    if (now == newest.time_s) {
      newest.usage = usage;
      return;
    }
  }
  a.samples.push_back({now, usage});
  while (a.samples.size() > config_.window) a.samples.pop_front();
}

Bytes MemoryBroker::PredictUsage(ComponentHandle component,
                                 Seconds horizon_s) const {
  std::lock_guard<std::mutex> lock(mu_);
  const Account& a = AccountLocked(component);
  std::vector<UsageSample> samples(a.samples.begin(), a.samples.end());
  return PredictLinear(samples, horizon_s, config_.physical_bytes);
}

std::vector<NotificationChange> MemoryBroker::Tick(Seconds /*now*/) {
  std::vector<NotificationChange> changes;
  std::vector<std::pair<TargetListener, Bytes>> to_notify;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (accounts_.empty()) return changes;

    std::vector<TargetDemand> demands;
    demands.reserve(accounts_.size());
    __int128 total = 0;
    for (auto& a : accounts_) {
      std::vector<UsageSample> samples(a.samples.begin(), a.samples.end());
      a.predicted_bytes =
          PredictLinear(samples, config_.horizon_s, config_.physical_bytes);
      const Bytes demand = std::max(a.predicted_bytes, a.floor_bytes);
      demands.push_back({demand, a.floor_bytes});
      total += demand;
    }
    const Bytes budget = config_.budget();
    constrained_ = total > budget;
    const std::vector<Bytes> targets = ComputeTargets(demands, budget);

    for (std::size_t i = 0; i < accounts_.size(); ++i) {
      Account& a = accounts_[i];
      a.target_bytes = targets[i];
      a.ticked = true;
      const Bytes usage = a.samples.empty() ? 0 : a.samples.back().usage;
      Notification next = NotificationFor(usage, a.target_bytes, config_.low_water);
      // Below the budget nothing is asked to give memory back.
      if (!constrained_ && next == Notification::kMustShrink) {
        next = Notification::kStable;
      }
      if (next != a.notification) {
        changes.push_back({ComponentHandle(i), a.notification, next});
        a.notification = next;
      }
      if (a.listener) to_notify.emplace_back(a.listener, a.target_bytes);
    }
  }
  for (auto& [listener, target] : to_notify) listener(target);
  return changes;
}

void MemoryBroker::SetTargetListener(ComponentHandle component,
                                     TargetListener listener) {
  std::lock_guard<std::mutex> lock(mu_);
  AccountLocked(component).listener = std::move(listener);
}

Notification MemoryBroker::NotificationOf(ComponentHandle component) const {
  std::lock_guard<std::mutex> lock(mu_);
  return AccountLocked(component).notification;
}

Bytes MemoryBroker::Target(ComponentHandle component) const {
  std::lock_guard<std::mutex> lock(mu_);
  return AccountLocked(component).target_bytes;
}

Bytes MemoryBroker::Usage(ComponentHandle component) const {
  std::lock_guard<std::mutex> lock(mu_);
  const Account& a = AccountLocked(component);
  return a.samples.empty() ? 0 : a.samples.back().usage;
}

Bytes MemoryBroker::Predicted(ComponentHandle component) const {
  std::lock_guard<std::mutex> lock(mu_);
  return AccountLocked(component).predicted_bytes;
}

ComponentAccount MemoryBroker::Snapshot(ComponentHandle component) const {
  std::lock_guard<std::mutex> lock(mu_);
  const Account& a = AccountLocked(component);
  ComponentAccount out;
  out.id = a.id;
  out.shrinkable = a.shrinkable;
  out.floor_bytes = a.floor_bytes;
  out.samples.assign(a.samples.begin(), a.samples.end());
  out.predicted_bytes = a.predicted_bytes;
  out.target_bytes = a.target_bytes;
  out.notification = a.notification;
  return out;
}

std::optional<ComponentHandle> MemoryBroker::Find(std::string_view id) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t i = 0; i < accounts_.size(); ++i) {
    if (accounts_[i].id == id) return ComponentHandle(i);
  }
  return std::nullopt;
}

std::size_t MemoryBroker::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return accounts_.size();
}

bool MemoryBroker::constrained() const {
  std::lock_guard<std::mutex> lock(mu_);
  return constrained_;
}

const MemoryBroker::Account& MemoryBroker::AccountLocked(
    ComponentHandle component) const {
  if (component.index() >= accounts_.size()) {
    throw Error(ErrorCode::kUnknownComponent, "unknown component handle");
  }
  return accounts_[component.index()];
}

MemoryBroker::Account& MemoryBroker::AccountLocked(ComponentHandle component) {
  if (component.index() >= accounts_.size()) {
    throw Error(ErrorCode::kUnknownComponent, "unknown component handle");
  }
  return accounts_[component.index()];
}

Bytes MemoryBroker::FloorSumLocked() const {
  Bytes sum = 0;
  for (const auto& a : accounts_) sum += a.floor_bytes;
  return sum;
}

}  // namespace simdb
