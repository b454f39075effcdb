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

#include "simdb/ledger.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace simdb {

const char* ToString(Component c) {
  switch (c) {
    case Component::kBufferPool:
      return "buffer_pool";
    case Component::kCompilation:
      return "compilation";
    case Component::kExecution:
      return "execution";
    case Component::kPlanCache:
      return "plan_cache";
  }
  return "?";
}

const char* ToString(AllocationResult r) {
  switch (r) {
    case AllocationResult::kGranted:
      return "GRANTED";
    case AllocationResult::kGrantedAfterShrink:
      return "GRANTED_AFTER_SHRINK";
    case AllocationResult::kDenied:
      return "DENIED";
  }
  return "?";
}

MemoryLedger::MemoryLedger(Bytes physical_bytes) : physical_(physical_bytes) {
  if (physical_bytes <= 0) throw std::invalid_argument("physical memory must be positive");
}

void MemoryLedger::Allocate(Component c, Bytes bytes) {
  if (bytes < 0) throw std::logic_error("negative allocation");
  if (bytes > free()) {
    throw std::logic_error(std::string("ledger overcommit by ") + ToString(c));
  }
  usage_[static_cast<std::size_t>(c)] += bytes;
}

void MemoryLedger::Free(Component c, Bytes bytes) {
  Bytes& u = usage_[static_cast<std::size_t>(c)];
  if (bytes < 0 || bytes > u) {
    throw std::logic_error(std::string("bad free from ") + ToString(c));
  }
  u -= bytes;
}

Bytes MemoryLedger::used() const {
  Bytes sum = 0;
  for (Bytes u : usage_) sum += u;
  return sum;
}

AllocationResult TryAllocate(MemoryLedger& ledger, Component requester,
                             Bytes delta, std::span<const ShrinkLimit> shrink_order) {
  if (delta < 0) throw std::logic_error("negative allocation request");
  if (ledger.free() >= delta) {
    ledger.Allocate(requester, delta);
    return AllocationResult::kGranted;
  }
  Bytes reclaimable = 0;
  for (const ShrinkLimit& s : shrink_order) {
    if (s.component == requester) continue;
    reclaimable += std::max<Bytes>(0, ledger.usage(s.component) - s.min_bytes);
  }
  Bytes missing = delta - ledger.free();
  if (reclaimable < missing) return AllocationResult::kDenied;
  for (const ShrinkLimit& s : shrink_order) {
    if (missing <= 0) break;
    if (s.component == requester) continue;
    const Bytes give =
        std::min(missing, std::max<Bytes>(0, ledger.usage(s.component) - s.min_bytes));
    ledger.Free(s.component, give);
    missing -= give;
  }
  ledger.Allocate(requester, delta);
  return AllocationResult::kGrantedAfterShrink;
}

}  // namespace simdb
