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

#ifndef SIMDB_LEDGER_H_
#define SIMDB_LEDGER_H_

#include <array>
#include <span>

#include "simdb/units.h"

namespace simdb {

enum class Component { kBufferPool = 0, kCompilation, kExecution, kPlanCache };

inline constexpr std::size_t kComponentCount = 4;
inline constexpr std::array<Component, kComponentCount> kAllComponents = {
    Component::kBufferPool, Component::kCompilation, Component::kExecution,
    Component::kPlanCache};

const char* ToString(Component c);

enum class AllocationResult { kGranted, kGrantedAfterShrink, kDenied };

const char* ToString(AllocationResult r);

// Byte-exact account of who holds physical memory. free() never goes
// negative: Allocate throws std::logic_error instead.
class MemoryLedger {
 public:
  explicit MemoryLedger(Bytes physical_bytes);

  void Allocate(Component c, Bytes bytes);
  void Free(Component c, Bytes bytes);

  Bytes usage(Component c) const { return usage_[static_cast<std::size_t>(c)]; }
  Bytes used() const;
  Bytes free() const { return physical_ - used(); }
  Bytes physical() const { return physical_; }

 private:
  Bytes physical_;
  std::array<Bytes, kComponentCount> usage_{};
};

// How far a shrinkable component may be squeezed for someone else.
struct ShrinkLimit {
  Component component;
  Bytes min_bytes;
};

// Grants `delta` to `requester` from free memory, shrinking the components
// in `shrink_order` (each no lower than its min_bytes) only as far as needed.
// A denied request changes nothing.
AllocationResult TryAllocate(MemoryLedger& ledger, Component requester,
                             Bytes delta, std::span<const ShrinkLimit> shrink_order);

}  // namespace simdb

#endif  // SIMDB_LEDGER_H_
