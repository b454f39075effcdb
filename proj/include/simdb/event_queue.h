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

#ifndef SIMDB_EVENT_QUEUE_H_
#define SIMDB_EVENT_QUEUE_H_

#include <cstdint>
#include <queue>
#include <vector>

#include "simdb/units.h"

namespace simdb {

// Min-queue of timed events. Ties on time are broken by insertion order, so
// dispatch order is a pure function of the scheduling sequence.
template <typename Kind, typename Payload>
class EventQueue {
 public:
  struct Event {
    Seconds time;
    std::uint64_t seq;
    Kind kind;
    Payload payload;
  };

  std::uint64_t Schedule(Seconds time, Kind kind, Payload payload) {
    const std::uint64_t seq = next_seq_++;
    heap_.push(Event{time, seq, kind, std::move(payload)});
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

  Event Pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace simdb

#endif  // SIMDB_EVENT_QUEUE_H_
