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

#ifndef SIMDB_UNITS_H_
#define SIMDB_UNITS_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace simdb {

// Memory quantities are signed so that deltas and deficits can be expressed
// without casts. Negative balances are invariant violations, not values.
using Bytes = std::int64_t;

// Simulated time in seconds.
using Seconds = double;

inline constexpr Bytes kKiB = 1024;
inline constexpr Bytes kMiB = 1024 * kKiB;
inline constexpr Bytes kGiB = 1024 * kMiB;

// Parses "4096", "64KB", "5MB", "1.5GB" (powers of 1024). Throws
// ConfigError on malformed input or negative values.
Bytes ParseBytes(std::string_view text);

// Shortest exact decimal rendering of a double, "." separator, no grouping.
std::string FormatNumber(double value);

}  // namespace simdb

#endif  // SIMDB_UNITS_H_
