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

#include "simdb/units.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "simdb/error.h"

namespace simdb {

Bytes ParseBytes(std::string_view text) {
  const std::string original(text);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);

  double value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                   value, std::chars_format::fixed);
  if (ec != std::errc() || end == text.data()) {
    throw ConfigError("bytes", "cannot parse byte quantity '" + original + "'");
  }
  std::string suffix(end, text.data() + text.size());
  for (char& c : suffix) c = static_cast<char>(std::toupper(c));
  double scale = 1;
  if (suffix.empty() || suffix == "B") {
    scale = 1;
  } else if (suffix == "KB") {
    scale = static_cast<double>(kKiB);
  } else if (suffix == "MB") {
    scale = static_cast<double>(kMiB);
  } else if (suffix == "GB") {
    scale = static_cast<double>(kGiB);
  } else {
    throw ConfigError("bytes", "unknown unit suffix in '" + original + "'");
  }
  const double bytes = value * scale;
  if (!std::isfinite(bytes) || bytes < 0 || bytes > 9.0e18) {
    throw ConfigError("bytes", "byte quantity out of range '" + original + "'");
  }
  return static_cast<Bytes>(std::llround(bytes));
}

std::string FormatNumber(double value) { return fmt::format("{}", value); }

const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateComponent:
      return "duplicate_component";
    case ErrorCode::kFloorOverflow:
      return "floor_overflow";
    case ErrorCode::kUnknownComponent:
      return "unknown_component";
    case ErrorCode::kTimeRegression:
      return "time_regression";
    case ErrorCode::kInvalidPolicy:
      return "invalid_policy";
    case ErrorCode::kUnknownTask:
      return "unknown_task";
    case ErrorCode::kInvalidTaskState:
      return "invalid_task_state";
    case ErrorCode::kMemoryDecrease:
      return "memory_decrease";
    case ErrorCode::kTierNotHeld:
      return "tier_not_held";
    case ErrorCode::kInvalidConfig:
      return "invalid_config";
    case ErrorCode::kUnknownScenario:
      return "unknown_scenario";
  }
  return "unknown";
}

}  // namespace simdb
