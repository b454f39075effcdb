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

#ifndef SIMDB_ERROR_H_
#define SIMDB_ERROR_H_

#include <stdexcept>
#include <string>

namespace simdb {

enum class ErrorCode {
  kDuplicateComponent,
  kFloorOverflow,
  kUnknownComponent,
  kTimeRegression,
  kInvalidPolicy,
  kUnknownTask,
  kInvalidTaskState,
  kMemoryDecrease,
  kTierNotHeld,
  kInvalidConfig,
  kUnknownScenario,
};

const char* ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Configuration problems carry the offending field path so the CLI can point
// at it.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::kInvalidConfig, field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace simdb

#endif  // SIMDB_ERROR_H_
