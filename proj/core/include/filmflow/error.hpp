// Copyright 2026 The Filmflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "filmflow/types.hpp"

namespace filmflow {

enum class ErrorCode {
  kCycle,
  kUnknownDependency,
  kDuplicateId,
  kInvalidPipeline,
  kUnknownId,
  kMissingDuration,
  kInconsistentReport,
  kInvalidDecision,
  kUnknownCompletion,
  kWorkerFailure,
  kDeadlock,
  kInvalidFeedback,
  kUnknownTarget,
  kTargetPending,
  kTraceTriggerUnknown,
  kCancelled,
  kAdapterError,
  kMissingInput,
  kNonPositiveDuration,
  kInvalidParams,
  kOverlapTooLarge,
  kPastTime,
  kSequenceGap,
  kRunClosed,
  kCorruptLog,
  kNotFound,
  kBadRequest,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by validate_pipeline; carries one cycle in dependency order, with
// the first node repeated at the end.
class CycleError : public Error {
 public:
  explicit CycleError(std::vector<EventId> cycle);

  const std::vector<EventId>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<EventId> cycle_;
};

// Carries retry metadata from an external generative service.
class AdapterError : public Error {
 public:
  AdapterError(const std::string& message, bool retryable);

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace filmflow
