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

#include "filmflow/error.hpp"

#include <utility>

namespace filmflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycle: return "CycleError";
    case ErrorCode::kUnknownDependency: return "UnknownDependency";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidPipeline: return "InvalidPipeline";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kMissingDuration: return "MissingDuration";
    case ErrorCode::kInconsistentReport: return "InconsistentReport";
    case ErrorCode::kInvalidDecision: return "InvalidDecision";
    case ErrorCode::kUnknownCompletion: return "UnknownCompletion";
    case ErrorCode::kWorkerFailure: return "WorkerFailure";
    case ErrorCode::kDeadlock: return "Deadlock";
    case ErrorCode::kInvalidFeedback: return "InvalidFeedback";
    case ErrorCode::kUnknownTarget: return "UnknownTarget";
    case ErrorCode::kTargetPending: return "TargetPending";
    case ErrorCode::kTraceTriggerUnknown: return "TraceTriggerUnknown";
    case ErrorCode::kCancelled: return "Cancelled";
    case ErrorCode::kAdapterError: return "AdapterError";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kNonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kOverlapTooLarge: return "OverlapTooLarge";
    case ErrorCode::kPastTime: return "PastTime";
    case ErrorCode::kSequenceGap: return "SequenceGap";
    case ErrorCode::kRunClosed: return "RunClosed";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kBadRequest: return "BadRequest";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

namespace {

std::string describe_cycle(const std::vector<EventId>& cycle) {
  std::string out = "dependency cycle ";
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (i > 0) out += " -> ";
    out += cycle[i];
  }
  return out;
}

}  // namespace

CycleError::CycleError(std::vector<EventId> cycle)
    : Error(ErrorCode::kCycle, describe_cycle(cycle)), cycle_(std::move(cycle)) {}

AdapterError::AdapterError(const std::string& message, bool retryable)
    : Error(ErrorCode::kAdapterError, message), retryable_(retryable) {}

}  // namespace filmflow
