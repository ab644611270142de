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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/types.hpp"

namespace filmflow {

enum class RecordKind {
  kStart,
  kEnqueue,
  kRevoke,
  kComplete,
  kFeedback,
  kWait,
  kFinish,
};

std::string_view to_string(RecordKind kind);
RecordKind record_kind_from_string(std::string_view name);

// One state transition. A `complete` or `feedback` record opens a new slice;
// every other record belongs to the slice it names.
struct EventLogRecord {
  std::uint64_t seq = 0;
  Ticks time = 0;
  std::int64_t slice = 0;
  RecordKind kind = RecordKind::kWait;
  std::optional<EventId> event_id;
  std::optional<int> attempt;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const EventLogRecord&) const = default;
};

void to_json(nlohmann::json& j, const EventLogRecord& record);
void from_json(const nlohmann::json& j, EventLogRecord& record);

// Canonical single-line encoding (sorted keys, no whitespace, no newline).
std::string to_line(const EventLogRecord& record);
// Throws CorruptLog on malformed input. Blank lines are skipped.
std::vector<EventLogRecord> parse_log(std::string_view ndjson);

}  // namespace filmflow
