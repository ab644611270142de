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

#include "filmflow/event_log.hpp"

#include <array>

#include "filmflow/error.hpp"

namespace filmflow {

namespace {

constexpr std::array<std::pair<RecordKind, std::string_view>, 7> kKinds{{
    {RecordKind::kStart, "start"},
    {RecordKind::kEnqueue, "enqueue"},
    {RecordKind::kRevoke, "revoke"},
    {RecordKind::kComplete, "complete"},
    {RecordKind::kFeedback, "feedback"},
    {RecordKind::kWait, "wait"},
    {RecordKind::kFinish, "finish"},
}};

}  // namespace

std::string_view to_string(RecordKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "wait";
}

RecordKind record_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::kCorruptLog, "unknown record kind '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const EventLogRecord& record) {
  j = {{"seq", record.seq},
       {"time", record.time},
       {"slice", record.slice},
       {"kind", to_string(record.kind)},
       {"payload", record.payload}};
  j["event_id"] = record.event_id ? nlohmann::json(*record.event_id) : nlohmann::json();
  j["attempt"] = record.attempt ? nlohmann::json(*record.attempt) : nlohmann::json();
}

void from_json(const nlohmann::json& j, EventLogRecord& record) {
  record.seq = j.at("seq").get<std::uint64_t>();
  record.time = j.at("time").get<Ticks>();
  record.slice = j.at("slice").get<std::int64_t>();
  record.kind = record_kind_from_string(j.at("kind").get<std::string>());
  record.event_id.reset();
  record.attempt.reset();
  if (j.contains("event_id") && !j.at("event_id").is_null()) {
    record.event_id = j.at("event_id").get<std::string>();
  }
  if (j.contains("attempt") && !j.at("attempt").is_null()) {
    record.attempt = j.at("attempt").get<int>();
  }
  record.payload = j.value("payload", nlohmann::json::object());
}

std::string to_line(const EventLogRecord& record) {
  return nlohmann::json(record).dump();
}

std::vector<EventLogRecord> parse_log(std::string_view ndjson) {
  std::vector<EventLogRecord> out;
  std::size_t line_no = 0;
  while (!ndjson.empty()) {
    ++line_no;
    auto end = ndjson.find('\n');
    auto line = ndjson.substr(0, end);
    ndjson = end == std::string_view::npos ? std::string_view{} : ndjson.substr(end + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<EventLogRecord>());
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace filmflow
