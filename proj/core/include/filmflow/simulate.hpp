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
#include <filesystem>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "filmflow/feedback.hpp"
#include "filmflow/graph.hpp"

namespace filmflow {

// Serial vs parallel comparison. `multiple` is parallel / serial, kept both
// as a reduced fraction and as a double; an all-zero pipeline reports 1/1.
struct SimReport {
  Ticks serial_makespan = 0;
  Ticks parallel_makespan = 0;
  std::int64_t multiple_num = 1;
  std::int64_t multiple_den = 1;
  double multiple = 1.0;
  std::int64_t slice_count = 0;       // parallel run
  std::int64_t revocation_count = 0;  // parallel run
  std::map<EventId, int> attempts;    // parallel run, final attempt per event

  bool operator==(const SimReport&) const = default;
};

struct SimulateOptions {
  std::uint64_t seed = kDefaultSeed;
  FeedbackTrace trace;
  FrequencyPolicy policy = FrequencyPolicy::no_limits();
  // When set, the two runs are persisted under <run_dir>/parallel and
  // <run_dir>/serial.
  std::optional<std::filesystem::path> run_dir;
};

// Runs the pipeline in both modes on the virtual clock with identical seeds
// and the same feedback trace. `durations` overrides declared durations.
SimReport simulate(const PipelineDef& pipeline, const DurationMap& durations,
                   const SimulateOptions& options = {});

void to_json(nlohmann::json& j, const SimReport& report);

// "script=10,art=20" -> map. Throws BadRequest on malformed input.
DurationMap parse_duration_overrides(std::string_view text);

PipelineDef with_durations(PipelineDef pipeline, const DurationMap& durations);

}  // namespace filmflow
