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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "filmflow/event_log.hpp"
#include "filmflow/feedback.hpp"
#include "filmflow/graph.hpp"

namespace filmflow::testing {

// Events "e00".."eNN"; each may depend on any earlier event, so the result is
// acyclic by construction. Roles cycle through a small mixed pool.
struct DagShape {
  int min_events = 1;
  int max_events = 12;
  double edge_probability = 0.3;
  Ticks min_duration = 0;
  Ticks max_duration = 20;
};

PipelineDef random_pipeline(std::mt19937_64& rng, const DagShape& shape);

// Adds one back edge to a random pipeline with at least two events.
PipelineDef with_back_edge(PipelineDef def, std::mt19937_64& rng);

// Reject trace items: each picks a random event and fires after its first
// completion; some are Detailed with an amendment.
FeedbackTrace random_reject_trace(const PipelineDef& def, std::mt19937_64& rng, int items);

// Independent oracles. None of them call into the library's graph code.

// Warshall transitive closure over the dependency relation:
// reach[a][b] means b is reachable from a along dependency -> dependent edges.
std::vector<std::vector<bool>> reachability(const PipelineDef& def);
bool has_cycle(const PipelineDef& def);

// Longest path by enumerating every path from every event.
Ticks brute_force_longest_path(const PipelineDef& def);
Ticks sum_of_durations(const PipelineDef& def);

// Hand discrete-event simulation with unlimited workers: each event starts
// when its last dependency finishes.
Ticks simulate_unlimited(const PipelineDef& def);

// Segment lengths obtained by adding rounds of L - 1 frames after a first
// round of min(T, L) until T frames are covered.
std::vector<std::int64_t> enumerate_extension(std::int64_t target, std::int64_t segment_len);

// Scans a log in seq order and returns the first dependency violation: a start
// whose dependency lacks a live successful completion at or before the start.
// Empty when the log is safe.
std::string dependency_violation(const PipelineDef& def, std::span<const EventLogRecord> log);

}  // namespace filmflow::testing
