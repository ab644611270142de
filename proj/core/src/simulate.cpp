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

#include "filmflow/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "filmflow/crew.hpp"
#include "filmflow/error.hpp"
#include "filmflow/pipeline_io.hpp"
#include "filmflow/scheduler.hpp"

namespace filmflow {

PipelineDef with_durations(PipelineDef pipeline, const DurationMap& durations) {
  for (const auto& [id, d] : durations) {
    auto it = std::find_if(pipeline.events.begin(), pipeline.events.end(),
                           [&](const EventSpec& e) { return e.id == id; });
    if (it == pipeline.events.end()) {
      throw Error(ErrorCode::kUnknownId, "duration given for unknown event '" + id + "'");
    }
    if (d < 0) throw Error(ErrorCode::kInvalidParams, "negative duration for '" + id + "'");
    it->duration = d;
  }
  return pipeline;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

}  // namespace

DurationMap parse_duration_overrides(std::string_view text) {
  DurationMap out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(ErrorCode::kBadRequest, "expected id=ticks, got '" + std::string(item) + "'");
    }
    auto value = trim(item.substr(eq + 1));
    Ticks ticks = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), ticks);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw Error(ErrorCode::kBadRequest, "bad duration '" + std::string(value) + "'");
    }
    out[std::string(trim(item.substr(0, eq)))] = ticks;
  }
  return out;
}

SimReport simulate(const PipelineDef& pipeline, const DurationMap& durations,
                   const SimulateOptions& options) {
  const auto def = with_durations(pipeline, durations);
  const auto graph = validate_pipeline(def);
  declared_durations(graph);
  const auto workers = WorkerRegistry::mock_crew(graph);

  auto run_mode = [&](SchedulingMode mode) {
    RunOptions run_options{mode, options.seed};
    std::optional<RunHandle> handle;
    if (options.run_dir) {
      handle.emplace(RunMeta{std::string(to_string(mode)), graph.name(), options.seed},
                     *options.run_dir / std::string(to_string(mode)));
      handle->save_pipeline(def);
    }
    auto source = scripted_feedback_source(options.trace, options.policy, graph);
    return run_virtual(graph, workers, std::move(source), run_options,
                       handle ? &*handle : nullptr);
  };
  const auto parallel = run_mode(SchedulingMode::kParallel);
  const auto serial = run_mode(SchedulingMode::kSerial);

  SimReport report;
  report.parallel_makespan = parallel.makespan;
  report.serial_makespan = serial.makespan;
  if (serial.makespan > 0) {
    const auto g = std::gcd(parallel.makespan, serial.makespan);
    report.multiple_num = parallel.makespan / g;
    report.multiple_den = serial.makespan / g;
    report.multiple = static_cast<double>(parallel.makespan) / static_cast<double>(serial.makespan);
  }
  report.slice_count = parallel.slice_count;
  report.revocation_count = static_cast<std::int64_t>(parallel.final_report.revoked_history.size());
  for (const auto& e : graph.events()) report.attempts[e.id] = parallel.final_report.attempt_of(e.id);
  return report;
}

void to_json(nlohmann::json& j, const SimReport& r) {
  j = {{"serial_makespan", r.serial_makespan},
       {"parallel_makespan", r.parallel_makespan},
       {"multiple", r.multiple},
       {"multiple_fraction", std::to_string(r.multiple_num) + "/" + std::to_string(r.multiple_den)},
       {"slice_count", r.slice_count},
       {"revocation_count", r.revocation_count},
       {"attempts", r.attempts}};
}

}  // namespace filmflow
