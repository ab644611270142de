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

// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "filmflow/crew.hpp"
#include "filmflow/feedback.hpp"
#include "filmflow/graph.hpp"
#include "filmflow/media.hpp"
#include "filmflow/scheduler.hpp"
#include "filmflow/simulate.hpp"
#include "filmflow/store.hpp"
#include "test_support.hpp"

namespace {

using namespace filmflow;
namespace oracle = filmflow::testing;

// Thrown by a check to report the first violation it finds.
struct Violation {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Violation{what};
}

struct Outcome {
  RunResult result;
  std::vector<EventLogRecord> log;
};

Outcome run(const PipelineDef& def, FeedbackTrace trace = {}, RunOptions options = {}) {
  const auto graph = validate_pipeline(def);
  const auto crew = WorkerRegistry::mock_crew(graph);
  RunHandle handle({"acceptance", def.name, options.seed}, std::nullopt);
  auto source = scripted_feedback_source(std::move(trace), FrequencyPolicy::no_limits(), graph);
  auto result = run_virtual(graph, crew, std::move(source), options, &handle);
  return {std::move(result), handle.log().read(0)};
}

std::string serialize(const std::vector<EventLogRecord>& log) {
  std::string out;
  for (const auto& r : log) out += to_line(r) + '\n';
  return out;
}

std::size_t index_of(const PipelineDef& def, const EventId& id) {
  for (std::size_t i = 0; i < def.events.size(); ++i) {
    if (def.events[i].id == id) return i;
  }
  throw Violation{"unknown event " + id};
}

EventId producer_of(const std::string& target) {
  return target.substr(0, target.find('@'));
}

void dependency_safety() {
  std::mt19937_64 rng(101);
  const auto begin = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    const auto def = oracle::random_pipeline(rng, {1, 50, 0.15, 0, 20});
    const auto trace = oracle::random_reject_trace(def, rng, static_cast<int>(rng() % 4));
    RunOptions options;
    options.seed = rng();
    const auto o = run(def, trace, options);
    require(o.result.status == RunStatus::kCompleted, "dag " + std::to_string(i) + " did not complete");
    const auto violation = oracle::dependency_violation(def, o.log);
    require(violation.empty(), "dag " + std::to_string(i) + ": " + violation);
  }
  const auto elapsed = std::chrono::steady_clock::now() - begin;
  require(elapsed < std::chrono::seconds(10), "200 runs took longer than 10 s");
}

void makespan_exactness() {
  const auto sim = simulate(film_pipeline_preset(), {});
  require(sim.parallel_makespan == 68, "film parallel " + std::to_string(sim.parallel_makespan));
  require(sim.serial_makespan == 95, "film serial " + std::to_string(sim.serial_makespan));
  require(sim.multiple_num == 68 && sim.multiple_den == 95, "film multiple is not 68/95");

  std::mt19937_64 rng(103);
  for (int i = 0; i < 100; ++i) {
    const auto def = oracle::random_pipeline(rng, {1, 12, 0.3, 0, 20});
    const auto o = run(def);
    const auto expected = oracle::brute_force_longest_path(def);
    require(o.result.makespan == expected, "dag " + std::to_string(i) + ": makespan " +
                                               std::to_string(o.result.makespan) + ", oracle " +
                                               std::to_string(expected));
  }
}

void speedup_direction() {
  std::mt19937_64 rng(107);
  const auto preset = film_pipeline_preset();
  for (int i = 0; i < 200; ++i) {
    DurationMap durations;
    for (const auto& e : preset.events) durations[e.id] = 1 + static_cast<Ticks>(rng() % 100);
    const auto sim = simulate(preset, durations);
    require(sim.multiple < 1.0, "durations set " + std::to_string(i) + " gives multiple " +
                                    std::to_string(sim.multiple));
  }
}

void wait_emission() {
  // An approval at t=15 opens a boundary while art and dialogue both run.
  FeedbackTrace trace{{{std::nullopt, 15},
                       {"fb-1", 0, "script", FeedbackKind::kYesNo, Verdict::kApprove, "", {}}}};
  const auto o = run(film_pipeline_preset(), trace);
  const auto opened = std::find_if(o.log.begin(), o.log.end(), [](const auto& r) {
    return r.kind == RecordKind::kFeedback;
  });
  require(opened != o.log.end() && opened->time == 15, "no feedback boundary at 15");
  bool waited = false;
  for (auto it = opened; it != o.log.end() && it->slice == opened->slice; ++it) {
    require(it->kind != RecordKind::kEnqueue, "enqueue while art and dialogue run");
    waited = waited || it->kind == RecordKind::kWait;
  }
  require(waited, "no wait record at t=15");
}

// Overlay each applied reject leaves on its target, rebuilt from the log.
std::map<EventId, Params> applied_overlays(const std::vector<EventLogRecord>& log) {
  std::map<EventId, Params> overlays;
  for (const auto& r : log) {
    if (r.kind != RecordKind::kFeedback || r.payload.at("status") != "applied") continue;
    const auto fb = r.payload.at("feedback").get<Feedback>();
    if (fb.verdict != Verdict::kReject) continue;
    auto& overlay = overlays[producer_of(fb.target)];
    if (fb.kind != FeedbackKind::kYesNo) overlay["director_note"] = fb.note;
    for (const auto& [key, value] : fb.amendments) overlay[key] = value;
  }
  return overlays;
}

// Returns how many events carried an overlay.
std::size_t expect_equivalent(const PipelineDef& def, const FeedbackTrace& trace,
                              const std::string& label, std::size_t min_overlays) {
  const auto with_feedback = run(def, trace);
  require(with_feedback.result.status == RunStatus::kCompleted, label + " did not complete");
  const auto overlays = applied_overlays(with_feedback.log);
  require(overlays.size() >= min_overlays, label + ": no reject was applied");
  auto amended = def;
  for (auto& e : amended.events) {
    if (auto it = overlays.find(e.id); it != overlays.end()) {
      for (const auto& [key, value] : it->second) e.params[key] = value;
    }
  }
  const auto fresh = run(amended);
  const auto& got = with_feedback.result.final_artifacts;
  const auto& want = fresh.result.final_artifacts;
  require(got.size() == want.size(), label + ": artifact sets differ in size");
  for (const auto& [id, artifact] : want) {
    const auto it = got.find(id);
    require(it != got.end(), label + ": missing artifact for " + id);
    require(it->second.content_hash == artifact.content_hash, label + ": hash differs for " + id);
  }
  return overlays.size();
}

void revocation_equivalence() {
  const auto preset = film_pipeline_preset();
  const auto trace = load_feedback_trace(FILMFLOW_TEST_DATA "/reject_dialogue.json");
  expect_equivalent(preset, trace, "film", 1);

  std::mt19937_64 rng(109);
  int amended_pairs = 0;
  for (int i = 0; i < 20; ++i) {
    const auto def = oracle::random_pipeline(rng, {2, 15, 0.3, 1, 20});
    const auto items = oracle::random_reject_trace(def, rng, 1 + static_cast<int>(rng() % 3));
    if (expect_equivalent(def, items, "dag " + std::to_string(i), 0) > 0) ++amended_pairs;
  }
  require(amended_pairs >= 15, "only " + std::to_string(amended_pairs) + " pairs applied a reject");
}

void replay_determinism() {
  const auto check = [](const PipelineDef& def, const FeedbackTrace& trace, const std::string& label) {
    const auto a = run(def, trace);
    const auto b = run(def, trace);
    require(serialize(a.log) == serialize(b.log), label + ": logs differ");
    const auto state = replay_records(a.log);
    require(state.latest_report == a.result.final_report, label + ": replay differs from report");
    require(state.status == a.result.status, label + ": replay status differs");
  };
  check(film_pipeline_preset(), load_feedback_trace(FILMFLOW_TEST_DATA "/reject_dialogue.json"),
        "film");
  std::mt19937_64 rng(113);
  for (int i = 0; i < 50; ++i) {
    const auto def = oracle::random_pipeline(rng, {1, 20, 0.25, 0, 20});
    check(def, oracle::random_reject_trace(def, rng, static_cast<int>(rng() % 3)),
          "dag " + std::to_string(i));
  }
}

void media_formulas() {
  for (std::int64_t l = 2; l <= 32; ++l) {
    for (std::int64_t t = 1; t <= 200; ++t) {
      const auto plan = plan_long_shot(t, l);
      const auto label = std::to_string(t) + "/" + std::to_string(l);
      std::vector<std::int64_t> lengths;
      for (const auto& s : plan.segments) lengths.push_back(s.length);
      require(lengths == oracle::enumerate_extension(t, l), label + ": segments differ");
      require(plan.total_frames() >= t, label + ": does not cover");
      require(plan.total_frames() - plan.segments.back().length < t, label + ": not minimal");
    }
  }

  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> seconds(0.001, 60.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = seconds(rng);
    const int fps = 1 + static_cast<int>(rng() % 60);
    const auto frames = shot_length_from_voiceover(s, fps);
    const auto closed = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(s * fps - 1e-9)));
    require(frames == closed, "shot length for " + std::to_string(s) + " s at " +
                                  std::to_string(fps) + " fps");

    const double overlap = static_cast<double>(rng() % 20) / 10.0;
    std::vector<std::pair<std::string, double>> scenes;
    double sum = 0;
    const auto n = 1 + rng() % 8;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = overlap + 0.1 + static_cast<double>(rng() % 100) / 10.0;
      scenes.emplace_back("s" + std::to_string(k), d);
      sum += d;
    }
    const auto timeline = build_edit_timeline(scenes, overlap, {}, "music");
    require(std::abs(timeline.total_duration() - (sum - static_cast<double>(n - 1) * overlap)) < 1e-9,
            "timeline total for input " + std::to_string(i));
  }
}

void cascade_closure() {
  std::mt19937_64 rng(131);
  int rejects = 0;
  for (int i = 0; i < 200; ++i) {
    const auto def = oracle::random_pipeline(rng, {2, 20, 0.3, 1, 20});
    const auto reach = oracle::reachability(def);
    const auto o = run(def, oracle::random_reject_trace(def, rng, 1 + static_cast<int>(rng() % 3)));
    const auto label = "dag " + std::to_string(i);

    // Fold the log; once a slice holding a reject closes, nothing reachable
    // from the target may still be running or done.
    LogFolder folder;
    std::optional<EventId> target;
    std::int64_t reject_slice = -1;
    for (const auto& r : o.log) {
      folder.apply(r);
      if (target && r.slice == reject_slice + 1) {
        const auto& report = folder.state().latest_report;
        const auto t = index_of(def, *target);
        for (std::size_t b = 0; b < def.events.size(); ++b) {
          if (b != t && !reach[t][b]) continue;
          const auto& id = def.events[b].id;
          require(!report.is_done(id) && !report.is_running(id),
                  label + ": " + id + " survives a reject of " + *target);
        }
        target.reset();
        ++rejects;
      }
      if (r.kind == RecordKind::kFeedback && r.payload.at("status") == "applied") {
        const auto fb = r.payload.at("feedback").get<Feedback>();
        if (fb.verdict == Verdict::kReject) {
          target = producer_of(fb.target);
          reject_slice = r.slice;
        }
      }
    }
  }
  require(rejects >= 200, "only " + std::to_string(rejects) + " rejects were checked");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"dependency-safety", dependency_safety},
      {"makespan-exactness", makespan_exactness},
      {"speedup-direction", speedup_direction},
      {"wait-emission", wait_emission},
      {"revocation-equivalence", revocation_equivalence},
      {"replay-determinism", replay_determinism},
      {"media-formulas", media_formulas},
      {"cascade-closure", cascade_closure},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    try {
      check();
      std::cout << "PASS " << name << '\n';
    } catch (const Violation& v) {
      std::cout << "FAIL " << name << ": " << v.what << '\n';
      ++failed;
    } catch (const std::exception& e) {
      std::cout << "FAIL " << name << ": " << e.what() << '\n';
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
