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

// filmflow: run pipelines, compare serial and parallel schedules, replay logs,
// export Gantt rows and launch the HTTP service.
//
// Exit codes: 0 success, 1 validation or user error, 2 internal invariant
// failure (including a replay that does not match its stored state). Every
// flag can also be set through FILMFLOW_<FLAG>; flags win.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "filmflow/crew.hpp"
#include "filmflow/error.hpp"
#include "filmflow/pipeline_io.hpp"
#include "filmflow/scheduler.hpp"
#include "filmflow/service.hpp"
#include "filmflow/simulate.hpp"

namespace {

using namespace filmflow;
namespace fs = std::filesystem;

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

struct Flags {
  std::string pipeline;
  std::string preset;
  std::string mode = "both";
  std::uint64_t seed = kDefaultSeed;
  std::string feedback;
  std::string policy = "no_limits";
  std::string durations;
  std::string out;
  std::string run_dir;
  std::string log;
  std::string clock = "wall";
  int tick_ms = 10;
  std::int64_t review_window_ms = 0;
  std::string listen = "127.0.0.1:8080";
  std::string data_dir;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCorruptLog:
    case ErrorCode::kDeadlock:
    case ErrorCode::kInconsistentReport:
    case ErrorCode::kInvalidDecision:
    case ErrorCode::kUnknownCompletion:
    case ErrorCode::kSequenceGap:
      return kInternalError;
    default:
      return kUserError;
  }
}

PipelineDef load_selected_pipeline(const Flags& f) {
  if (!f.pipeline.empty() && !f.preset.empty()) {
    throw Error(ErrorCode::kBadRequest, "give either --pipeline or --preset, not both");
  }
  if (!f.pipeline.empty()) return load_pipeline(f.pipeline);
  return preset_by_name(f.preset.empty() ? "film" : f.preset);
}

void emit(const Flags& f, const nlohmann::json& doc) {
  const auto text = doc.dump(2) + "\n";
  std::cout << text;
  if (!f.out.empty()) {
    std::ofstream out(f.out, std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + f.out);
  }
}

FeedbackTrace selected_trace(const Flags& f) {
  return f.feedback.empty() ? FeedbackTrace{} : load_feedback_trace(f.feedback);
}

nlohmann::json run_summary(const RunResult& r, const ValidatedGraph& graph) {
  nlohmann::json attempts = nlohmann::json::object();
  for (const auto& e : graph.events()) attempts[e.id] = r.final_report.attempt_of(e.id);
  nlohmann::json doc = {{"status", to_string(r.status)},
                        {"makespan", r.makespan},
                        {"slice_count", r.slice_count},
                        {"revocation_count", r.final_report.revoked_history.size()},
                        {"attempts", attempts},
                        {"event_log", r.event_log_ref}};
  if (r.failure) doc["failure"] = *r.failure;
  return doc;
}

int cmd_simulate(const Flags& f) {
  const auto def = load_selected_pipeline(f);
  const auto durations = parse_duration_overrides(f.durations);
  if (f.mode == "both") {
    SimulateOptions options;
    options.seed = f.seed;
    options.trace = selected_trace(f);
    options.policy = FrequencyPolicy::from_name(f.policy);
    if (!f.run_dir.empty()) options.run_dir = fs::path(f.run_dir);
    emit(f, simulate(def, durations, options));
    return 0;
  }
  const auto mode = scheduling_mode_from_string(f.mode);
  const auto pipeline = with_durations(def, durations);
  const auto graph = validate_pipeline(pipeline);
  declared_durations(graph);
  const auto workers = WorkerRegistry::mock_crew(graph);
  std::optional<RunHandle> handle;
  if (!f.run_dir.empty()) {
    handle.emplace(RunMeta{std::string(to_string(mode)), graph.name(), f.seed}, fs::path(f.run_dir));
    handle->save_pipeline(pipeline);
  }
  auto source = scripted_feedback_source(selected_trace(f), FrequencyPolicy::from_name(f.policy), graph);
  const auto result = run_virtual(graph, workers, std::move(source), RunOptions{mode, f.seed},
                                  handle ? &*handle : nullptr);
  auto doc = run_summary(result, graph);
  doc["mode"] = to_string(mode);
  emit(f, doc);
  return result.status == RunStatus::kCompleted ? 0 : kUserError;
}

int cmd_run(const Flags& f) {
  const auto def = with_durations(load_selected_pipeline(f), parse_duration_overrides(f.durations));
  const auto graph = validate_pipeline(def);
  const auto workers = WorkerRegistry::mock_crew(graph);
  const auto mode = scheduling_mode_from_string(f.mode == "both" ? "parallel" : f.mode);
  const fs::path dir = f.run_dir.empty() ? fs::path("runs") / graph.name() : fs::path(f.run_dir);
  RunHandle handle(RunMeta{dir.filename().string(), graph.name(), f.seed}, dir);
  handle.save_pipeline(def);
  std::unique_ptr<SliceClock> clock;
  if (f.clock == "virtual") {
    clock = std::make_unique<VirtualSliceClock>();
  } else if (f.clock == "wall") {
    clock = std::make_unique<WallSliceClock>(
        WallClockOptions{f.tick_ms, std::chrono::milliseconds(f.review_window_ms)});
  } else {
    throw Error(ErrorCode::kBadRequest, "unknown clock '" + f.clock + "'");
  }
  auto source = scripted_feedback_source(selected_trace(f), FrequencyPolicy::from_name(f.policy), graph);
  Director director(graph, workers, *clock, handle, RunOptions{mode, f.seed});

  std::optional<RunResult> result;
  std::exception_ptr error;
  std::atomic<bool> finished{false};
  std::jthread loop([&] {
    try {
      result = director.run(std::move(source));
    } catch (...) {
      error = std::current_exception();
    }
    finished = true;
  });
  std::uint64_t next = 0;
  while (true) {
    for (const auto& r : handle.log().read(next)) {
      std::cerr << to_line(r) << '\n';
      next = r.seq + 1;
    }
    if (handle.log().closed() && next >= handle.log().next_seq()) break;
    if (finished && next >= handle.log().next_seq()) break;
    handle.log().wait_for(next, std::chrono::milliseconds(100));
  }
  loop.join();
  if (error) std::rethrow_exception(error);
  auto doc = run_summary(*result, graph);
  doc["run_dir"] = dir.string();
  emit(f, doc);
  return result->status == RunStatus::kCompleted ? 0 : kUserError;
}

fs::path log_path(const Flags& f) {
  if (!f.log.empty()) return f.log;
  if (!f.run_dir.empty()) return fs::path(f.run_dir) / "log.ndjson";
  throw Error(ErrorCode::kBadRequest, "give --run-dir or --log");
}

int cmd_replay(const Flags& f) {
  if (f.run_dir.empty()) throw Error(ErrorCode::kBadRequest, "replay needs --run-dir");
  if (!fs::exists(fs::path(f.run_dir) / "log.ndjson")) {
    throw Error(ErrorCode::kNotFound, "no log.ndjson under " + f.run_dir);
  }
  const auto v = verify_run_dir(f.run_dir);
  nlohmann::json doc = {{"status", v.verified ? "verified" : "mismatch"},
                        {"run_status", to_string(v.replayed.status)},
                        {"slice_count", v.replayed.slice_count()},
                        {"time", v.replayed.latest_report.time},
                        {"done", v.replayed.latest_report.done.size()},
                        {"revocations", v.replayed.latest_report.revoked_history.size()}};
  if (!v.verified) doc["mismatch"] = v.mismatch;
  emit(f, doc);
  return v.verified ? 0 : kInternalError;
}

int cmd_gantt(const Flags& f) {
  std::ifstream in(log_path(f), std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + log_path(f).string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto records = parse_log(buffer.str());
  emit(f, {{"rows", gantt_rows(records)}});
  return 0;
}

int cmd_validate(const Flags& f) {
  const auto graph = validate_pipeline(load_selected_pipeline(f));
  nlohmann::json doc = {{"valid", true},
                        {"name", graph.name()},
                        {"events", graph.size()},
                        {"edges", graph.edge_count()},
                        {"topo_order", graph.topo_order()}};
  bool timed = std::all_of(graph.events().begin(), graph.events().end(),
                           [](const EventSpec& e) { return e.duration.has_value(); });
  if (timed) {
    const auto durations = declared_durations(graph);
    const auto cp = critical_path(graph, durations);
    doc["critical_path"] = {{"length", cp.length}, {"path", cp.path}};
    doc["serial_makespan"] = serial_makespan(graph, durations);
  }
  emit(f, doc);
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int cmd_serve(const Flags& f) {
  ServiceOptions options;
  auto colon = f.listen.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kBadRequest, "--listen wants HOST:PORT");
  options.host = f.listen.substr(0, colon);
  try {
    options.port = std::stoi(f.listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kBadRequest, "bad port in '" + f.listen + "'");
  }
  if (!f.data_dir.empty()) options.manager.data_dir = fs::path(f.data_dir);
  options.manager.tick_ms = f.tick_ms;
  if (f.review_window_ms > 0) {
    options.manager.review_window = std::chrono::milliseconds(f.review_window_ms);
  }
  Service service(options);
  service.start();
  std::cerr << "listening on " << options.host << ":" << service.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return 0;
}

void add_pipeline_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--pipeline", f.pipeline, "Pipeline definition (.json, .yaml)")
      ->envname("FILMFLOW_PIPELINE");
  cmd->add_option("--preset", f.preset, "Bundled pipeline name (film)")->envname("FILMFLOW_PRESET");
}

void add_run_flags(CLI::App* cmd, Flags& f) {
  add_pipeline_flags(cmd, f);
  cmd->add_option("--seed", f.seed, "Run seed")->envname("FILMFLOW_SEED");
  cmd->add_option("--feedback", f.feedback, "Feedback trace file")->envname("FILMFLOW_FEEDBACK");
  cmd->add_option("--policy", f.policy, "Interaction frequency: none, low, intermediate, no_limits")
      ->envname("FILMFLOW_POLICY");
  cmd->add_option("--durations", f.durations, "Duration overrides, id=ticks,...")
      ->envname("FILMFLOW_DURATIONS");
  cmd->add_option("--run-dir", f.run_dir, "Directory for the run's log, state and artifacts")
      ->envname("FILMFLOW_RUN_DIR");
  cmd->add_option("--out", f.out, "Also write the report to this file")->envname("FILMFLOW_OUT");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filmflow: DAG orchestration for film production crews"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate_cmd = app.add_subcommand("simulate", "Compare serial and parallel virtual runs");
  add_run_flags(simulate_cmd, f);
  simulate_cmd->add_option("--mode", f.mode, "parallel, serial or both")->envname("FILMFLOW_MODE");

  auto* run_cmd = app.add_subcommand("run", "Execute a pipeline, streaming its log to stderr");
  add_run_flags(run_cmd, f);
  run_cmd->add_option("--mode", f.mode, "parallel or serial")->envname("FILMFLOW_MODE");
  run_cmd->add_option("--clock", f.clock, "virtual or wall")->envname("FILMFLOW_CLOCK");
  run_cmd->add_option("--tick-ms", f.tick_ms, "Wall milliseconds per duration unit")
      ->envname("FILMFLOW_TICK_MS");
  run_cmd->add_option("--review-window-ms", f.review_window_ms,
                      "Time after completion during which feedback may reopen the run")
      ->envname("FILMFLOW_REVIEW_WINDOW_MS");

  auto* replay_cmd = app.add_subcommand("replay", "Fold a run's log and compare with its state");
  replay_cmd->add_option("--run-dir", f.run_dir, "Run directory")->envname("FILMFLOW_RUN_DIR");
  replay_cmd->add_option("--out", f.out, "Also write the report here")->envname("FILMFLOW_OUT");

  auto* gantt_cmd = app.add_subcommand("gantt", "Export Gantt rows from a log");
  gantt_cmd->add_option("--run-dir", f.run_dir, "Run directory")->envname("FILMFLOW_RUN_DIR");
  gantt_cmd->add_option("--log", f.log, "Log file")->envname("FILMFLOW_LOG");
  gantt_cmd->add_option("--out", f.out, "Also write the rows here")->envname("FILMFLOW_OUT");

  auto* validate_cmd = app.add_subcommand("validate", "Check a pipeline definition");
  add_pipeline_flags(validate_cmd, f);
  validate_cmd->add_option("--out", f.out, "Also write the report here")->envname("FILMFLOW_OUT");

  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--listen", f.listen, "HOST:PORT (port 0 picks one)")
      ->envname("FILMFLOW_LISTEN");
  serve_cmd->add_option("--data-dir", f.data_dir, "Persist runs under this directory")
      ->envname("FILMFLOW_DATA_DIR");
  serve_cmd->add_option("--tick-ms", f.tick_ms, "Wall milliseconds per duration unit")
      ->envname("FILMFLOW_TICK_MS");
  serve_cmd->add_option("--review-window-ms", f.review_window_ms, "Default review window")
      ->envname("FILMFLOW_REVIEW_WINDOW_MS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUserError;
  }

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(f);
    if (run_cmd->parsed()) return cmd_run(f);
    if (replay_cmd->parsed()) return cmd_replay(f);
    if (gantt_cmd->parsed()) return cmd_gantt(f);
    if (validate_cmd->parsed()) return cmd_validate(f);
    if (serve_cmd->parsed()) return cmd_serve(f);
  } catch (const CycleError& e) {
    nlohmann::json cycle = e.cycle();
    std::cerr << "error: " << e.what() << " " << cycle.dump() << '\n';
    return kUserError;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kUserError;
}
