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
#include <functional>
#include <map>
#include <memory>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/graph.hpp"
#include "filmflow/types.hpp"

namespace filmflow {

enum class ArtifactKind {
  kScript,
  kSceneFrame,
  kDialogue,
  kShotPlan,
  kVoiceTrack,
  kFinalCut,
  kMusic,
  kCustom,
};

std::string_view to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(std::string_view name);
ArtifactKind artifact_kind_for_role(std::string_view role);

// Immutable worker output. `content` is the verbatim payload (a compact JSON
// document for mock workers) and `content_hash` its SHA-256.
struct Artifact {
  std::string id;  // "<event>@<attempt>"
  EventId event;
  int attempt = 1;
  ArtifactKind kind = ArtifactKind::kCustom;
  std::string content;
  std::string content_hash;

  bool operator==(const Artifact&) const = default;
};

std::string artifact_id_for(const EventId& event, int attempt);
Artifact make_artifact(const EventId& event, int attempt, ArtifactKind kind,
                       std::string content);

enum class WorkerMode { kMock, kAdapter };

struct FixedDuration {
  Ticks ticks = 1;
};
// Uniform integer draw in [lo, hi], seeded from the run seed, event and attempt.
struct UniformDuration {
  Ticks lo = 1;
  Ticks hi = 1;
};
using DurationModel = std::variant<FixedDuration, UniformDuration>;

struct EndpointConfig {
  std::string address;          // "http://host:port/path"
  std::string credentials_ref;  // name of an environment variable, if any
};

struct WorkerSpec {
  std::string role;
  WorkerMode mode = WorkerMode::kMock;
  DurationModel duration_model = FixedDuration{};
  EndpointConfig endpoint;
};

// How a worker spends run-clock time. Both implementations throw Cancelled
// once the stop token is triggered.
class Pacer {
 public:
  virtual ~Pacer() = default;
  virtual void wait(Ticks duration, std::stop_token cancel) const = 0;
};

// Virtual time: the engine advances the clock, so waiting is instantaneous.
class VirtualPacer final : public Pacer {
 public:
  void wait(Ticks duration, std::stop_token cancel) const override;
};

// Sleeps duration * tick_ms, polling the stop token at least every 5 ms.
class WallPacer final : public Pacer {
 public:
  explicit WallPacer(int tick_ms) : tick_ms_(tick_ms) {}
  void wait(Ticks duration, std::stop_token cancel) const override;

 private:
  int tick_ms_;
};

struct ExecContext {
  std::uint64_t seed = kDefaultSeed;
  int attempt = 1;
  int try_index = 0;  // earlier failed tries of this attempt
  Ticks duration = 0;
  std::stop_token cancel;
  const Pacer* pacer = nullptr;
};

// Latest non-revoked artifact of each dependency, keyed by event id.
using InputArtifacts = std::map<EventId, Artifact>;

class Worker {
 public:
  virtual ~Worker() = default;

  virtual const WorkerSpec& spec() const = 0;
  virtual Ticks planned_duration(const EventSpec& event, int attempt,
                                 std::uint64_t seed) const;
  // Must be safe to call concurrently. Throws Cancelled, MissingInput,
  // AdapterError or WorkerFailure.
  virtual Artifact execute(const EventSpec& event, const InputArtifacts& inputs,
                           const ExecContext& ctx) const = 0;
};

// Deterministic stand-in for one crew role. The payload is a pure function of
// (event id, role, params, input hashes, seed); the attempt number only
// shows up in the artifact id. params["mock.fail"] = N makes the first N
// tries of every attempt fail.
class MockWorker final : public Worker {
 public:
  explicit MockWorker(WorkerSpec spec, std::vector<EmotionRule> rules = {});

  const WorkerSpec& spec() const override { return spec_; }
  Artifact execute(const EventSpec& event, const InputArtifacts& inputs,
                   const ExecContext& ctx) const override;

  // The payload alone, without pacing or failure injection.
  nlohmann::json payload(const EventSpec& event, const InputArtifacts& inputs,
                         std::uint64_t seed) const;

 private:
  WorkerSpec spec_;
  std::vector<EmotionRule> rules_;
};

// One request/response exchange per execution.
//   request:  {role, event_id, attempt, params, seed,
//              inputs: [{event_id, artifact_id, content_hash, kind}]}
//   response: {artifact: {kind, content}} | {error: {message, retryable}}
using Transport = std::function<nlohmann::json(const nlohmann::json& request)>;

// POSTs the request as JSON to endpoint.address.
Transport http_transport(const EndpointConfig& endpoint);

class AdapterWorker final : public Worker {
 public:
  AdapterWorker(WorkerSpec spec, Transport transport);

  const WorkerSpec& spec() const override { return spec_; }
  Artifact execute(const EventSpec& event, const InputArtifacts& inputs,
                   const ExecContext& ctx) const override;

  static nlohmann::json build_request(const EventSpec& event,
                                      const InputArtifacts& inputs,
                                      const ExecContext& ctx);

 private:
  WorkerSpec spec_;
  Transport transport_;
};

class WorkerRegistry {
 public:
  void add(std::shared_ptr<const Worker> worker);
  bool has(std::string_view role) const;
  const Worker& for_role(std::string_view role) const;  // NotFound
  std::vector<std::string> roles() const;

  // A mock worker for every role used by the pipeline, sharing its emotion
  // rule table (or the default table when the pipeline has none).
  static WorkerRegistry mock_crew(const ValidatedGraph& graph,
                                  DurationModel fallback = FixedDuration{});

 private:
  std::map<std::string, std::shared_ptr<const Worker>, std::less<>> workers_;
};

// script; art <- script; dialogue <- script; action <- art;
// voiceover <- dialogue; post <- {art, action, voiceover}
PipelineDef film_pipeline_preset();

// Resolves a preset name ("film"); NotFound otherwise.
PipelineDef preset_by_name(std::string_view name);

}  // namespace filmflow
