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

#include "filmflow/crew.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <thread>

#include "filmflow/error.hpp"
#include "filmflow/hash.hpp"
#include "filmflow/media.hpp"
#include "filmflow/pipeline_io.hpp"

namespace filmflow {

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kScript: return "script";
    case ArtifactKind::kSceneFrame: return "scene_frame";
    case ArtifactKind::kDialogue: return "dialogue";
    case ArtifactKind::kShotPlan: return "shot_plan";
    case ArtifactKind::kVoiceTrack: return "voice_track";
    case ArtifactKind::kFinalCut: return "final_cut";
    case ArtifactKind::kMusic: return "music";
    case ArtifactKind::kCustom: return "custom";
  }
  return "custom";
}

ArtifactKind artifact_kind_from_string(std::string_view name) {
  for (auto kind : {ArtifactKind::kScript, ArtifactKind::kSceneFrame, ArtifactKind::kDialogue,
                    ArtifactKind::kShotPlan, ArtifactKind::kVoiceTrack, ArtifactKind::kFinalCut,
                    ArtifactKind::kMusic, ArtifactKind::kCustom}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kBadRequest, "unknown artifact kind '" + std::string(name) + "'");
}

ArtifactKind artifact_kind_for_role(std::string_view role) {
  if (role == "scriptwriter") return ArtifactKind::kScript;
  if (role == "artist") return ArtifactKind::kSceneFrame;
  if (role == "actors") return ArtifactKind::kDialogue;
  if (role == "action") return ArtifactKind::kShotPlan;
  if (role == "voiceover") return ArtifactKind::kVoiceTrack;
  if (role == "post") return ArtifactKind::kFinalCut;
  if (role == "composer") return ArtifactKind::kMusic;
  return ArtifactKind::kCustom;
}

std::string artifact_id_for(const EventId& event, int attempt) {
  return event + "@" + std::to_string(attempt);
}

Artifact make_artifact(const EventId& event, int attempt, ArtifactKind kind,
                       std::string content) {
  Artifact a;
  a.id = artifact_id_for(event, attempt);
  a.event = event;
  a.attempt = attempt;
  a.kind = kind;
  a.content_hash = sha256_hex(content);
  a.content = std::move(content);
  return a;
}

void VirtualPacer::wait(Ticks /*duration*/, std::stop_token cancel) const {
  if (cancel.stop_requested()) throw Error(ErrorCode::kCancelled, "execution cancelled");
}

void WallPacer::wait(Ticks duration, std::stop_token cancel) const {
  using namespace std::chrono;
  const auto deadline = steady_clock::now() + milliseconds(duration * tick_ms_);
  while (true) {
    if (cancel.stop_requested()) throw Error(ErrorCode::kCancelled, "execution cancelled");
    auto now = steady_clock::now();
    if (now >= deadline) return;
    std::this_thread::sleep_for(std::min<steady_clock::duration>(deadline - now, 5ms));
  }
}

namespace {

std::uint64_t seed_from(std::string_view material) {
  return std::stoull(sha256_hex(material).substr(0, 16), nullptr, 16);
}

void check_inputs(const EventSpec& event, const InputArtifacts& inputs) {
  for (const auto& dep : event.dependencies) {
    if (!inputs.contains(dep)) {
      throw Error(ErrorCode::kMissingInput,
                  "event '" + event.id + "' is missing the artifact of '" + dep + "'");
    }
  }
}

int param_int(const Params& params, const std::string& key, int fallback, int lo, int hi) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    return std::clamp(std::stoi(it->second), lo, hi);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidParams, "param '" + key + "' must be an integer");
  }
}

double param_double(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidParams, "param '" + key + "' must be a number");
  }
}

std::string param_or(const Params& params, const std::string& key, std::string fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::vector<nlohmann::json> parsed_inputs(const InputArtifacts& inputs) {
  std::vector<nlohmann::json> out;
  for (const auto& [dep, artifact] : inputs) {
    auto doc = nlohmann::json::parse(artifact.content, nullptr, /*allow_exceptions=*/false);
    out.push_back(doc.is_discarded() ? nlohmann::json::object() : doc);
  }
  return out;
}

// Scene ids come from the script if one is upstream, else from any input
// listing per-scene entries.
std::vector<std::string> scene_ids(const std::vector<nlohmann::json>& docs) {
  for (const auto& doc : docs) {
    if (doc.value("kind", "") == "script" && doc.contains("scenes")) {
      std::vector<std::string> ids;
      for (const auto& s : doc.at("scenes")) ids.push_back(s.at("id").get<std::string>());
      return ids;
    }
  }
  for (const auto& doc : docs) {
    for (const char* field : {"frames", "shots", "lines", "tracks"}) {
      if (!doc.contains(field)) continue;
      std::vector<std::string> ids;
      for (const auto& item : doc.at(field)) {
        auto id = item.value("scene", std::string{});
        if (!id.empty() && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      if (!ids.empty()) return ids;
    }
  }
  return {"scene-1"};
}

std::string hex_token(std::mt19937_64& rng) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::uint64_t value = rng();
  std::string out(8, '0');
  for (auto& c : out) {
    c = kHex[value & 0xf];
    value >>= 4;
  }
  return out;
}

constexpr const char* kSettings[] = {"wedding hall", "city gate", "battlefield", "courtyard",
                                     "riverbank", "war council tent"};
constexpr const char* kBeats[] = {"the summons arrives", "a farewell is exchanged",
                                  "the march begins", "an oath is sworn",
                                  "a letter is read aloud", "the drums fall silent"};
constexpr const char* kLines[] = {
    "How dare you summon me today!", "What? The war has started?",
    "Keep quiet, the guests are listening.", "I will come back to you.",
    "Really? Tonight of all nights?", "Hush, let the drums speak.",
    "The river remembers every promise.", "How could they ask this of us?"};
constexpr const char* kSpeakers[] = {"General", "Bride", "Herald", "Mother"};
constexpr const char* kMoods[] = {"melancholy", "heroic", "tender", "ominous"};

template <std::size_t N>
const char* pick(const char* const (&pool)[N], std::mt19937_64& rng) {
  return pool[rng() % N];
}

}  // namespace

Ticks Worker::planned_duration(const EventSpec& event, int attempt,
                               std::uint64_t seed) const {
  if (event.duration) return *event.duration;
  return std::visit(
      [&](const auto& model) -> Ticks {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, FixedDuration>) {
          return model.ticks;
        } else {
          if (model.hi < model.lo) throw Error(ErrorCode::kInvalidParams, "empty duration range");
          std::mt19937_64 rng(seed_from(std::to_string(seed) + "|duration|" + event.id + "|" +
                                        std::to_string(attempt)));
          auto span = static_cast<std::uint64_t>(model.hi - model.lo) + 1;
          return model.lo + static_cast<Ticks>(rng() % span);
        }
      },
      spec().duration_model);
}

MockWorker::MockWorker(WorkerSpec spec, std::vector<EmotionRule> rules)
    : spec_(std::move(spec)), rules_(std::move(rules)) {
  if (const auto* fixed = std::get_if<FixedDuration>(&spec_.duration_model);
      fixed && fixed->ticks < 0) {
    throw Error(ErrorCode::kInvalidParams, "mock durations must be nonnegative");
  }
  if (const auto* uniform = std::get_if<UniformDuration>(&spec_.duration_model);
      uniform && (uniform->lo < 0 || uniform->hi < uniform->lo)) {
    throw Error(ErrorCode::kInvalidParams, "mock duration range must be nonnegative");
  }
}

nlohmann::json MockWorker::payload(const EventSpec& event, const InputArtifacts& inputs,
                                   std::uint64_t seed) const {
  nlohmann::json input_hashes = nlohmann::json::object();
  for (const auto& [dep, artifact] : inputs) input_hashes[dep] = artifact.content_hash;
  nlohmann::json params = event.params;

  std::mt19937_64 rng(seed_from(std::to_string(seed) + "|" + event.id + "|" + spec_.role + "|" +
                                params.dump() + "|" + input_hashes.dump()));
  const ArtifactKind kind = artifact_kind_for_role(spec_.role);
  const auto docs = parsed_inputs(inputs);

  nlohmann::json doc = {{"kind", to_string(kind)},
                        {"event", event.id},
                        {"role", spec_.role},
                        {"params", params},
                        {"inputs", input_hashes},
                        {"seed", seed}};

  switch (kind) {
    case ArtifactKind::kScript: {
      const int count = param_int(event.params, "scenes", 3, 1, 20);
      nlohmann::json scenes = nlohmann::json::array();
      for (int i = 1; i <= count; ++i) {
        scenes.push_back({{"id", "scene-" + std::to_string(i)},
                          {"setting", pick(kSettings, rng)},
                          {"beat", pick(kBeats, rng)}});
      }
      doc["title"] = param_or(event.params, "requirement", "untitled");
      doc["scenes"] = scenes;
      break;
    }
    case ArtifactKind::kSceneFrame: {
      nlohmann::json frames = nlohmann::json::array();
      for (const auto& scene : scene_ids(docs)) {
        frames.push_back({{"scene", scene}, {"frame", "frame-" + hex_token(rng)}});
      }
      doc["frames"] = frames;
      break;
    }
    case ArtifactKind::kDialogue: {
      const int per_scene = param_int(event.params, "lines_per_scene", 2, 1, 12);
      std::vector<std::string> texts;
      nlohmann::json lines = nlohmann::json::array();
      for (const auto& scene : scene_ids(docs)) {
        for (int i = 0; i < per_scene; ++i) {
          texts.emplace_back(pick(kLines, rng));
          lines.push_back({{"scene", scene}, {"speaker", pick(kSpeakers, rng)},
                           {"text", texts.back()}});
        }
      }
      const auto rules = rules_.empty() ? default_emotion_rules() : rules_;
      for (const auto& tag : assign_emotions(texts, rules)) {
        lines[tag.line_index]["emotion"] = tag.emotion;
      }
      doc["lines"] = lines;
      break;
    }
    case ArtifactKind::kVoiceTrack: {
      nlohmann::json tracks = nlohmann::json::array();
      const std::string voice = param_or(event.params, "voice", "narrator");
      for (const auto& d : docs) {
        if (!d.contains("lines")) continue;
        std::size_t index = 0;
        for (const auto& line : d.at("lines")) {
          const auto text = line.value("text", std::string{});
          const auto words = 1 + std::count(text.begin(), text.end(), ' ');
          tracks.push_back({{"scene", line.value("scene", "scene-1")},
                            {"line", index++},
                            {"emotion", line.value("emotion", std::string(kNeutralEmotion))},
                            {"voice", voice},
                            {"millis", 200 + 300 * words}});
        }
      }
      if (tracks.empty()) {
        for (const auto& scene : scene_ids(docs)) {
          tracks.push_back({{"scene", scene}, {"line", 0}, {"emotion", kNeutralEmotion},
                            {"voice", voice}, {"millis", 1000}});
        }
      }
      doc["tracks"] = tracks;
      break;
    }
    case ArtifactKind::kShotPlan: {
      const int segment_len = param_int(event.params, "segment_len", 14, 2, 1000);
      nlohmann::json shots = nlohmann::json::array();
      for (const auto& scene : scene_ids(docs)) {
        const int target = event.params.contains("frames")
                               ? param_int(event.params, "frames", 1, 1, 100000)
                               : 20 + static_cast<int>(rng() % 41);
        shots.push_back({{"scene", scene}, {"plan", plan_long_shot(target, segment_len)}});
      }
      doc["shots"] = shots;
      break;
    }
    case ArtifactKind::kFinalCut: {
      const int fps = param_int(event.params, "fps", 8, 1, 240);
      const double overlap = param_double(event.params, "overlap", 0.5);
      std::map<std::string, std::int64_t> voice_millis;
      std::vector<std::string> voice_refs;
      for (const auto& [dep, artifact] : inputs) {
        auto d = nlohmann::json::parse(artifact.content, nullptr, false);
        if (d.is_discarded() || !d.contains("tracks")) continue;
        voice_refs.push_back("voice:" + artifact.content_hash.substr(0, 16));
        for (const auto& t : d.at("tracks")) {
          voice_millis[t.value("scene", "scene-1")] += t.value("millis", std::int64_t{0});
        }
      }
      std::vector<std::pair<std::string, double>> scenes;
      nlohmann::json frames = nlohmann::json::object();
      for (const auto& scene : scene_ids(docs)) {
        auto it = voice_millis.find(scene);
        const double seconds = it == voice_millis.end() ? 1.0 : it->second / 1000.0;
        const auto shot_frames = shot_length_from_voiceover(seconds, fps);
        frames[scene] = shot_frames;
        scenes.emplace_back(scene, static_cast<double>(shot_frames) / fps);
      }
      const std::string music = "music:" + sha256_hex(input_hashes.dump() + std::to_string(seed))
                                               .substr(0, 16);
      doc["shot_frames"] = frames;
      doc["timeline"] = build_edit_timeline(scenes, overlap, voice_refs, music);
      break;
    }
    case ArtifactKind::kMusic:
      doc["mood"] = pick(kMoods, rng);
      doc["track"] = "music-" + hex_token(rng);
      break;
    case ArtifactKind::kCustom:
      doc["token"] = hex_token(rng);
      break;
  }
  return doc;
}

Artifact MockWorker::execute(const EventSpec& event, const InputArtifacts& inputs,
                             const ExecContext& ctx) const {
  check_inputs(event, inputs);
  if (ctx.pacer != nullptr) ctx.pacer->wait(ctx.duration, ctx.cancel);
  const int planned_failures = param_int(event.params, "mock.fail", 0, 0, 1000);
  if (ctx.try_index < planned_failures) {
    throw Error(ErrorCode::kWorkerFailure,
                "injected failure " + std::to_string(ctx.try_index + 1) + " of " +
                    std::to_string(planned_failures) + " for '" + event.id + "'");
  }
  if (ctx.cancel.stop_requested()) throw Error(ErrorCode::kCancelled, "execution cancelled");
  return make_artifact(event.id, ctx.attempt, artifact_kind_for_role(spec_.role),
                       payload(event, inputs, ctx.seed).dump());
}

AdapterWorker::AdapterWorker(WorkerSpec spec, Transport transport)
    : spec_(std::move(spec)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::kInvalidParams, "adapter worker needs a transport");
}

nlohmann::json AdapterWorker::build_request(const EventSpec& event, const InputArtifacts& inputs,
                                            const ExecContext& ctx) {
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& [dep, artifact] : inputs) {
    refs.push_back({{"event_id", dep},
                    {"artifact_id", artifact.id},
                    {"content_hash", artifact.content_hash},
                    {"kind", to_string(artifact.kind)}});
  }
  return {{"role", event.role},   {"event_id", event.id}, {"attempt", ctx.attempt},
          {"params", event.params}, {"seed", ctx.seed},   {"inputs", refs}};
}

Artifact AdapterWorker::execute(const EventSpec& event, const InputArtifacts& inputs,
                                const ExecContext& ctx) const {
  check_inputs(event, inputs);
  if (ctx.cancel.stop_requested()) throw Error(ErrorCode::kCancelled, "execution cancelled");
  nlohmann::json response;
  try {
    response = transport_(build_request(event, inputs, ctx));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw AdapterError(std::string("transport failed: ") + e.what(), true);
  }
  if (ctx.cancel.stop_requested()) throw Error(ErrorCode::kCancelled, "execution cancelled");
  if (response.contains("error")) {
    const auto& err = response.at("error");
    throw AdapterError(err.value("message", std::string{"service error"}),
                       err.value("retryable", false));
  }
  if (!response.contains("artifact")) {
    throw AdapterError("response carries neither artifact nor error", false);
  }
  const auto& body = response.at("artifact");
  const ArtifactKind kind = body.contains("kind")
                                ? artifact_kind_from_string(body.at("kind").get<std::string>())
                                : artifact_kind_for_role(spec_.role);
  const auto& content = body.at("content");
  return make_artifact(event.id, ctx.attempt, kind,
                       content.is_string() ? content.get<std::string>() : content.dump());
}

void WorkerRegistry::add(std::shared_ptr<const Worker> worker) {
  if (!worker) throw Error(ErrorCode::kInvalidParams, "null worker");
  workers_[worker->spec().role] = std::move(worker);
}

bool WorkerRegistry::has(std::string_view role) const { return workers_.contains(role); }

const Worker& WorkerRegistry::for_role(std::string_view role) const {
  auto it = workers_.find(role);
  if (it == workers_.end()) {
    throw Error(ErrorCode::kNotFound, "no worker registered for role '" + std::string(role) + "'");
  }
  return *it->second;
}

std::vector<std::string> WorkerRegistry::roles() const {
  std::vector<std::string> out;
  for (const auto& [role, worker] : workers_) out.push_back(role);
  return out;
}

WorkerRegistry WorkerRegistry::mock_crew(const ValidatedGraph& graph, DurationModel fallback) {
  WorkerRegistry registry;
  for (const auto& e : graph.events()) {
    if (registry.has(e.role)) continue;
    registry.add(std::make_shared<MockWorker>(
        WorkerSpec{e.role, WorkerMode::kMock, fallback, {}}, graph.emotion_rules()));
  }
  return registry;
}

PipelineDef film_pipeline_preset() { return parse_pipeline_json(film_preset_document()); }

PipelineDef preset_by_name(std::string_view name) {
  if (name == "film") return film_pipeline_preset();
  throw Error(ErrorCode::kNotFound, "unknown preset '" + std::string(name) + "'");
}

}  // namespace filmflow
