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

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "filmflow/crew.hpp"
#include "filmflow/error.hpp"
#include "filmflow/graph.hpp"
#include "filmflow/hash.hpp"

namespace filmflow {
namespace {

class FilmCrew : public ::testing::Test {
 protected:
  ValidatedGraph graph = validate_pipeline(film_pipeline_preset());
  WorkerRegistry crew = WorkerRegistry::mock_crew(graph);
  VirtualPacer pacer;

  ExecContext ctx(int attempt = 1, int try_index = 0) const {
    ExecContext c;
    c.attempt = attempt;
    c.try_index = try_index;
    c.pacer = &pacer;
    return c;
  }

  Artifact run(const EventId& id, const InputArtifacts& inputs, const ExecContext& c) const {
    const auto& event = graph.event(id);
    return crew.for_role(event.role).execute(event, inputs, c);
  }

  // Every artifact of one clean pass in topological order.
  std::map<EventId, Artifact> pass(std::uint64_t seed = kDefaultSeed) const {
    std::map<EventId, Artifact> out;
    for (const auto& id : graph.topo_order()) {
      InputArtifacts inputs;
      for (const auto& dep : graph.event(id).dependencies) inputs.emplace(dep, out.at(dep));
      auto c = ctx();
      c.seed = seed;
      out.emplace(id, run(id, inputs, c));
    }
    return out;
  }
};

TEST_F(FilmCrew, ScriptHashIsStableAcrossRuns) {
  const auto a = run("script", {}, ctx());
  const auto b = run("script", {}, ctx());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.id, "script@1");
  EXPECT_EQ(a.kind, ArtifactKind::kScript);
  EXPECT_EQ(a.content_hash, sha256_hex(a.content));
  EXPECT_EQ(pass(), pass());
}

TEST_F(FilmCrew, SeedChangesPayloads) {
  EXPECT_NE(pass(42).at("script").content_hash, pass(7).at("script").content_hash);
}

TEST_F(FilmCrew, AmendmentOverlayChangesDialogueHash) {
  const auto artifacts = pass();
  InputArtifacts inputs{{"script", artifacts.at("script")}};
  auto event = graph.event("dialogue");
  const auto first = crew.for_role("actors").execute(event, inputs, ctx(1));
  event.params["director_note"] = "improve the fifth act";
  const auto second = crew.for_role("actors").execute(event, inputs, ctx(2));
  EXPECT_NE(first.content_hash, second.content_hash);
  EXPECT_EQ(second.id, "dialogue@2");
}

TEST_F(FilmCrew, AttemptNumberAloneDoesNotChangeContent) {
  const auto first = run("script", {}, ctx(1));
  const auto again = run("script", {}, ctx(3));
  EXPECT_EQ(first.content_hash, again.content_hash);
  EXPECT_NE(first.id, again.id);
}

TEST_F(FilmCrew, PayloadsCarryTheirRoleSpecificParts) {
  const auto artifacts = pass();
  const auto script = nlohmann::json::parse(artifacts.at("script").content);
  EXPECT_EQ(script.at("scenes").size(), 3u);
  const auto dialogue = nlohmann::json::parse(artifacts.at("dialogue").content);
  EXPECT_FALSE(dialogue.at("lines").empty());
  for (const auto& line : dialogue.at("lines")) EXPECT_TRUE(line.contains("emotion"));
  const auto action = nlohmann::json::parse(artifacts.at("action").content);
  EXPECT_TRUE(action.contains("shots"));
  const auto post = nlohmann::json::parse(artifacts.at("post").content);
  ASSERT_TRUE(post.contains("timeline"));
  EXPECT_TRUE(post.at("timeline").at("audio").at("merged").get<bool>());
  EXPECT_EQ(artifacts.at("post").kind, ArtifactKind::kFinalCut);
}

TEST_F(FilmCrew, MissingInputIsReported) {
  try {
    run("art", {}, ctx());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingInput);
  }
}

TEST_F(FilmCrew, CancelledBeforeOrDuringExecution) {
  std::stop_source stop;
  stop.request_stop();
  auto c = ctx();
  c.cancel = stop.get_token();
  try {
    run("script", {}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCancelled);
  }

  WallPacer wall(10);
  std::stop_source mid;
  c.cancel = mid.get_token();
  c.pacer = &wall;
  c.duration = 1000;  // ten seconds unless cancelled
  std::jthread canceller([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    mid.request_stop();
  });
  const auto started = std::chrono::steady_clock::now();
  EXPECT_THROW(run("script", {}, c), Error);
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::seconds(2));
}

TEST_F(FilmCrew, InjectedFailuresStopAfterTheirCount) {
  auto event = graph.event("script");
  event.params["mock.fail"] = "2";
  const auto& worker = crew.for_role("scriptwriter");
  EXPECT_THROW(worker.execute(event, {}, ctx(1, 0)), Error);
  EXPECT_THROW(worker.execute(event, {}, ctx(1, 1)), Error);
  EXPECT_NO_THROW(worker.execute(event, {}, ctx(1, 2)));
}

TEST_F(FilmCrew, PlannedDurations) {
  EXPECT_EQ(crew.for_role("artist").planned_duration(graph.event("art"), 1, 42), 20);
  MockWorker fixed({"custom", WorkerMode::kMock, FixedDuration{4}, {}});
  MockWorker uniform({"custom", WorkerMode::kMock, UniformDuration{3, 9}, {}});
  EventSpec untimed{"x", "custom", {}, {}, std::nullopt};
  EXPECT_EQ(fixed.planned_duration(untimed, 1, 42), 4);
  for (int attempt = 1; attempt < 50; ++attempt) {
    const auto d = uniform.planned_duration(untimed, attempt, 42);
    EXPECT_GE(d, 3);
    EXPECT_LE(d, 9);
    EXPECT_EQ(d, uniform.planned_duration(untimed, attempt, 42));
  }
  EXPECT_THROW(MockWorker({"custom", WorkerMode::kMock, FixedDuration{-1}, {}}), Error);
}

TEST_F(FilmCrew, RegistryLookups) {
  EXPECT_TRUE(crew.has("post"));
  EXPECT_FALSE(crew.has("gaffer"));
  EXPECT_THROW(crew.for_role("gaffer"), Error);
  EXPECT_EQ(crew.roles().size(), 6u);
  EXPECT_THROW(preset_by_name("opera"), Error);
  EXPECT_EQ(preset_by_name("film"), film_pipeline_preset());
}

TEST(ArtifactKinds, RoundTripNames) {
  for (auto kind : {ArtifactKind::kScript, ArtifactKind::kSceneFrame, ArtifactKind::kDialogue,
                    ArtifactKind::kShotPlan, ArtifactKind::kVoiceTrack, ArtifactKind::kFinalCut,
                    ArtifactKind::kMusic, ArtifactKind::kCustom}) {
    EXPECT_EQ(artifact_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_EQ(artifact_id_for("art", 2), "art@2");
}

TEST(Adapter, RequestCarriesRoleParamsAndInputRefs) {
  EventSpec event{"voiceover", "voiceover", {{"voice", "alto"}}, {"dialogue"}, 12};
  const auto input = make_artifact("dialogue", 2, ArtifactKind::kDialogue, "lines");
  ExecContext ctx;
  ctx.attempt = 3;
  const auto req = AdapterWorker::build_request(event, {{"dialogue", input}}, ctx);
  EXPECT_EQ(req.at("role"), "voiceover");
  EXPECT_EQ(req.at("attempt"), 3);
  EXPECT_EQ(req.at("params").at("voice"), "alto");
  EXPECT_EQ(req.at("inputs")[0].at("artifact_id"), "dialogue@2");
  EXPECT_EQ(req.at("inputs")[0].at("content_hash"), input.content_hash);
}

TEST(Adapter, FakeTransportOutcomes) {
  EventSpec event{"s", "scriptwriter", {}, {}, 1};
  ExecContext ctx;
  AdapterWorker ok({"scriptwriter", WorkerMode::kAdapter, FixedDuration{}, {}},
                   [](const nlohmann::json&) {
                     return nlohmann::json{{"artifact", {{"content", {{"title", "x"}}}}}};
                   });
  const auto art = ok.execute(event, {}, ctx);
  EXPECT_EQ(art.kind, ArtifactKind::kScript);
  EXPECT_EQ(nlohmann::json::parse(art.content).at("title"), "x");

  AdapterWorker refuses({"scriptwriter", WorkerMode::kAdapter, FixedDuration{}, {}},
                        [](const nlohmann::json&) {
                          return nlohmann::json{
                              {"error", {{"message", "quota"}, {"retryable", true}}}};
                        });
  try {
    refuses.execute(event, {}, ctx);
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_TRUE(e.retryable());
    EXPECT_NE(std::string(e.what()).find("quota"), std::string::npos);
  }

  AdapterWorker throws({"scriptwriter", WorkerMode::kAdapter, FixedDuration{}, {}},
                       [](const nlohmann::json&) -> nlohmann::json {
                         throw std::runtime_error("socket closed");
                       });
  try {
    throws.execute(event, {}, ctx);
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_THROW(AdapterWorker({"x", WorkerMode::kAdapter, FixedDuration{}, {}}, nullptr), Error);
}

TEST(Adapter, HttpTransportTalksToAService) {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(
        nlohmann::json{{"artifact", {{"content", "made for " + body.at("event_id").get<std::string>()}}}}
            .dump(),
        "application/json");
  });
  server.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::jthread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("FILMFLOW_TEST_ADAPTER_TOKEN", "sekret", 1);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  AdapterWorker worker({"scriptwriter", WorkerMode::kAdapter, FixedDuration{},
                        {base + "/gen", "FILMFLOW_TEST_ADAPTER_TOKEN"}},
                       http_transport({base + "/gen", "FILMFLOW_TEST_ADAPTER_TOKEN"}));
  EventSpec event{"script", "scriptwriter", {}, {}, 1};
  const auto art = worker.execute(event, {}, {});
  EXPECT_EQ(art.content, "made for script");
  EXPECT_EQ(seen_auth, "Bearer sekret");

  AdapterWorker down({"scriptwriter", WorkerMode::kAdapter, FixedDuration{}, {}},
                     http_transport({base + "/down", ""}));
  try {
    down.execute(event, {}, {});
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_THROW(http_transport({"ftp:/nowhere", ""}), Error);
  server.stop();
}

}  // namespace
}  // namespace filmflow
