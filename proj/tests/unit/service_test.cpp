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
#include <sstream>
#include <thread>

#include "filmflow/error.hpp"
#include "filmflow/service.hpp"

namespace filmflow {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;

struct SseEvent {
  std::string id;
  std::string event;
  json data;
};

std::vector<SseEvent> parse_sse(const std::string& body) {
  std::vector<SseEvent> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = body.find("\n\n", pos);
    if (end == std::string::npos) break;
    SseEvent ev;
    std::istringstream frame(body.substr(pos, end - pos));
    for (std::string line; std::getline(frame, line);) {
      if (line.rfind("id: ", 0) == 0) ev.id = line.substr(4);
      if (line.rfind("event: ", 0) == 0) ev.event = line.substr(7);
      if (line.rfind("data: ", 0) == 0) ev.data = json::parse(line.substr(6));
    }
    out.push_back(std::move(ev));
    pos = end + 2;
  }
  return out;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceOptions options;
    options.port = 0;
    options.manager.tick_ms = 2;
    options.manager.review_window = 0ms;
    service = std::make_unique<Service>(options);
    service->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", service->port());
    client->set_read_timeout(30, 0);
  }
  void TearDown() override {
    client.reset();
    service->stop();
  }

  json post(const std::string& path, const json& body, int expect) {
    auto res = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto res = client->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  std::string create(json body) { return post("/runs", body, 201).at("run_id"); }
  std::vector<SseEvent> stream(const std::string& id, std::uint64_t from = 0) {
    auto res = client->Get("/runs/" + id + "/stream?from_seq=" + std::to_string(from));
    EXPECT_TRUE(res);
    EXPECT_EQ(res->get_header_value("Content-Type"), "text/event-stream");
    return parse_sse(res->body);
  }

  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;
};

TEST_F(ServiceTest, CreateWallRunStartsRunning) {
  auto res = client->Post("/runs", json{{"pipeline", "film"}, {"clock", "wall"}}.dump(),
                          "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body.at("status"), "running");
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = body.at("run_id");
  service->manager().wait(id);
  EXPECT_EQ(get("/runs/" + id).at("status"), "completed");
}

TEST_F(ServiceTest, CyclicPipelineNamesTheCycle) {
  const json cyclic = {{"name", "loop"},
                       {"events",
                        {{{"id", "A"}, {"role", "custom"}, {"deps", {"B"}}, {"duration", 1}},
                         {{"id", "B"}, {"role", "custom"}, {"deps", {"A"}}, {"duration", 1}}}}};
  const auto err = post("/runs", {{"pipeline", cyclic}}, 400).at("error");
  EXPECT_EQ(err.at("code"), "CycleError");
  EXPECT_NE(err.at("message").get<std::string>().find("A"), std::string::npos);
  EXPECT_FALSE(err.at("cycle").empty());
  post("/runs", {{"pipeline", "opera"}}, 400);
  post("/runs", {{"pipeline", "film"}, {"clock", "sundial"}}, 400);
  EXPECT_EQ(client->Post("/runs", "{oops", "application/json")->status, 400);
}

TEST_F(ServiceTest, UnknownRunIsNotFound) {
  EXPECT_EQ(get("/runs/run-999", 404).at("error").at("code"), "NotFound");
  get("/runs/run-999/log", 404);
  get("/runs/run-999/gantt", 404);
  EXPECT_EQ(client->Get("/runs/run-999/stream")->status, 404);
}

TEST_F(ServiceTest, VirtualRunLogGanttAndArtifacts) {
  const auto id = create({{"pipeline", "film"}});
  service->manager().wait(id);
  const auto state = get("/runs/" + id);
  EXPECT_EQ(state.at("status"), "completed");
  EXPECT_EQ(state.at("latest_report").at("time"), 68);

  const auto page = get("/runs/" + id + "/log?from_seq=2&limit=3");
  EXPECT_EQ(page.at("records").size(), 3u);
  EXPECT_EQ(page.at("records")[0].at("seq"), 2);
  EXPECT_EQ(page.at("next_seq"), 5);
  EXPECT_TRUE(page.at("closed").get<bool>());

  EXPECT_EQ(get("/runs/" + id + "/gantt").at("rows").size(), 6u);

  const auto art = get("/runs/" + id + "/artifacts/script@1");
  EXPECT_EQ(art.at("kind"), "script");
  auto raw = client->Get("/runs/" + id + "/artifacts/script@1?raw=1");
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->body, art.at("content").get<std::string>());
  EXPECT_EQ(raw->get_header_value("X-Content-Hash"), art.at("content_hash"));
  get("/runs/" + id + "/artifacts/script@9", 404);

  const auto runs = get("/runs").at("runs");
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].at("run_id"), id);
}

TEST_F(ServiceTest, StreamReplaysCompletedRunThenEnds) {
  const auto id = create({{"pipeline", "film"},
                          {"feedback_trace", json::parse(R"([{"trigger": {"after": "dialogue"},
                             "target": "dialogue", "kind": "yes_no", "verdict": "reject"}])")}});
  service->manager().wait(id);
  const auto events = stream(id);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().event, "end");
  const auto log = get("/runs/" + id + "/log").at("records");
  ASSERT_EQ(events.size(), log.size() + 1);
  bool saw_gantt = false;
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(events[i].id, std::to_string(i));
    EXPECT_EQ(events[i].data.at("seq"), log[i].at("seq"));
    EXPECT_EQ(events[i].data.at("kind"), log[i].at("kind"));
    EXPECT_TRUE(events[i].data.contains("ready"));
    EXPECT_TRUE(events[i].data.contains("status"));
    saw_gantt |= events[i].data.contains("gantt");
  }
  EXPECT_TRUE(saw_gantt);

  // Resume after seq 4: nothing earlier is repeated.
  const auto resumed = stream(id, 5);
  ASSERT_EQ(resumed.size(), log.size() - 5 + 1);
  EXPECT_EQ(resumed.front().id, "5");
}

TEST_F(ServiceTest, ConcurrentStreamsOfALiveRunAgree) {
  const auto id = create({{"pipeline", "film"}, {"clock", "wall"}, {"tick_ms", 3}});
  std::vector<SseEvent> a, b;
  std::jthread first([&] {
    httplib::Client c("127.0.0.1", service->port());
    c.set_read_timeout(30, 0);
    a = parse_sse(c.Get("/runs/" + id + "/stream")->body);
  });
  std::jthread second([&] {
    httplib::Client c("127.0.0.1", service->port());
    c.set_read_timeout(30, 0);
    b = parse_sse(c.Get("/runs/" + id + "/stream")->body);
  });
  first.join();
  second.join();
  ASSERT_FALSE(a.empty());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].data, b[i].data);
  }
  // The live stream equals the log read afterwards.
  const auto log = get("/runs/" + id + "/log").at("records");
  ASSERT_EQ(a.size(), log.size() + 1);
  for (std::size_t i = 0; i < log.size(); ++i) {
    auto record = a[i].data;
    for (const char* derived : {"ready", "slice_count", "status", "gantt"}) record.erase(derived);
    EXPECT_EQ(record, log[i]);
  }
}

TEST_F(ServiceTest, LiveFeedbackOnWallRun) {
  const auto id = create({{"pipeline", "film"}, {"clock", "wall"}, {"tick_ms", 10}});
  // Wait for dialogue to finish, then reject it.
  const auto deadline = std::chrono::steady_clock::now() + 10s;
  while (std::chrono::steady_clock::now() < deadline) {
    const auto done = get("/runs/" + id).at("latest_report").at("done");
    bool dialogue = false;
    for (const auto& d : done) dialogue |= d.at("id") == "dialogue";
    if (dialogue) break;
    std::this_thread::sleep_for(5ms);
  }
  const auto ack = post("/runs/" + id + "/feedback",
                        {{"target", "dialogue"},
                         {"kind", "detailed"},
                         {"verdict", "reject"},
                         {"note", "improve the fifth act"}},
                        202);
  const std::string fid = ack.at("feedback_id");
  post("/runs/" + id + "/feedback", {{"target", "ghost"}, {"verdict", "reject"}}, 400);
  post("/runs/" + id + "/feedback", {{"target", "post"}, {"verdict", "reject"}}, 409);
  const auto approve = post("/runs/" + id + "/feedback",
                            {{"target", "script"}, {"verdict", "approve"}}, 202);

  service->manager().wait(id);
  const auto log = get("/runs/" + id + "/log").at("records");
  int fid_count = 0, approve_count = 0, revokes = 0;
  for (const auto& r : log) {
    if (r.at("kind") == "feedback") {
      const auto& f = r.at("payload").at("feedback").at("id");
      fid_count += f == fid;
      approve_count += f == approve.at("feedback_id");
    }
    if (r.at("kind") == "revoke") {
      ++revokes;
      EXPECT_EQ(r.at("payload").at("reason"), fid);
    }
  }
  EXPECT_EQ(fid_count, 1);
  EXPECT_EQ(approve_count, 1);
  EXPECT_GE(revokes, 1);

  const auto closed = post("/runs/" + id + "/feedback",
                           {{"target", "post"}, {"verdict", "reject"}}, 409);
  EXPECT_EQ(closed.at("error").at("code"), "RunClosed");
}

TEST_F(ServiceTest, VirtualRunsRefuseLiveFeedback) {
  const auto id = create({{"pipeline", "film"}});
  service->manager().wait(id);
  post("/runs/" + id + "/feedback", {{"target", "post"}, {"verdict", "approve"}}, 409);
}

TEST_F(ServiceTest, PreflightIsAnswered) {
  auto res = client->Options("/runs");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(ServiceStartup, BusyPortFails) {
  ServiceOptions first;
  first.port = 0;
  Service a(first);
  a.start();
  ServiceOptions second;
  second.port = a.port();
  Service b(second);
  EXPECT_THROW(b.start(), Error);
}

TEST(RunRequests, ParseDefaultsAndErrors) {
  const auto r = parse_run_request({{"pipeline", "film"}});
  EXPECT_EQ(r.pipeline.name, "film");
  EXPECT_EQ(r.seed, kDefaultSeed);
  EXPECT_TRUE(r.virtual_clock);
  EXPECT_EQ(r.mode, SchedulingMode::kParallel);
  EXPECT_THROW(parse_run_request(json::object()), Error);
  EXPECT_THROW(parse_run_request({{"pipeline", "film"}, {"tick_ms", -1}}), Error);
  EXPECT_THROW(parse_run_request({{"pipeline", "film"}, {"mode", "sideways"}}), Error);
}

}  // namespace
}  // namespace filmflow
