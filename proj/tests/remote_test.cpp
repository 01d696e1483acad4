// Copyright 2026 The sway Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Must match the library's build of the header.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "sway/backends.hpp"
#include "test_support.hpp"

namespace sway::backends {
namespace {

using nlohmann::json;

// In-process completions service. The handler sees each parsed body.
class FakeService {
 public:
  using Handler = std::function<void(const json&, httplib::Response&)>;

  explicit FakeService(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        bodies.push_back(body);
        auth.push_back(req.get_header_value("Authorization"));
      }
      handler_(body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  RemoteConfig config() const {
    RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.model = "fake";
    c.backoff_initial_ms = 1;
    c.timeout_seconds = 5;
    return c;
  }

  std::vector<json> bodies;
  std::vector<std::string> auth;

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
};

// Echo payload: the prompt as one token, the candidate as one token and one
// generated token after it.
void echo_reply(const json& body, httplib::Response& res, std::size_t prompt_chars,
                const std::map<std::string, double>& scores) {
  const std::string full = body["prompt"];
  const std::string candidate = full.substr(prompt_chars);
  json lp = {{"tokens", {full.substr(0, prompt_chars), candidate, "."}},
             {"token_logprobs", {nullptr, scores.at(candidate), -0.01}},
             {"text_offset", {0, prompt_chars, full.size()}}};
  res.set_content(json{{"choices", {{{"text", "."}, {"logprobs", lp}}}}}.dump(),
                  "application/json");
}

ScoreRequest letters_request(const std::string& prompt, int n) {
  ScoreRequest r;
  r.prompt = prompt;
  r.candidates = prompts::letter_candidates(n, prompts::LetterVariant::kSpace);
  return r;
}

TEST(Remote, EchoScoresEachCandidate) {
  const std::string prompt = "Q? The right answer is the letter";
  const std::map<std::string, double> scores{{" A", -2.0}, {" B", -0.5}, {" C", -3.0}};
  FakeService svc([&](const json& b, httplib::Response& res) {
    echo_reply(b, res, prompt.size(), scores);
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::plain());
  const LetterScores out = backend.score_letters(letters_request(prompt, 3));
  EXPECT_EQ(out.log_scores, (std::vector<double>{-2.0, -0.5, -3.0}));
  ASSERT_EQ(svc.bodies.size(), 3u);
  EXPECT_EQ(svc.bodies[0]["echo"], true);
  EXPECT_EQ(svc.bodies[0]["temperature"], 0.0);
  EXPECT_EQ(svc.bodies[1]["prompt"], prompt + " B");
}

TEST(Remote, TopLogprobsWithFloorForMissingLetters) {
  FakeService svc([](const json&, httplib::Response& res) {
    json top = {{" A", -0.2}, {" C", -1.5}, {" the", -4.0}};
    json lp = {{"tokens", {" A"}}, {"token_logprobs", {-0.2}}, {"top_logprobs", {top}}};
    res.set_content(json{{"choices", {{{"text", " A"}, {"logprobs", lp}}}}}.dump(),
                    "application/json");
  });
  RemoteConfig c = svc.config();
  c.scoring_mode = ScoringMode::kTopLogprobs;
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  const LetterScores out = backend.score_letters(letters_request("p", 3));
  EXPECT_EQ(out.log_scores, (std::vector<double>{-0.2, -4.0, -1.5}));
  EXPECT_EQ(svc.bodies.at(0)["logprobs"], 20);
}

TEST(Remote, TopLogprobsFallsBackToOtherVariant) {
  FakeService svc([](const json&, httplib::Response& res) {
    json lp = {{"top_logprobs", {{{"B", -0.1}, {"A", -2.0}}}}};
    res.set_content(json{{"choices", {{{"text", "B"}, {"logprobs", lp}}}}}.dump(),
                    "application/json");
  });
  RemoteConfig c = svc.config();
  c.scoring_mode = ScoringMode::kTopLogprobs;
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  const LetterScores out = backend.score_letters(letters_request("p", 2));
  EXPECT_EQ(out.variant, prompts::LetterVariant::kBare);
  EXPECT_EQ(out.log_scores, (std::vector<double>{-2.0, -0.1}));
}

TEST(Remote, MissingLogprobsIsCapabilityError) {
  FakeService svc([](const json&, httplib::Response& res) {
    res.set_content(R"({"choices": [{"text": " A"}]})", "application/json");
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::plain());
  try {
    backend.score_letters(letters_request("p", 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
}

TEST(Remote, RetriesServerErrors) {
  std::atomic<int> calls{0};
  FakeService svc([&](const json&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices": [{"text": "hello"}]})", "application/json");
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = "hi";
  EXPECT_EQ(backend.generate(g), "hello");
  EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, PersistentServerErrorsAreTransport) {
  FakeService svc([](const json&, httplib::Response& res) { res.status = 500; });
  RemoteConfig c = svc.config();
  c.max_attempts = 2;
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = "hi";
  try {
    backend.generate(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTransport);
  }
  EXPECT_EQ(svc.bodies.size(), 2u);
}

TEST(Remote, ContextOverflowIsPromptTooLong) {
  FakeService svc([](const json&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error": "This model's maximum context length is 4096 tokens"})",
                    "application/json");
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = std::string(50, 'x');
  try {
    backend.generate(g);
    FAIL();
  } catch (const PromptTooLong& e) {
    EXPECT_EQ(e.measured_length(), 50u);
    EXPECT_EQ(e.kind(), ErrorKind::kPromptTooLong);
  }
  EXPECT_EQ(svc.bodies.size(), 1u);
}

TEST(Remote, ClientSideLimit) {
  RemoteConfig c;
  c.base_url = "http://127.0.0.1:9";
  c.max_prompt_chars = 10;
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  EXPECT_THROW(backend.score_letters(letters_request(std::string(11, 'x'), 2)), PromptTooLong);
}

TEST(Remote, RejectedCredentialsAreConfigError) {
  FakeService svc([](const json&, httplib::Response& res) { res.status = 401; });
  RemoteConfig c = svc.config();
  c.api_key_env = "SWAY_TEST_REMOTE_KEY";
  setenv("SWAY_TEST_REMOTE_KEY", "secret", 1);
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = "hi";
  try {
    backend.generate(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_EQ(svc.auth.at(0), "Bearer secret");
  unsetenv("SWAY_TEST_REMOTE_KEY");
}

TEST(Remote, UnreachableIsBackendDown) {
  RemoteConfig c;
  c.base_url = "http://127.0.0.1:9";
  c.max_attempts = 2;
  c.backoff_initial_ms = 1;
  c.timeout_seconds = 1;
  RemoteBackend backend("r", c, prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = "hi";
  try {
    backend.generate(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBackendDown);
  }
}

TEST(Remote, GenerationBodyCarriesSamplingParams) {
  FakeService svc([](const json&, httplib::Response& res) {
    res.set_content(R"({"choices": [{"text": "because"}]})", "application/json");
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::plain());
  GenerateRequest g;
  g.prompt = "explain";
  g.params.seed = 99;
  EXPECT_EQ(backend.generate(g), "because");
  const json& b = svc.bodies.at(0);
  EXPECT_EQ(b["temperature"], 1.0);
  EXPECT_EQ(b["top_k"], 50);
  EXPECT_EQ(b["top_p"], 0.95);
  EXPECT_EQ(b["max_tokens"], 512);
  EXPECT_EQ(b["seed"], 99);
  EXPECT_EQ(b["model"], "fake");
  EXPECT_EQ(json::parse(backend.generation_body(g)), b);
}

TEST(Remote, ScoreChoicesEndToEnd) {
  const auto s = testing::red_planet_shuffled();
  const prompts::JudgePrompt jp =
      prompts::render_judge_prompt(s, {}, Persona{}, prompts::MitigationConfig{});
  const std::string prompt = prompts::render_scoring_prompt(jp, prompts::ChatTemplate::falcon());
  const std::map<std::string, double> scores{
      {" A", std::log(0.7)}, {" B", std::log(0.1)}, {" C", std::log(0.1)}, {" D", std::log(0.05)}};
  FakeService svc([&](const json& b, httplib::Response& res) {
    echo_reply(b, res, prompt.size(), scores);
  });
  RemoteBackend backend("r", svc.config(), prompts::ChatTemplate::falcon());
  JudgeContext ctx;
  ctx.shuffled = &s;
  const ScoreOutcome out = score_choices(jp, ctx, GenerationParams{}, backend);
  EXPECT_EQ(out.prediction.argmax_canonical, 1);
  EXPECT_NEAR(out.prediction.probs[0], 0.7 / 0.95, 1e-12);
}

}  // namespace
}  // namespace sway::backends
