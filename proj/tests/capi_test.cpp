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

#include "sway/sway.h"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "sway/backends.hpp"
#include "sway/prompts.hpp"
#include "sway/serialize.hpp"
#include "test_support.hpp"

namespace sway {
namespace {

using nlohmann::json;

struct SessionDeleter {
  void operator()(sway_session* s) const { sway_session_destroy(s); }
};
using Session = std::unique_ptr<sway_session, SessionDeleter>;

Session open_session() {
  sway_session* s = nullptr;
  EXPECT_EQ(sway_session_create(&s), SWAY_OK);
  sway_session_set_log(s, nullptr, nullptr);
  return Session(s);
}

TEST(CApi, VersionAndNullArguments) {
  EXPECT_STRNE(sway_version(), "");
  EXPECT_EQ(sway_session_create(nullptr), SWAY_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(sway_run(nullptr, "a", "b", nullptr), SWAY_ERR_INVALID_ARGUMENT);
  sway_session_destroy(nullptr);
  Session s = open_session();
  EXPECT_EQ(sway_ingest(s.get(), nullptr, "x", "y"), SWAY_ERR_INVALID_ARGUMENT);
  EXPECT_STRNE(sway_session_last_error(s.get()), "");
}

TEST(CApi, IngestCountsAndErrors) {
  testing::TempDir dir;
  Session s = open_session();
  const auto data = testing::data_dir();
  ASSERT_EQ(sway_ingest(s.get(), (data / "commonsense_small.manifest.json").c_str(),
                        (data / "commonsense_small.jsonl").c_str(), (dir / "out.jsonl").c_str()),
            SWAY_OK)
      << sway_session_last_error(s.get());
  const json summary = json::parse(sway_session_output(s.get()));
  EXPECT_EQ(summary["kept"], 10);
  EXPECT_EQ(summary["skipped_too_many_choices"], 1);
  EXPECT_EQ(summary["held_out"], 6);

  testing::write_file(dir / "bad.jsonl",
                      R"({"id": "x", "question": "q?", "choices": ["a", "b"]})" "\n");
  EXPECT_EQ(sway_ingest(s.get(), (data / "commonsense_small.manifest.json").c_str(),
                        (dir / "bad.jsonl").c_str(), (dir / "o.jsonl").c_str()),
            SWAY_ERR_CONFIG);
  EXPECT_EQ(sway_ingest(s.get(), (data / "commonsense_small.manifest.json").c_str(),
                        (dir / "missing.jsonl").c_str(), (dir / "o.jsonl").c_str()),
            SWAY_ERR_IO);
}

TEST(CApi, RenderJudgePromptMatchesLibrary) {
  const QuestionInstance q = testing::red_planet();
  const auto target = AdvocacyTarget::make(q, 0);
  const std::vector<InfluenceSpec> influences{
      InfluenceSpec::opinion(target, Persona{PersonaLevel::kL2})};
  const json request = {{"instance", q},
                        {"permutation", {2, 0, 3, 1}},
                        {"influences", influences},
                        {"chat_template", prompts::ChatTemplate::falcon()}};
  Session s = open_session();
  ASSERT_EQ(sway_render_judge_prompt(s.get(), request.dump().c_str()), SWAY_OK)
      << sway_session_last_error(s.get());
  const json out = json::parse(sway_session_output(s.get()));

  const auto jp = prompts::render_judge_prompt(testing::red_planet_shuffled(), influences,
                                               Persona{}, prompts::MitigationConfig{}, {},
                                               prompts::PromptTexts{});
  EXPECT_EQ(out["scoring_prompt"],
            prompts::render_scoring_prompt(jp, prompts::ChatTemplate::falcon()));
  EXPECT_EQ(out["assistant_prefix"], jp.assistant_prefix);
  EXPECT_EQ(out["permutation"], json({2, 0, 3, 1}));

  EXPECT_EQ(sway_render_judge_prompt(s.get(), "{not json"), SWAY_ERR_CONFIG);
  EXPECT_EQ(sway_render_judge_prompt(s.get(), R"({"instance": 3})"), SWAY_ERR_CONFIG);
}

TEST(CApi, SyntheticScoreMatchesClosedForm) {
  const QuestionInstance q = testing::red_planet();
  backends::SyntheticJudgeParams params;
  params.prior.kind = backends::PriorRule::Kind::kUniform;
  params.susceptibility = 1.0;
  params.authority_weights = {1, 1, 1, 1, 1, 1};
  params.confidence_slope = 0.0;
  const std::vector<InfluenceSpec> influences{
      InfluenceSpec::opinion(AdvocacyTarget::make(q, 2), Persona{})};
  const json request = {{"params", params}, {"instance", q}, {"influences", influences}};
  Session s = open_session();
  ASSERT_EQ(sway_synthetic_score(s.get(), request.dump().c_str()), SWAY_OK)
      << sway_session_last_error(s.get());
  const auto probs = json::parse(sway_session_output(s.get())).get<std::vector<double>>();
  ASSERT_EQ(probs.size(), 4u);
  const double e = std::exp(1.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(probs[i], (i == 2 ? e : 1.0) / (e + 3.0), 1e-12);
  }
}

int g_log_lines = 0;
void count_log(sway_log_level, const char*, void*) { ++g_log_lines; }

TEST(CApi, RunAndReport) {
  testing::TempDir dir;
  Session s = open_session();
  sway_session_set_log(s.get(), count_log, nullptr);
  const std::string spec = (testing::data_dir() / "synthetic_sweep.spec.json").string();
  sway_run_options o{};
  o.max_trials = 50;
  ASSERT_EQ(sway_run(s.get(), spec.c_str(), dir.path().c_str(), &o), SWAY_OK)
      << sway_session_last_error(s.get());
  EXPECT_GT(g_log_lines, 0);
  const json summary = json::parse(sway_session_output(s.get()));
  EXPECT_EQ(summary["status"], "complete");
  EXPECT_EQ(summary["completed"], 50);

  EXPECT_EQ(sway_run(s.get(), spec.c_str(), dir.path().c_str(), &o), SWAY_ERR_CONFIG);
  o.resume = 1;
  ASSERT_EQ(sway_run(s.get(), spec.c_str(), dir.path().c_str(), &o), SWAY_OK);
  EXPECT_EQ(json::parse(sway_session_output(s.get()))["backend_calls"], 0);

  EXPECT_EQ(sway_report(s.get(), dir.path().c_str(), "unbiased_perf", (dir / "u.csv").c_str()),
            SWAY_OK)
      << sway_session_last_error(s.get());
  EXPECT_TRUE(std::filesystem::exists(dir / "u.json"));
  EXPECT_EQ(sway_report(s.get(), dir.path().c_str(), "pie", (dir / "p.csv").c_str()),
            SWAY_ERR_CONFIG);
  testing::write_file(dir / "empty" / "records.jsonl", "");
  EXPECT_EQ(sway_report(s.get(), (dir / "empty").c_str(), "unbiased_perf",
                        (dir / "e.csv").c_str()),
            SWAY_ERR_RECORDS);
}

TEST(CApi, UnreachableBackendOverride) {
  testing::TempDir dir;
  testing::write_file(dir / "judge.json", R"({"backend_id": "down", "kind": "remote",
    "chat_template": "plain",
    "remote": {"base_url": "http://127.0.0.1:9", "max_attempts": 1, "backoff_initial_ms": 1}})");
  Session s = open_session();
  const std::string spec = (testing::data_dir() / "synthetic_sweep.spec.json").string();
  const std::string override_path = (dir / "judge.json").string();
  sway_run_options o{};
  o.backend_override_path = override_path.c_str();
  o.max_trials = 5;
  EXPECT_EQ(sway_run(s.get(), spec.c_str(), (dir / "run").c_str(), &o), SWAY_ERR_BACKEND)
      << sway_session_last_error(s.get());
}

}  // namespace
}  // namespace sway
