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

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "sway/backends.hpp"
#include "test_support.hpp"

namespace sway::backends {
namespace {

using prompts::ChatTemplate;
using prompts::JudgePrompt;
using prompts::MitigationConfig;

SyntheticJudgeParams explicit_prior(const std::string& id, std::vector<double> prior) {
  SyntheticJudgeParams p;
  p.prior.kind = PriorRule::Kind::kExplicit;
  p.prior.table[id] = std::move(prior);
  return p;
}

// Test-side oracle: softmax over the prior plus one bump per influence.
std::vector<double> oracle_probs(std::vector<double> logits, double bump, int target) {
  logits[target] += bump;
  double total = 0;
  for (double v : logits) total += std::exp(v);
  for (double& v : logits) v = std::exp(v) / total;
  return logits;
}

TEST(Synthetic, SingleBumpClosedForm) {
  const QuestionInstance q = testing::make_item("q", {"a", "b", "c", "d"}, 0);
  SyntheticJudgeParams p = explicit_prior("q", {0, 0, 0, 0});
  p.susceptibility = 1.0;
  const std::vector<InfluenceSpec> inf{
      InfluenceSpec::opinion(AdvocacyTarget::make(q, 2), Persona{})};
  const auto probs = synthetic_score(p, q, inf);
  EXPECT_NEAR(probs[2], 0.475367, 1e-6);
  EXPECT_NEAR(probs[0], 0.174878, 1e-6);
}

TEST(Synthetic, MatchesIndependentOracle) {
  const QuestionInstance q = testing::make_item("q", {"a", "b", "c"}, 1);
  SyntheticJudgeParams p = explicit_prior("q", {0.3, 1.2, -0.4});
  p.susceptibility = 2.0;
  p.authority_weights = {0.5, 0.1, 0.2, 0.9, 1.3, 1.7};
  p.confidence_slope = 0.5;
  for (int level = 0; level < kNumPersonaLevels; ++level) {
    for (int conf : {0, 25, 100}) {
      const std::vector<InfluenceSpec> inf{InfluenceSpec::opinion(
          AdvocacyTarget::make(q, 2), Persona{static_cast<PersonaLevel>(level)},
          ConfidenceLevel{conf})};
      const double bump = 2.0 * p.authority_weights[level] * (1 + 0.5 * conf / 100.0);
      const auto want = oracle_probs({0.3, 1.2, -0.4}, bump, 2);
      const auto got = synthetic_score(p, q, inf);
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(got[j], want[j], 1e-14);
    }
  }
}

TEST(Synthetic, ZeroSusceptibilityIgnoresInfluence) {
  const QuestionInstance q = testing::make_item("q", {"a", "b"}, 0);
  SyntheticJudgeParams p = explicit_prior("q", {0.2, 0.1});
  p.susceptibility = 0;
  const std::vector<InfluenceSpec> inf{
      InfluenceSpec::opinion(AdvocacyTarget::make(q, 1), Persona{PersonaLevel::kL5})};
  EXPECT_EQ(synthetic_score(p, q, inf), synthetic_score(p, q, {}));
}

TEST(Synthetic, HashedPriorIsDeterministicAndGoldBiased) {
  PriorRule r;
  r.seed = 5;
  r.scale = 1.0;
  const QuestionInstance q = testing::make_item("q", {"a", "b", "c", "d"}, 3);
  EXPECT_EQ(r.scores(q), r.scores(q));
  for (double v : r.scores(q)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  r.gold_bonus = 10;
  EXPECT_EQ(argmax_lowest(r.scores(q)), 3);
  PriorRule missing;
  missing.kind = PriorRule::Kind::kExplicit;
  EXPECT_THROW(missing.scores(q), Error);
}

TEST(Synthetic, ExplanationAndValidationText) {
  const QuestionInstance q = testing::make_item("q", {"red", "blue"}, 0);
  SyntheticBackend b("s", SyntheticJudgeParams{});
  GenerateContext ctx;
  ctx.instance = &q;
  ctx.target = AdvocacyTarget::make(q, 1);
  ctx.persona = Persona{PersonaLevel::kL2};
  GenerateRequest req;
  req.context = &ctx;
  const std::string text = b.generate(req);
  EXPECT_EQ(text, synthetic_explanation(q, *ctx.target, ctx.persona));
  EXPECT_NE(text.find("`blue`"), std::string::npos);

  ctx.purpose = GeneratePurpose::kValidation;
  ctx.explanation_text = text;
  EXPECT_EQ(b.generate(req), "Yes");
  ctx.target = AdvocacyTarget::make(q, 0);
  EXPECT_EQ(b.generate(req), "No");
}

struct Fixture {
  ShuffledInstance s = testing::red_planet_shuffled();
  std::vector<InfluenceSpec> influences;
  JudgeContext ctx;
  JudgePrompt prompt;

  explicit Fixture(int target = -1) {
    if (target >= 0) {
      influences.push_back(
          InfluenceSpec::opinion(AdvocacyTarget::make(s.base, target), Persona{}));
    }
    ctx.shuffled = &s;
    ctx.influences = influences;
    prompt = prompts::render_judge_prompt(s, influences, Persona{}, MitigationConfig{});
  }
};

TEST(ScoreChoices, NormalizesOverPresentedLetters) {
  Fixture f(2);
  SyntheticJudgeParams p = explicit_prior("red-planet", {0, 0, 0, 0});
  SyntheticBackend b("s", p, ChatTemplate::falcon());
  const ScoreOutcome out = score_choices(f.prompt, f.ctx, GenerationParams{}, b);
  EXPECT_FALSE(out.degraded);
  EXPECT_EQ(out.prediction.argmax_canonical, 2);
  EXPECT_EQ(out.prediction.argmax_letter, 'D');  // Jupiter presents as D
  EXPECT_NEAR(out.prediction.probs[3], 0.475367, 1e-6);
  double total = 0;
  for (double v : out.prediction.probs) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_TRUE(out.prompt.ends_with("Assistant: The right answer is the letter"));
}

// Refuses letter scoring and answers in free text.
class TextOnlyBackend final : public Backend {
 public:
  explicit TextOnlyBackend(std::string reply) : reply_(std::move(reply)) {}
  const std::string& id() const override { return id_; }
  const ChatTemplate& chat_template() const override { return tmpl_; }
  LetterScores score_letters(const ScoreRequest&) override {
    throw Error(ErrorKind::kCapability, "no logprobs");
  }
  std::string generate(const GenerateRequest& r) override {
    last_temperature = r.params.temperature;
    return reply_;
  }
  double last_temperature = -1;

 private:
  std::string id_ = "text";
  ChatTemplate tmpl_ = ChatTemplate::plain();
  std::string reply_;
};

TEST(ScoreChoices, DegradedModeParsesLetter) {
  Fixture f;
  TextOnlyBackend b(" B.");
  const ScoreOutcome out = score_choices(f.prompt, f.ctx, GenerationParams{}, b);
  EXPECT_TRUE(out.degraded);
  EXPECT_EQ(b.last_temperature, 0.0);
  EXPECT_EQ(out.prediction.argmax_letter, 'B');
  EXPECT_EQ(out.prediction.argmax_canonical, 3);  // Saturn
  EXPECT_EQ(out.prediction.probs, (std::vector<double>{0, 1, 0, 0}));
}

TEST(ScoreChoices, DegradedModeCanBeDisabled) {
  Fixture f;
  TextOnlyBackend b(" B.");
  try {
    score_choices(f.prompt, f.ctx, GenerationParams{}, b, ScoreOptions{false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
  TextOnlyBackend garbled("I think so");
  EXPECT_THROW(score_choices(f.prompt, f.ctx, GenerationParams{}, garbled), Error);
}

TEST(ScoreChoices, SyntheticDegradedAgreesWithScored) {
  Fixture f(0);
  SyntheticJudgeParams p = explicit_prior("red-planet", {0.1, 0.5, 0.2, 0.0});
  SyntheticBackend b("s", p);
  GenerateContext ctx;
  ctx.purpose = GeneratePurpose::kAnswer;
  ctx.judge = &f.ctx;
  GenerateRequest req;
  req.context = &ctx;
  const int letter = parse_letter(b.generate(req), 4);
  EXPECT_EQ(letter, score_choices(f.prompt, f.ctx, GenerationParams{}, b)
                        .prediction.argmax_letter - 'A');
}

TEST(ParseLetter, Variants) {
  EXPECT_EQ(parse_letter(" C.", 4), 2);
  EXPECT_EQ(parse_letter("(A)", 4), 0);
  EXPECT_EQ(parse_letter("B", 2), 1);
  EXPECT_EQ(parse_letter("E", 4), -1);
  EXPECT_EQ(parse_letter("As a", 4), -1);
  EXPECT_EQ(parse_letter("", 4), -1);
  EXPECT_EQ(parse_letter(" a", 4), -1);
}

TEST(Throttle, CapsConcurrency) {
  auto probe = std::make_unique<testing::ProbeBackend>(
      std::make_unique<SyntheticBackend>("s", explicit_prior("red-planet", {0, 0, 0, 0})));
  testing::ProbeBackend& raw = *probe;
  ThrottledBackend throttled(raw, 2);
  Fixture f;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) score_choices(f.prompt, f.ctx, GenerationParams{}, throttled);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(raw.stats->peak.load(), 2);
  EXPECT_EQ(raw.scores.load(), 40);
}

TEST(Params, Validation) {
  GenerationParams g;
  EXPECT_NO_THROW(g.validate());
  g.top_p = 0;
  EXPECT_THROW(g.validate(), Error);
  g = {};
  g.max_new_tokens = 0;
  EXPECT_THROW(g.validate(), Error);
  SyntheticJudgeParams s;
  s.susceptibility = -1;
  EXPECT_THROW(s.validate(), Error);
  BackendDescriptor d;
  EXPECT_THROW(make_backend(d), Error);
}

TEST(Fingerprint, ChangesWithParams) {
  SyntheticBackend a("s", SyntheticJudgeParams{});
  SyntheticJudgeParams p;
  p.susceptibility = 2;
  SyntheticBackend b("s", p);
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint(), SyntheticBackend("s", SyntheticJudgeParams{}).fingerprint());
}

}  // namespace
}  // namespace sway::backends
