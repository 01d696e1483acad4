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

#include "sway/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "sway/digest.hpp"
#include "sway/random.hpp"
#include "sway/serialize.hpp"

namespace sway::backends {

void GenerationParams::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorKind::kConfig, "top_p must be in (0, 1]");
  }
  if (!(temperature >= 0.0)) throw Error(ErrorKind::kConfig, "temperature must be >= 0");
  if (max_new_tokens < 1) throw Error(ErrorKind::kConfig, "max_new_tokens must be >= 1");
  if (top_k < 0) throw Error(ErrorKind::kConfig, "top_k must be >= 0");
}

// ---------------------------------------------------------------------------
// Synthetic judge

std::vector<double> PriorRule::scores(const QuestionInstance& instance) const {
  const int n = instance.num_choices();
  std::vector<double> out(n, 0.0);
  switch (kind) {
    case Kind::kUniform:
      break;
    case Kind::kHashed: {
      Rng rng(mix_seed(seed, instance.id));
      for (double& v : out) v = scale * rng.uniform();
      break;
    }
    case Kind::kExplicit: {
      auto it = table.find(instance.id);
      if (it == table.end() || static_cast<int>(it->second.size()) != n) {
        throw Error(ErrorKind::kConfig,
                    "explicit prior has no " + std::to_string(n) +
                        "-entry row for '" + instance.id + "'");
      }
      return it->second;
    }
  }
  out[instance.gold_index] += gold_bonus;
  return out;
}

void SyntheticJudgeParams::validate() const {
  if (!(susceptibility >= 0.0)) throw Error(ErrorKind::kConfig, "susceptibility must be >= 0");
  for (double w : authority_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kConfig, "authority weights must be finite and >= 0");
    }
  }
  if (!std::isfinite(confidence_slope)) {
    throw Error(ErrorKind::kConfig, "confidence_slope must be finite");
  }
}

std::vector<double> synthetic_logits(const SyntheticJudgeParams& params,
                                     const QuestionInstance& instance,
                                     std::span<const InfluenceSpec> influences) {
  std::vector<double> logits = params.prior.scores(instance);
  for (double v : logits) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kConfig, "prior produced a non-finite score");
  }
  if (params.susceptibility == 0.0) return logits;
  for (const InfluenceSpec& influence : influences) {
    if (influence.kind == InfluenceKind::kNone) continue;
    const int target = influence.target->target_index;
    if (target < 0 || target >= instance.num_choices()) {
      throw Error(ErrorKind::kDomain, "influence target out of range");
    }
    const double weight =
        params.authority_weights[static_cast<int>(influence.advocate_persona.level)];
    const double confidence = influence.confidence ? influence.confidence->fraction() : 0.0;
    logits[target] +=
        params.susceptibility * weight * (1.0 + params.confidence_slope * confidence);
  }
  return logits;
}

std::vector<double> synthetic_score(const SyntheticJudgeParams& params,
                                    const QuestionInstance& instance,
                                    std::span<const InfluenceSpec> influences) {
  std::vector<double> logits = synthetic_logits(params, instance, influences);
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max);
    total += v;
  }
  for (double& v : logits) v /= total;
  return logits;
}

std::string synthetic_explanation(const QuestionInstance& instance,
                                  const AdvocacyTarget& target,
                                  const Persona& advocate) {
  const std::string& answer = instance.choices.at(target.target_index);
  return "As " + prompts::persona_phrase(advocate.resolved_for(instance)) +
         ", I can say that the correct answer is `" + answer +
         "`. It is the option best supported by the question.";
}

SyntheticBackend::SyntheticBackend(std::string id, SyntheticJudgeParams params,
                                   prompts::ChatTemplate tmpl)
    : id_(std::move(id)), params_(std::move(params)), template_(std::move(tmpl)) {
  params_.validate();
  const nlohmann::json j = params_;
  fingerprint_ = id_ + ":" + sha256_hex(j.dump()).substr(0, 16);
}

LetterScores SyntheticBackend::score_letters(const ScoreRequest& request) {
  if (!request.context || !request.context->shuffled) {
    throw Error(ErrorKind::kCapability,
                "synthetic judge needs the structured judge context");
  }
  const ShuffledInstance& s = *request.context->shuffled;
  const std::vector<double> logits =
      synthetic_logits(params_, s.base, request.context->influences);
  LetterScores out;
  out.variant = request.variant;
  out.log_scores.resize(logits.size());
  for (int j = 0; j < s.base.num_choices(); ++j) {
    out.log_scores[s.permutation.presented(j)] = logits[j];
  }
  return out;
}

namespace {

std::string first_tokens(const std::string& text, int max_tokens) {
  std::istringstream words(text);
  std::string word, out;
  for (int i = 0; i < max_tokens && (words >> word); ++i) {
    if (i) out += ' ';
    out += word;
  }
  return out;
}

bool contains_claim(const std::string& text, const std::string& answer) {
  return text.find("the correct answer is `" + answer + "`") != std::string::npos ||
         text.find("the correct answer is " + answer) != std::string::npos;
}

}  // namespace

std::string SyntheticBackend::generate(const GenerateRequest& request) {
  if (!request.context) {
    throw Error(ErrorKind::kCapability, "synthetic backend needs a generation context");
  }
  const GenerateContext& ctx = *request.context;
  std::string text;
  switch (ctx.purpose) {
    case GeneratePurpose::kExplanation:
      if (!ctx.instance || !ctx.target) {
        throw Error(ErrorKind::kCapability, "explanation request lacks its target");
      }
      text = synthetic_explanation(*ctx.instance, *ctx.target, ctx.persona);
      break;
    case GeneratePurpose::kValidation:
      if (!ctx.instance || !ctx.target) {
        throw Error(ErrorKind::kCapability, "validation request lacks its target");
      }
      text = contains_claim(ctx.explanation_text,
                            ctx.instance->choices.at(ctx.target->target_index))
                 ? "Yes"
                 : "No";
      break;
    case GeneratePurpose::kAnswer: {
      if (!ctx.judge || !ctx.judge->shuffled) {
        throw Error(ErrorKind::kCapability, "answer request lacks the judge context");
      }
      ScoreRequest sr;
      sr.context = ctx.judge;
      const LetterScores scores = score_letters(sr);
      text = std::string(" ") + letter_of(argmax_lowest(scores.log_scores)) + ".";
      break;
    }
  }
  return first_tokens(text, request.params.max_new_tokens);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d) {
  if (d.backend_id.empty()) throw Error(ErrorKind::kConfig, "backend_id is required");
  if (d.kind == BackendKind::kSynthetic) {
    return std::make_unique<SyntheticBackend>(d.backend_id, d.synthetic, d.chat_template);
  }
  return std::make_unique<RemoteBackend>(d.backend_id, d.remote, d.chat_template);
}

ThrottledBackend::ThrottledBackend(Backend& inner, int limit)
    : inner_(inner), slots_(std::clamp(limit, 1, 1024)) {}

namespace {

struct SlotGuard {
  explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
  std::counting_semaphore<1024>& sem;
};

}  // namespace

LetterScores ThrottledBackend::score_letters(const ScoreRequest& request) {
  SlotGuard guard(slots_);
  return inner_.score_letters(request);
}

std::string ThrottledBackend::generate(const GenerateRequest& request) {
  SlotGuard guard(slots_);
  return inner_.generate(request);
}

int parse_letter(std::string_view text, int num_choices) {
  std::size_t i = 0;
  while (i < text.size() &&
         (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == '(' ||
          text[i] == '"' || text[i] == '\'' || text[i] == '`' || text[i] == ':')) {
    ++i;
  }
  if (i >= text.size()) return -1;
  const char c = text[i];
  if (c < 'A' || c >= 'A' + num_choices) return -1;
  // Reject the start of a word such as "As".
  if (i + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
    return -1;
  }
  return c - 'A';
}

ScoreOutcome score_choices(const prompts::JudgePrompt& prompt,
                           const JudgeContext& context,
                           const GenerationParams& params, Backend& backend,
                           const ScoreOptions& options) {
  if (!context.shuffled) throw Error(ErrorKind::kDomain, "judge context lacks an instance");
  const ShuffledInstance& s = *context.shuffled;
  const prompts::ChatTemplate& tmpl = backend.chat_template();

  ScoreRequest request;
  request.prompt = prompts::render_scoring_prompt(prompt, tmpl);
  request.variant = tmpl.letter_variant;
  request.candidates = prompts::letter_candidates(s.base.num_choices(), tmpl.letter_variant);
  request.params = params;
  request.context = &context;

  ScoreOutcome out;
  out.prompt = request.prompt;
  try {
    LetterScores scores = backend.score_letters(request);
    if (scores.log_scores.size() != request.candidates.size()) {
      throw Error(ErrorKind::kCapability, "backend returned " +
                                              std::to_string(scores.log_scores.size()) +
                                              " scores for " +
                                              std::to_string(request.candidates.size()) +
                                              " letters");
    }
    out.prediction = ScoredPrediction::from_log_scores(scores.log_scores, s.permutation);
    out.variant = scores.variant;
    out.created = std::move(scores.created);
    out.from_cache = scores.from_cache;
    return out;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kCapability || !options.allow_degraded) throw;
  }

  // Degraded mode: sample greedily after the forced prefix and parse a letter.
  GenerateContext gen_ctx;
  gen_ctx.purpose = GeneratePurpose::kAnswer;
  gen_ctx.instance = &s.base;
  gen_ctx.judge = &context;
  GenerateRequest gen;
  gen.prompt = prompts::render_chat(prompt.turns, tmpl, true) + tmpl.answer_lead +
               prompt.assistant_prefix;
  gen.params = params;
  gen.params.temperature = 0.0;
  gen.params.max_new_tokens = 4;
  gen.context = &gen_ctx;
  gen.created = &out.created;
  const std::string text = backend.generate(gen);
  const int presented = parse_letter(text, s.base.num_choices());
  if (presented < 0) {
    throw Error(ErrorKind::kCapability, "degraded scoring could not parse a letter from '" +
                                            text + "'");
  }
  std::vector<double> weights(s.base.num_choices(), 0.0);
  weights[presented] = 1.0;
  out.prediction = ScoredPrediction::from_weights(weights, s.permutation);
  out.variant = tmpl.letter_variant;
  out.degraded = true;
  out.prompt = gen.prompt;
  return out;
}

}  // namespace sway::backends
