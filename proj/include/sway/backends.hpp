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

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "sway/core.hpp"
#include "sway/prompts.hpp"

namespace sway::backends {

struct GenerationParams {
  int top_k = 50;
  double top_p = 0.95;
  double temperature = 1.0;
  int max_new_tokens = 512;
  std::optional<std::uint64_t> seed;

  void validate() const;
  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

// Structured view of a judge call. Oracle backends score from this; remote
// backends only see the rendered prompt.
struct JudgeContext {
  const ShuffledInstance* shuffled = nullptr;
  std::span<const InfluenceSpec> influences;
  Persona judge;
  prompts::MitigationConfig mitigation;
};

enum class GeneratePurpose { kExplanation, kValidation, kAnswer };

struct GenerateContext {
  GeneratePurpose purpose = GeneratePurpose::kExplanation;
  const QuestionInstance* instance = nullptr;
  std::optional<AdvocacyTarget> target;
  Persona persona;
  std::string explanation_text;          // kValidation
  const JudgeContext* judge = nullptr;   // kAnswer
};

struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> candidates;
  prompts::LetterVariant variant = prompts::LetterVariant::kSpace;
  GenerationParams params;
  const JudgeContext* context = nullptr;
};

struct LetterScores {
  std::vector<double> log_scores;  // presented order
  prompts::LetterVariant variant = prompts::LetterVariant::kSpace;
  std::optional<std::string> created;  // stamp of the cache entry, if any
  bool from_cache = false;
};

struct GenerateRequest {
  std::string prompt;
  GenerationParams params;
  const GenerateContext* context = nullptr;
  // Caching layers store the entry's stamp here when non-null.
  std::optional<std::string>* created = nullptr;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const std::string& id() const = 0;
  /// Identity used in cache keys; changes whenever outputs could change.
  virtual std::string fingerprint() const { return id(); }
  virtual const prompts::ChatTemplate& chat_template() const = 0;

  virtual LetterScores score_letters(const ScoreRequest& request) = 0;
  virtual std::string generate(const GenerateRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Synthetic judge

struct PriorRule {
  enum class Kind { kHashed, kUniform, kExplicit };
  Kind kind = Kind::kHashed;
  std::uint64_t seed = 0;
  double scale = 1.0;       // hashed: per-choice score uniform in [0, scale)
  double gold_bonus = 0.0;  // added to the gold component (hashed/uniform)
  std::map<std::string, std::vector<double>> table;  // explicit, canonical order

  std::vector<double> scores(const QuestionInstance& instance) const;
};

struct SyntheticJudgeParams {
  PriorRule prior;
  double susceptibility = 1.0;
  std::array<double, kNumPersonaLevels> authority_weights{1, 1, 1, 1, 1, 1};
  double confidence_slope = 0.0;

  void validate() const;
};

/// prior + s * w[advocate] * (1 + slope * confidence) * onehot(target), one
/// term per influence block; canonical order, unnormalized.
std::vector<double> synthetic_logits(const SyntheticJudgeParams& params,
                                     const QuestionInstance& instance,
                                     std::span<const InfluenceSpec> influences);

/// Softmax of synthetic_logits, canonical order.
std::vector<double> synthetic_score(const SyntheticJudgeParams& params,
                                    const QuestionInstance& instance,
                                    std::span<const InfluenceSpec> influences);

/// Deterministic advocate text for the synthetic backend.
std::string synthetic_explanation(const QuestionInstance& instance,
                                  const AdvocacyTarget& target,
                                  const Persona& advocate);

class SyntheticBackend final : public Backend {
 public:
  SyntheticBackend(std::string id, SyntheticJudgeParams params,
                   prompts::ChatTemplate tmpl = prompts::ChatTemplate::plain());

  const std::string& id() const override { return id_; }
  std::string fingerprint() const override { return fingerprint_; }
  const prompts::ChatTemplate& chat_template() const override { return template_; }
  const SyntheticJudgeParams& params() const { return params_; }

  LetterScores score_letters(const ScoreRequest& request) override;
  std::string generate(const GenerateRequest& request) override;

 private:
  std::string id_;
  SyntheticJudgeParams params_;
  prompts::ChatTemplate template_;
  std::string fingerprint_;
};

// ---------------------------------------------------------------------------
// Remote completions client

enum class ScoringMode { kEcho, kTopLogprobs };
std::string_view to_string(ScoringMode mode);
ScoringMode scoring_mode_from_string(std::string_view text);

struct RemoteConfig {
  std::string base_url;  // e.g. http://localhost:8000
  std::string completions_path = "/v1/completions";
  std::string model;
  std::string api_key_env = "SWAY_API_KEY";
  ScoringMode scoring_mode = ScoringMode::kEcho;
  int top_logprobs = 20;
  int echo_max_tokens = 1;
  int timeout_seconds = 120;
  int max_attempts = 3;
  int backoff_initial_ms = 1000;
  std::size_t max_prompt_chars = 0;  // 0: no client-side limit
};

class RemoteBackend final : public Backend {
 public:
  RemoteBackend(std::string id, RemoteConfig config, prompts::ChatTemplate tmpl);
  ~RemoteBackend() override;

  const std::string& id() const override { return id_; }
  std::string fingerprint() const override;
  const prompts::ChatTemplate& chat_template() const override { return template_; }

  LetterScores score_letters(const ScoreRequest& request) override;
  std::string generate(const GenerateRequest& request) override;

  /// Request body sent for a generation call (exposed for wire-format tests).
  std::string generation_body(const GenerateRequest& request) const;

 private:
  std::string post(const std::string& body, std::size_t prompt_length);
  LetterScores score_echo(const ScoreRequest& request);
  LetterScores score_top_logprobs(const ScoreRequest& request);

  std::string id_;
  RemoteConfig config_;
  prompts::ChatTemplate template_;
};

// ---------------------------------------------------------------------------
// Descriptors and decorators

enum class BackendKind { kRemote, kSynthetic };

struct BackendDescriptor {
  std::string backend_id;
  BackendKind kind = BackendKind::kSynthetic;
  RemoteConfig remote;
  SyntheticJudgeParams synthetic;
  prompts::ChatTemplate chat_template = prompts::ChatTemplate::plain();
  int inflight_limit = 4;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

// Caps the number of concurrent calls into the wrapped backend.
class ThrottledBackend final : public Backend {
 public:
  ThrottledBackend(Backend& inner, int limit);

  const std::string& id() const override { return inner_.id(); }
  std::string fingerprint() const override { return inner_.fingerprint(); }
  const prompts::ChatTemplate& chat_template() const override {
    return inner_.chat_template();
  }
  LetterScores score_letters(const ScoreRequest& request) override;
  std::string generate(const GenerateRequest& request) override;

 private:
  Backend& inner_;
  std::counting_semaphore<1024> slots_;
};

struct ScoreOptions {
  bool allow_degraded = true;
};

struct ScoreOutcome {
  ScoredPrediction prediction;
  prompts::LetterVariant variant = prompts::LetterVariant::kSpace;
  bool degraded = false;
  bool from_cache = false;
  std::optional<std::string> created;
  std::string prompt;  // serialized scoring prompt
};

/// Scores the presented letters as continuations of the forced assistant
/// prefix and normalizes over exactly those letters. Falls back to
/// generate-and-parse on capability errors when allowed.
ScoreOutcome score_choices(const prompts::JudgePrompt& prompt,
                           const JudgeContext& context,
                           const GenerationParams& params, Backend& backend,
                           const ScoreOptions& options = {});

/// Parses the first presented letter out of free text, or -1.
int parse_letter(std::string_view text, int num_choices);

}  // namespace sway::backends
