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

#include "sway/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "sway/random.hpp"

namespace sway {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kIngest: return "ingest";
    case ErrorKind::kContext: return "context";
    case ErrorKind::kRender: return "render";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kBackendDown: return "backend_down";
    case ErrorKind::kPromptTooLong: return "prompt_too_long";
    case ErrorKind::kUndefinedMetric: return "undefined_metric";
    case ErrorKind::kInconsistentRecords: return "inconsistent_records";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

char letter_of(int index) {
  if (index < 0 || index >= kMaxChoices) {
    throw Error(ErrorKind::kDomain,
                "choice index " + std::to_string(index) + " outside A..H");
  }
  return static_cast<char>('A' + index);
}

int index_of(char letter) {
  if (letter < 'A' || letter >= 'A' + kMaxChoices) {
    throw Error(ErrorKind::kDomain,
                std::string("letter '") + letter + "' outside A..H");
  }
  return letter - 'A';
}

Permutation::Permutation(std::vector<int> presented_of)
    : presented_of_(std::move(presented_of)),
      canonical_of_(presented_of_.size(), -1) {
  const int n = size();
  for (int j = 0; j < n; ++j) {
    const int p = presented_of_[j];
    if (p < 0 || p >= n || canonical_of_[p] != -1) {
      throw Error(ErrorKind::kDomain, "permutation is not a bijection");
    }
    canonical_of_[p] = j;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  return Permutation(std::move(order));
}

Permutation Permutation::from_seed(int n, std::uint64_t seed) {
  // Shuffle the presented slots; canonical j goes to slots[j].
  std::vector<int> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(slots[i], slots[k]);
  }
  return Permutation(std::move(slots));
}

int Permutation::presented(int canonical) const {
  if (canonical < 0 || canonical >= size()) {
    throw Error(ErrorKind::kDomain,
                "canonical index " + std::to_string(canonical) +
                    " outside permutation of size " + std::to_string(size()));
  }
  return presented_of_[canonical];
}

int Permutation::canonical(int presented) const {
  if (presented < 0 || presented >= size()) {
    throw Error(ErrorKind::kDomain,
                "presented index " + std::to_string(presented) +
                    " outside permutation of size " + std::to_string(size()));
  }
  return canonical_of_[presented];
}

int unmap(char letter, const Permutation& permutation) {
  const int presented = index_of(letter);
  if (presented >= permutation.size()) {
    throw Error(ErrorKind::kDomain, std::string("letter '") + letter +
                                        "' not among the presented choices");
  }
  return permutation.canonical(presented);
}

void QuestionInstance::validate() const {
  if (choices.size() < 2 || choices.size() > static_cast<std::size_t>(kMaxChoices)) {
    throw Error(ErrorKind::kDomain, "instance '" + id + "' has " +
                                        std::to_string(choices.size()) +
                                        " choices; expected 2..8");
  }
  if (gold_index < 0 || gold_index >= num_choices()) {
    throw Error(ErrorKind::kDomain,
                "instance '" + id + "' gold_index out of range");
  }
}

std::vector<std::string> ShuffledInstance::presented_choices() const {
  std::vector<std::string> out(base.choices.size());
  for (int j = 0; j < base.num_choices(); ++j) {
    out[permutation.presented(j)] = base.choices[j];
  }
  return out;
}

std::string_view to_string(PersonaLevel level) {
  static constexpr std::string_view names[] = {"L0", "L1", "L2",
                                               "L3", "L4", "L5"};
  return names[static_cast<int>(level)];
}

PersonaLevel persona_level_from_string(std::string_view text) {
  if (text.size() == 2 && (text[0] == 'L' || text[0] == 'l') &&
      text[1] >= '0' && text[1] <= '5') {
    return static_cast<PersonaLevel>(text[1] - '0');
  }
  throw Error(ErrorKind::kConfig,
              "unknown persona level '" + std::string(text) + "'");
}

Persona Persona::resolved_for(const QuestionInstance& instance) const {
  Persona out = *this;
  if (needs_field() && !out.field_tag) {
    out.field_tag = instance.field_tag.empty() ? std::string(kDefaultFieldTag)
                                               : instance.field_tag;
  }
  return out;
}

AdvocacyTarget AdvocacyTarget::make(const QuestionInstance& instance,
                                    int target) {
  if (target < 0 || target >= instance.num_choices()) {
    throw Error(ErrorKind::kDomain, "advocacy target " +
                                        std::to_string(target) +
                                        " invalid for '" + instance.id + "'");
  }
  return {instance.id, target, target == instance.gold_index};
}

std::string_view to_string(InfluenceKind kind) {
  switch (kind) {
    case InfluenceKind::kNone: return "none";
    case InfluenceKind::kOpinion: return "opinion";
    case InfluenceKind::kExplanation: return "explanation";
  }
  return "none";
}

InfluenceKind influence_kind_from_string(std::string_view text) {
  if (text == "none") return InfluenceKind::kNone;
  if (text == "opinion") return InfluenceKind::kOpinion;
  if (text == "explanation") return InfluenceKind::kExplanation;
  throw Error(ErrorKind::kConfig,
              "unknown influence kind '" + std::string(text) + "'");
}

InfluenceSpec InfluenceSpec::none() { return {}; }

InfluenceSpec InfluenceSpec::opinion(AdvocacyTarget target, Persona advocate,
                                     std::optional<ConfidenceLevel> confidence) {
  InfluenceSpec spec;
  spec.kind = InfluenceKind::kOpinion;
  spec.target = std::move(target);
  spec.advocate_persona = std::move(advocate);
  spec.confidence = confidence;
  spec.validate();
  return spec;
}

InfluenceSpec InfluenceSpec::explained(Explanation explanation,
                                       std::optional<ConfidenceLevel> confidence) {
  InfluenceSpec spec;
  spec.kind = InfluenceKind::kExplanation;
  spec.target = explanation.target;
  spec.advocate_persona = explanation.advocate_persona;
  spec.explanation = std::move(explanation);
  spec.confidence = confidence;
  spec.validate();
  return spec;
}

void InfluenceSpec::validate() const {
  switch (kind) {
    case InfluenceKind::kNone:
      if (target || explanation || confidence) {
        throw Error(ErrorKind::kDomain,
                    "influence kind none must carry no target, explanation "
                    "or confidence");
      }
      break;
    case InfluenceKind::kOpinion:
      if (!target || explanation) {
        throw Error(ErrorKind::kDomain,
                    "opinion influence needs a target and no explanation");
      }
      break;
    case InfluenceKind::kExplanation:
      if (!explanation || !target || !(explanation->target == *target)) {
        throw Error(ErrorKind::kDomain,
                    "explanation influence needs an explanation for its "
                    "target");
      }
      if (explanation->text.empty()) {
        throw Error(ErrorKind::kDomain, "explanation text is empty");
      }
      break;
  }
  if (confidence && (confidence->percent < 0 || confidence->percent > 100)) {
    throw Error(ErrorKind::kDomain, "confidence must be within 0..100%");
  }
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

ScoredPrediction finish(std::vector<double> probs,
                        const Permutation& permutation) {
  ScoredPrediction out;
  const int best = argmax_lowest(probs);
  out.probs = std::move(probs);
  out.argmax_letter = letter_of(best);
  out.argmax_canonical = permutation.canonical(best);
  return out;
}

void check_size(std::size_t n, const Permutation& permutation) {
  if (n != static_cast<std::size_t>(permutation.size()) || n == 0) {
    throw Error(ErrorKind::kDomain,
                "score vector size does not match the presented choices");
  }
}

}  // namespace

ScoredPrediction ScoredPrediction::from_log_scores(
    std::span<const double> log_scores, const Permutation& permutation) {
  check_size(log_scores.size(), permutation);
  const double max = *std::max_element(log_scores.begin(), log_scores.end());
  if (!std::isfinite(max)) {
    throw Error(ErrorKind::kDomain, "no finite log-score among candidates");
  }
  std::vector<double> probs(log_scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_scores.size(); ++i) {
    if (std::isnan(log_scores[i])) {
      throw Error(ErrorKind::kDomain, "NaN log-score");
    }
    probs[i] = std::exp(log_scores[i] - max);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return finish(std::move(probs), permutation);
}

ScoredPrediction ScoredPrediction::from_weights(std::span<const double> weights,
                                                const Permutation& permutation) {
  check_size(weights.size(), permutation);
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kDomain, "weights must be finite and >= 0");
    }
    total += w;
  }
  std::vector<double> probs(weights.size());
  if (total == 0.0) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(weights.size()));
  } else {
    for (std::size_t i = 0; i < weights.size(); ++i) probs[i] = weights[i] / total;
  }
  return finish(std::move(probs), permutation);
}

}  // namespace sway
