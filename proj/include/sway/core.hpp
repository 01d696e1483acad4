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

// Domain types shared by every stage of the harness: question items, seeded
// option permutations, personas, advocacy targets, influence injections and
// the restricted-letter predictions a judge produces.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sway {

inline constexpr int kMaxChoices = 8;
inline constexpr std::string_view kDefaultFieldTag = "science";

enum class ErrorKind {
  kDomain,
  kIngest,
  kContext,
  kRender,
  kConfig,
  kCapability,
  kTransport,
  kBackendDown,
  kPromptTooLong,
  kUndefinedMetric,
  kInconsistentRecords,
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when a prompt exceeds the backend context window.
class PromptTooLong : public Error {
 public:
  PromptTooLong(std::size_t measured, const std::string& what)
      : Error(ErrorKind::kPromptTooLong, what), measured_(measured) {}
  std::size_t measured_length() const noexcept { return measured_; }

 private:
  std::size_t measured_;
};

enum class LogLevel { kDebug, kInfo, kWarn, kError };
using LogSink = std::function<void(LogLevel, std::string_view)>;

// ---------------------------------------------------------------------------
// Letters and permutations

/// Uppercase choice letter for a presented position (0 -> 'A' ... 7 -> 'H').
char letter_of(int index);

/// Inverse of letter_of. Throws kDomain for anything outside 'A'..'H'.
int index_of(char letter);

// Canonical-index -> presented-index bijection.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> presented_of);

  static Permutation identity(int n);
  /// Fisher-Yates over mt19937_64 with rejection sampling, so the result is
  /// identical on every standard library.
  static Permutation from_seed(int n, std::uint64_t seed);

  int size() const noexcept { return static_cast<int>(presented_of_.size()); }
  int presented(int canonical) const;
  int canonical(int presented) const;
  const std::vector<int>& presented_order() const noexcept {
    return presented_of_;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> presented_of_;
  std::vector<int> canonical_of_;
};

/// Canonical index whose presented slot carries `letter`.
int unmap(char letter, const Permutation& permutation);

// ---------------------------------------------------------------------------
// Questions

struct QuestionInstance {
  std::string id;
  std::string instructions;
  std::string question;
  std::vector<std::string> choices;
  int gold_index = 0;
  std::optional<std::string> extra_context;
  std::string field_tag{kDefaultFieldTag};

  int num_choices() const noexcept { return static_cast<int>(choices.size()); }
  /// Throws kDomain when the choice count or gold index is out of range.
  void validate() const;

  friend bool operator==(const QuestionInstance&,
                         const QuestionInstance&) = default;
};

struct ShuffledInstance {
  QuestionInstance base;
  Permutation permutation;
  std::uint64_t seed = 0;

  /// Choice texts in presented order.
  std::vector<std::string> presented_choices() const;
  char gold_letter() const {
    return letter_of(permutation.presented(base.gold_index));
  }
};

// ---------------------------------------------------------------------------
// Personas, advocacy, influence

enum class PersonaLevel { kL0 = 0, kL1, kL2, kL3, kL4, kL5 };
inline constexpr int kNumPersonaLevels = 6;

std::string_view to_string(PersonaLevel level);
PersonaLevel persona_level_from_string(std::string_view text);

struct Persona {
  PersonaLevel level = PersonaLevel::kL0;
  std::optional<std::string> field_tag;

  bool needs_field() const noexcept { return level >= PersonaLevel::kL3; }
  /// Copy with field_tag filled from the instance when the level needs one.
  Persona resolved_for(const QuestionInstance& instance) const;

  friend bool operator==(const Persona&, const Persona&) = default;
};

struct AdvocacyTarget {
  std::string instance_id;
  int target_index = 0;
  bool is_gold = false;

  static AdvocacyTarget make(const QuestionInstance& instance, int target);
  friend bool operator==(const AdvocacyTarget&,
                         const AdvocacyTarget&) = default;
};

struct Explanation {
  AdvocacyTarget target;
  Persona advocate_persona;
  std::string text;
  std::optional<bool> validated;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct ConfidenceLevel {
  int percent = 100;
  double fraction() const noexcept { return percent / 100.0; }
  friend bool operator==(const ConfidenceLevel&,
                         const ConfidenceLevel&) = default;
};

inline const std::vector<int>& default_confidence_levels() {
  static const std::vector<int> levels{0, 25, 50, 75, 100};
  return levels;
}

enum class InfluenceKind { kNone, kOpinion, kExplanation };

std::string_view to_string(InfluenceKind kind);
InfluenceKind influence_kind_from_string(std::string_view text);

// What gets injected into the judge prompt. The factories enforce the
// kind-dependent presence rules; the fields stay public for serialization and
// are re-checked by validate().
struct InfluenceSpec {
  InfluenceKind kind = InfluenceKind::kNone;
  std::optional<AdvocacyTarget> target;
  std::optional<Explanation> explanation;
  std::optional<ConfidenceLevel> confidence;
  Persona advocate_persona;

  static InfluenceSpec none();
  static InfluenceSpec opinion(AdvocacyTarget target, Persona advocate,
                               std::optional<ConfidenceLevel> confidence = {});
  static InfluenceSpec explained(Explanation explanation,
                                 std::optional<ConfidenceLevel> confidence = {});

  void validate() const;

  friend bool operator==(const InfluenceSpec&, const InfluenceSpec&) = default;
};

// ---------------------------------------------------------------------------
// Predictions

struct ScoredPrediction {
  /// Probability per presented letter, index 0 is 'A'.
  std::vector<double> probs;
  char argmax_letter = 'A';
  int argmax_canonical = 0;

  double prob_of_canonical(int canonical, const Permutation& p) const {
    return probs.at(p.presented(canonical));
  }

  /// Softmax over per-letter log-scores (presented order). -inf entries get
  /// probability zero; at least one entry must be finite.
  static ScoredPrediction from_log_scores(std::span<const double> log_scores,
                                          const Permutation& permutation);
  /// Normalizes a non-negative weight vector (presented order).
  static ScoredPrediction from_weights(std::span<const double> weights,
                                       const Permutation& permutation);

  friend bool operator==(const ScoredPrediction&,
                         const ScoredPrediction&) = default;
};

/// Index of the largest value, lowest index on ties.
int argmax_lowest(std::span<const double> values);

}  // namespace sway
