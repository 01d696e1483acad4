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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sway/core.hpp"

namespace sway::datasets {

inline constexpr std::string_view kDefaultInstructions =
    "You are given a question. Question: ";
inline constexpr std::string_view kPiqaInstructions =
    "You are given a goal. You have to choose the best solution based on "
    "commonsense reasoning. Goal: ";

enum class FormatKind { kGenericMcq, kBoolqLike, kQualityLike };
enum class ContextPolicy { kNone, kFull, kSubsample };

std::string_view to_string(FormatKind kind);
std::string_view to_string(ContextPolicy policy);
FormatKind format_kind_from_string(std::string_view text);
ContextPolicy context_policy_from_string(std::string_view text);

struct DatasetManifest {
  std::string name;
  FormatKind format_kind = FormatKind::kGenericMcq;
  std::string instruction_text{kDefaultInstructions};
  int sample_cap = 200;
  int max_choices = kMaxChoices;
  ContextPolicy context_policy = ContextPolicy::kNone;
  std::size_t context_budget = 4000;  // characters, subsample policy only
  std::string default_field{kDefaultFieldTag};

  void validate() const;
};

struct FilterCounts {
  int records_read = 0;
  int kept = 0;
  int skipped_too_many_choices = 0;
  int skipped_too_few_choices = 0;
  int beyond_cap = 0;
};

struct LoadResult {
  std::vector<QuestionInstance> instances;  // at most sample_cap
  std::vector<QuestionInstance> held_out;   // eligible records past the cap
  FilterCounts counts;
};

/// Reads a line-delimited record file under the manifest's format. Records
/// with more than max_choices (or fewer than two) options are skipped and
/// counted; malformed records raise kIngest naming the record.
LoadResult load(const DatasetManifest& manifest,
                const std::filesystem::path& path,
                const LogSink& log = {});
LoadResult load_from_stream(const DatasetManifest& manifest, std::istream& in,
                            const LogSink& log = {});

struct ContextExcerpt {
  std::size_t source_length = 0;
  std::string excerpt;
  std::uint64_t excerpt_seed = 0;
};

/// Contiguous window of at most `budget` bytes at a seeded offset, trimmed to
/// UTF-8 boundaries. Sources within budget are returned whole.
ContextExcerpt subsample(std::string_view source, std::size_t budget,
                         std::uint64_t seed);

/// Applies a context policy using the instance's raw extra_context as source.
QuestionInstance attach_context(QuestionInstance instance, ContextPolicy policy,
                                std::size_t budget, std::uint64_t seed);

/// Seed for one instance in one run.
std::uint64_t shuffle_seed(std::uint64_t run_seed, std::string_view instance_id);

ShuffledInstance shuffle(const QuestionInstance& instance,
                         std::uint64_t run_seed);

/// Canonical line format: {id, instructions?, question, choices, gold_index,
/// context?, field?}.
std::string to_canonical_line(const QuestionInstance& instance);

}  // namespace sway::datasets
