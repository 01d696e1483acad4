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

// One judged trial as persisted in records.jsonl.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sway/core.hpp"
#include "sway/prompts.hpp"

namespace sway {

struct TrialRecord {
  std::string trial_id;
  std::string dataset;
  std::string instance_id;
  int n_choices = 0;
  int gold_index = 0;
  std::uint64_t shuffle_seed = 0;
  std::vector<int> permutation;  // canonical index -> presented index
  Persona judge_persona;
  prompts::MitigationConfig mitigation;
  // One entry for unbiased (kind none) and single-influence trials, K entries
  // for multi-influence trials.
  std::vector<InfluenceSpec> influences;
  std::optional<int> multi_k;
  ScoredPrediction prediction;
  std::string backend_id;
  std::string scoring_variant;
  bool degraded = false;
  std::string prompt_digest;
  std::string timestamp;

  /// kNone when every block is kNone, else the kind of the first block.
  InfluenceKind kind() const;
  /// The single influence block; throws kInconsistentRecords for multi trials.
  const InfluenceSpec& influence() const;
  bool is_unbiased() const { return kind() == InfluenceKind::kNone && !multi_k; }
  bool is_single() const { return !multi_k && kind() != InfluenceKind::kNone; }
  bool correct() const { return prediction.argmax_canonical == gold_index; }
  /// Probability of the gold choice.
  double gold_probability() const;
  /// Checks internal consistency; throws kInconsistentRecords.
  void check() const;
};

void to_json(nlohmann::json& j, const TrialRecord& r);
void from_json(const nlohmann::json& j, TrialRecord& r);

/// One JSON object per line, compact, keys sorted.
std::string to_line(const TrialRecord& record);

/// Reads a records file. Blank lines are skipped; any malformed line raises
/// kInconsistentRecords naming the line number.
std::vector<TrialRecord> read_records(const std::filesystem::path& path);

}  // namespace sway
