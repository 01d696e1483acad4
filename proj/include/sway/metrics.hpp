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

// Aggregates over trial records. Counts are kept as integers and fractions
// derived at the end, so splits and merges are exact.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sway/records.hpp"

namespace sway::metrics {

struct Tally {
  long hits = 0;
  long total = 0;

  /// Throws kUndefinedMetric when total is zero.
  double fraction() const;
  std::optional<double> maybe_fraction() const;
  Tally& operator+=(const Tally& other);
  friend bool operator==(const Tally&, const Tally&) = default;
};

/// Fraction of unbiased trials whose argmax is the gold choice. Empty input
/// raises kUndefinedMetric; influenced records raise kInconsistentRecords.
double unbiased_accuracy(std::span<const TrialRecord> records);
Tally unbiased_tally(std::span<const TrialRecord> records);

struct InfluenceBreakdown {
  long n_correct = 0;         // trials advocating the gold choice
  long n_incorrect = 0;
  long adherent_correct = 0;  // argmax equals the advocated choice
  long adherent_incorrect = 0;

  long total() const { return n_correct + n_incorrect; }
  long adherent() const { return adherent_correct + adherent_incorrect; }
  double overall() const;
  std::optional<double> when_correct() const;
  std::optional<double> when_incorrect() const;

  void add(const TrialRecord& record);
  InfluenceBreakdown& operator+=(const InfluenceBreakdown& other);
  friend bool operator==(const InfluenceBreakdown&, const InfluenceBreakdown&) = default;
};

/// Single-influence records only; raises kUndefinedMetric when empty and
/// kInconsistentRecords for unbiased, multi or target-less records.
InfluenceBreakdown influence(std::span<const TrialRecord> records);

struct ShiftPoint {
  double p_unbiased = 0.0;
  double p_biased = 0.0;
  bool is_gold_advocacy = false;
  double shift() const { return p_biased - p_unbiased; }
};

/// Gold-choice probability before and after influence for one item under
/// one shuffle, judge persona and mitigation.
ShiftPoint probability_shift(const TrialRecord& unbiased, const TrialRecord& influenced);

struct PairedShift {
  const TrialRecord* unbiased = nullptr;
  const TrialRecord* influenced = nullptr;
  ShiftPoint point;
};

/// Pairs every single-influence record with its unbiased counterpart.
/// Influenced records without a counterpart are skipped.
std::vector<PairedShift> pair_shifts(std::span<const TrialRecord> records);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_confidence = 0.0;  // 0 for empty bins
  double empirical_accuracy = 0.0;
  long count = 0;
};

struct ReliabilityCurve {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  long n = 0;
};

/// Equal-width bins over confidence in [0, 1]; confidence 1 falls in the top
/// bin. Empty bins carry count 0 and do not enter the ECE.
ReliabilityCurve calibration_bins(std::span<const double> confidence,
                                  std::span<const char> correct, int n_bins = 10);
/// Confidence is the argmax probability, correctness argmax == gold.
ReliabilityCurve calibration_bins(std::span<const TrialRecord> records, int n_bins = 10);

using Cell = std::pair<PersonaLevel, PersonaLevel>;  // (judge, advocate)

struct PersonaMatrix {
  std::vector<PersonaLevel> judge_levels;
  std::vector<PersonaLevel> advocate_levels;
  std::map<std::string, std::map<Cell, InfluenceBreakdown>> per_dataset;
  std::map<Cell, double> dataset_mean;  // equal weight per dataset holding the cell
  std::map<Cell, double> pooled;        // all trials of the cell together
  std::vector<std::pair<std::string, Cell>> missing;  // (dataset, cell) without trials
};

/// Single-influence records only; other records are ignored.
PersonaMatrix persona_matrix(std::span<const TrialRecord> records);

/// Accuracy per influence count: K = 0 from unbiased records, K >= 1 from
/// multi-influence records. Single-influence records are ignored. Duplicate
/// targets within a record raise kInconsistentRecords.
std::map<int, Tally> multi_influence_accuracy(std::span<const TrialRecord> records);

/// Influence per declared confidence level over single-influence records
/// that carry a confidence.
std::map<int, InfluenceBreakdown> confidence_curve(std::span<const TrialRecord> records);

struct MitigationRow {
  prompts::MitigationConfig mitigation;
  InfluenceBreakdown with_explanation;
  InfluenceBreakdown without_explanation;
};

/// One row per mitigation config, sorted by system prompt, CoT, few-shot.
std::vector<MitigationRow> mitigation_table(std::span<const TrialRecord> records);

}  // namespace sway::metrics
