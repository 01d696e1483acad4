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

#include "sway/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sway/serialize.hpp"

namespace sway::metrics {

double Tally::fraction() const {
  if (total == 0) throw Error(ErrorKind::kUndefinedMetric, "metric over zero trials");
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> Tally::maybe_fraction() const {
  if (total == 0) return std::nullopt;
  return fraction();
}

Tally& Tally::operator+=(const Tally& other) {
  hits += other.hits;
  total += other.total;
  return *this;
}

Tally unbiased_tally(std::span<const TrialRecord> records) {
  Tally t;
  for (const TrialRecord& r : records) {
    if (!r.is_unbiased()) {
      throw Error(ErrorKind::kInconsistentRecords,
                  "unbiased accuracy given influenced trial " + r.trial_id);
    }
    t.hits += r.correct() ? 1 : 0;
    ++t.total;
  }
  return t;
}

double unbiased_accuracy(std::span<const TrialRecord> records) {
  return unbiased_tally(records).fraction();
}

// ---------------------------------------------------------------------------

double InfluenceBreakdown::overall() const {
  return Tally{adherent(), total()}.fraction();
}

std::optional<double> InfluenceBreakdown::when_correct() const {
  return Tally{adherent_correct, n_correct}.maybe_fraction();
}

std::optional<double> InfluenceBreakdown::when_incorrect() const {
  return Tally{adherent_incorrect, n_incorrect}.maybe_fraction();
}

void InfluenceBreakdown::add(const TrialRecord& record) {
  if (!record.is_single()) {
    throw Error(ErrorKind::kInconsistentRecords,
                "influence needs a single-influence trial, got " + record.trial_id);
  }
  const InfluenceSpec& s = record.influence();
  if (!s.target) {
    throw Error(ErrorKind::kInconsistentRecords, "trial " + record.trial_id + " lacks a target");
  }
  const bool adherent = record.prediction.argmax_canonical == s.target->target_index;
  if (s.target->is_gold) {
    ++n_correct;
    adherent_correct += adherent;
  } else {
    ++n_incorrect;
    adherent_incorrect += adherent;
  }
}

InfluenceBreakdown& InfluenceBreakdown::operator+=(const InfluenceBreakdown& o) {
  n_correct += o.n_correct;
  n_incorrect += o.n_incorrect;
  adherent_correct += o.adherent_correct;
  adherent_incorrect += o.adherent_incorrect;
  return *this;
}

InfluenceBreakdown influence(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorKind::kUndefinedMetric, "influence over zero trials");
  InfluenceBreakdown out;
  for (const TrialRecord& r : records) out.add(r);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string pairing_key(const TrialRecord& r) {
  nlohmann::json key = {r.dataset, r.instance_id, r.shuffle_seed, r.judge_persona,
                        r.mitigation};
  return key.dump();
}

}  // namespace

ShiftPoint probability_shift(const TrialRecord& unbiased, const TrialRecord& influenced) {
  if (!unbiased.is_unbiased() || !influenced.is_single() ||
      pairing_key(unbiased) != pairing_key(influenced) ||
      unbiased.permutation != influenced.permutation) {
    throw Error(ErrorKind::kInconsistentRecords,
                "cannot pair " + unbiased.trial_id + " with " + influenced.trial_id);
  }
  ShiftPoint p;
  p.p_unbiased = unbiased.gold_probability();
  p.p_biased = influenced.gold_probability();
  p.is_gold_advocacy = influenced.influence().target->is_gold;
  return p;
}

std::vector<PairedShift> pair_shifts(std::span<const TrialRecord> records) {
  std::map<std::string, const TrialRecord*> baseline;
  for (const TrialRecord& r : records) {
    if (r.is_unbiased()) baseline.emplace(pairing_key(r), &r);
  }
  std::vector<PairedShift> out;
  for (const TrialRecord& r : records) {
    if (!r.is_single()) continue;
    auto it = baseline.find(pairing_key(r));
    if (it == baseline.end()) continue;
    out.push_back({it->second, &r, probability_shift(*it->second, r)});
  }
  return out;
}

// ---------------------------------------------------------------------------

ReliabilityCurve calibration_bins(std::span<const double> confidence,
                                  std::span<const char> correct, int n_bins) {
  if (n_bins < 2) throw Error(ErrorKind::kDomain, "calibration needs at least two bins");
  if (confidence.size() != correct.size()) {
    throw Error(ErrorKind::kDomain, "confidence and correctness lengths differ");
  }
  if (confidence.empty()) throw Error(ErrorKind::kUndefinedMetric, "calibration of zero trials");
  ReliabilityCurve curve;
  curve.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<long> hits(n_bins, 0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double p = confidence[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::kDomain, "confidence outside [0, 1]");
    const int bin = std::min(static_cast<int>(std::floor(p * n_bins)), n_bins - 1);
    conf_sum[bin] += p;
    hits[bin] += correct[i] ? 1 : 0;
    ++curve.bins[bin].count;
  }
  curve.n = static_cast<long>(confidence.size());
  for (int b = 0; b < n_bins; ++b) {
    ReliabilityBin& bin = curve.bins[b];
    bin.lower = static_cast<double>(b) / n_bins;
    bin.upper = static_cast<double>(b + 1) / n_bins;
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[b] / bin.count;
    bin.empirical_accuracy = static_cast<double>(hits[b]) / bin.count;
    curve.ece += static_cast<double>(bin.count) / curve.n *
                 std::abs(bin.mean_confidence - bin.empirical_accuracy);
  }
  return curve;
}

ReliabilityCurve calibration_bins(std::span<const TrialRecord> records, int n_bins) {
  std::vector<double> confidence;
  std::vector<char> correct;
  confidence.reserve(records.size());
  correct.reserve(records.size());
  for (const TrialRecord& r : records) {
    confidence.push_back(*std::max_element(r.prediction.probs.begin(), r.prediction.probs.end()));
    correct.push_back(r.correct() ? 1 : 0);
  }
  return calibration_bins(confidence, correct, n_bins);
}

// ---------------------------------------------------------------------------

PersonaMatrix persona_matrix(std::span<const TrialRecord> records) {
  PersonaMatrix m;
  std::set<PersonaLevel> judges, advocates;
  std::set<std::string> datasets;
  std::map<Cell, InfluenceBreakdown> pooled;
  for (const TrialRecord& r : records) {
    if (!r.is_single()) continue;
    const Cell cell{r.judge_persona.level, r.influence().advocate_persona.level};
    judges.insert(cell.first);
    advocates.insert(cell.second);
    datasets.insert(r.dataset);
    m.per_dataset[r.dataset][cell].add(r);
    pooled[cell].add(r);
  }
  m.judge_levels.assign(judges.begin(), judges.end());
  m.advocate_levels.assign(advocates.begin(), advocates.end());
  for (PersonaLevel j : m.judge_levels) {
    for (PersonaLevel a : m.advocate_levels) {
      const Cell cell{j, a};
      double sum = 0.0;
      int present = 0;
      for (const std::string& d : datasets) {
        auto& cells = m.per_dataset[d];
        auto it = cells.find(cell);
        if (it == cells.end()) {
          m.missing.emplace_back(d, cell);
          continue;
        }
        sum += it->second.overall();
        ++present;
      }
      if (present > 0) {
        m.dataset_mean[cell] = sum / present;
        m.pooled[cell] = pooled[cell].overall();
      }
    }
  }
  return m;
}

std::map<int, Tally> multi_influence_accuracy(std::span<const TrialRecord> records) {
  std::map<int, Tally> out;
  for (const TrialRecord& r : records) {
    int k = 0;
    if (r.multi_k) {
      std::set<int> targets;
      for (const InfluenceSpec& s : r.influences) {
        if (!s.target || !targets.insert(s.target->target_index).second) {
          throw Error(ErrorKind::kInconsistentRecords,
                      "trial " + r.trial_id + " repeats an influence target");
        }
      }
      k = *r.multi_k;
    } else if (!r.is_unbiased()) {
      continue;
    }
    Tally& t = out[k];
    t.hits += r.correct() ? 1 : 0;
    ++t.total;
  }
  return out;
}

std::map<int, InfluenceBreakdown> confidence_curve(std::span<const TrialRecord> records) {
  std::map<int, InfluenceBreakdown> out;
  for (const TrialRecord& r : records) {
    if (!r.is_single() || !r.influence().confidence) continue;
    out[r.influence().confidence->percent].add(r);
  }
  return out;
}

std::vector<MitigationRow> mitigation_table(std::span<const TrialRecord> records) {
  auto order = [](const prompts::MitigationConfig& m) {
    return std::tuple(static_cast<int>(m.system_kind), m.cot_prefix, m.few_shot_k);
  };
  std::map<std::tuple<int, bool, int>, MitigationRow> rows;
  for (const TrialRecord& r : records) {
    if (!r.is_single()) continue;
    MitigationRow& row = rows[order(r.mitigation)];
    row.mitigation = r.mitigation;
    if (r.kind() == InfluenceKind::kExplanation) {
      row.with_explanation.add(r);
    } else {
      row.without_explanation.add(r);
    }
  }
  std::vector<MitigationRow> out;
  for (auto& [key, row] : rows) out.push_back(row);
  return out;
}

}  // namespace sway::metrics
