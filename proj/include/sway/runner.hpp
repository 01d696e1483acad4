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

// Experiment specs, trial planning, advocate explanation generation and
// validation, and resumable trial execution.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sway/backends.hpp"
#include "sway/cache.hpp"
#include "sway/core.hpp"
#include "sway/datasets.hpp"
#include "sway/prompts.hpp"
#include "sway/records.hpp"

namespace sway::runner {

struct DatasetEntry {
  datasets::DatasetManifest manifest;
  std::filesystem::path path;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::uint64_t run_seed = 0;
  std::vector<DatasetEntry> datasets;
  backends::BackendDescriptor judge_backend;
  backends::BackendDescriptor advocate_backend;
  std::optional<backends::BackendDescriptor> validator_backend;
  std::vector<InfluenceKind> influence_kinds;
  std::vector<Persona> judge_personas{Persona{}};
  std::vector<Persona> advocate_personas{Persona{}};
  std::vector<prompts::MitigationConfig> mitigation_grid{prompts::MitigationConfig{}};
  std::vector<int> confidence_levels;  // empty: no confidence line
  std::vector<int> multi_influence_ks;
  InfluenceKind multi_influence_kind = InfluenceKind::kOpinion;
  backends::GenerationParams params;
  prompts::PromptTexts texts;
  std::filesystem::path cache_dir;
  bool allow_degraded = true;
  std::string digest;  // SHA-256 of the spec with keys sorted

  void validate() const;
};

/// Relative paths resolve against base_dir.
ExperimentSpec spec_from_json(const nlohmann::json& j,
                              const std::filesystem::path& base_dir);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct LoadedDataset {
  datasets::DatasetManifest manifest;
  datasets::LoadResult data;
  std::vector<ShuffledInstance> shuffled;            // parallel to data.instances
  std::vector<prompts::FewShotExample> exemplars;    // from the held-out slice
};

struct TrialDescriptor {
  std::size_t seq = 0;
  std::string trial_id;
  int dataset = 0;
  int instance = 0;
  Persona judge;
  prompts::MitigationConfig mitigation;
  InfluenceKind kind = InfluenceKind::kNone;
  std::vector<int> targets;  // canonical indices, one per influence block
  Persona advocate;
  std::optional<int> confidence;
  std::optional<int> multi_k;
};

struct Plan {
  std::vector<LoadedDataset> datasets;
  std::vector<TrialDescriptor> trials;
};

/// Loads the datasets and expands the spec into trials. Order: dataset,
/// instance, judge persona, mitigation, then the unbiased trial, single
/// influences (kind, advocate, confidence, target) and multi-influence
/// windows (K, advocate, first target). Raises kConfig on an empty plan.
Plan plan(const ExperimentSpec& spec, const LogSink& log = {});

// ---------------------------------------------------------------------------
// Explanations

struct ExplanationNeed {
  int dataset = 0;
  int instance = 0;
  int target = 0;
  Persona advocate;
};

/// Distinct (instance, target, advocate persona) explanations the plan uses,
/// in first-use order.
std::vector<ExplanationNeed> explanation_needs(const Plan& plan);

class ExplanationStore {
 public:
  const Explanation* find(const std::string& dataset, const AdvocacyTarget& target,
                          const Persona& advocate) const;
  void put(const std::string& dataset, Explanation explanation);
  std::size_t size() const { return entries_.size(); }

  /// Line-delimited, sorted by key.
  void save(const std::filesystem::path& path) const;
  static ExplanationStore load(const std::filesystem::path& path);

  template <class F>
  void for_each(F&& f) {
    for (auto& [key, entry] : entries_) f(entry.first, entry.second);
  }

 private:
  static std::string key_of(const std::string& dataset, const AdvocacyTarget& target,
                            const Persona& advocate);
  std::map<std::string, std::pair<std::string, Explanation>> entries_;
};

struct ExplanationStats {
  long requested = 0;
  long reused = 0;      // already in the store
  long generated = 0;
  long failed = 0;      // trials needing these become blocked
  long context_missing = 0;
};

struct ValidationStats {
  long yes = 0;
  long no = 0;
  long indeterminate = 0;
};

/// Fills the store with every explanation the plan needs. Failures are
/// logged and counted; backend-down and config errors propagate.
ExplanationStats generate_explanations(const ExperimentSpec& spec, const Plan& plan,
                                       backends::Backend& advocate,
                                       ExplanationStore& store, const LogSink& log = {});

/// Asks both yes/no questions per explanation; validated is true only when
/// both answers are yes and unset when either answer is unparseable.
ValidationStats validate_explanations(const ExperimentSpec& spec, const Plan& plan,
                                      backends::Backend& validator,
                                      ExplanationStore& store, const LogSink& log = {});

/// "yes", "no" or nullopt from a validator reply.
std::optional<bool> parse_yes_no(std::string_view reply);

// ---------------------------------------------------------------------------
// Execution

/// Influence blocks of a trial; raises kContext when an explanation is
/// missing from the store (the trial is blocked).
std::vector<InfluenceSpec> trial_influences(const Plan& plan, const TrialDescriptor& trial,
                                            const ExplanationStore& store);

/// The judge conversation for a trial, re-renderable from the plan alone.
prompts::JudgePrompt render_trial_prompt(const ExperimentSpec& spec, const Plan& plan,
                                         const TrialDescriptor& trial,
                                         std::span<const InfluenceSpec> influences);

struct SessionCounts {
  long planned = 0;
  long completed = 0;  // including trials carried over from earlier sessions
  long resumed = 0;    // carried over
  long cached = 0;
  long degraded = 0;
  long failed = 0;
  long blocked = 0;
};

struct ExecuteOptions {
  std::filesystem::path out_dir;
  bool resume = false;
  backends::Clock clock;  // stamps records whose score has no cache entry
  LogSink log;
};

struct ExecuteResult {
  SessionCounts counts;
  bool halted = false;
  std::optional<Error> halt_error;
  std::vector<TrialRecord> records;  // plan order; empty when halted
};

/// Runs every trial not already in records.partial.jsonl. Writes
/// records.jsonl and failures.jsonl once all trials are resolved.
ExecuteResult execute(const ExperimentSpec& spec, const Plan& plan,
                      const ExplanationStore& store, backends::Backend& judge,
                      const ExecuteOptions& options);

// ---------------------------------------------------------------------------
// Whole runs

using BackendFactory =
    std::function<std::unique_ptr<backends::Backend>(const backends::BackendDescriptor&)>;

struct RunOptions {
  std::filesystem::path out_dir;
  bool resume = false;
  std::optional<long> max_trials;
  std::optional<std::filesystem::path> cache_dir;  // overrides the spec
  BackendFactory backend_factory;  // defaults to backends::make_backend
  backends::Clock clock;           // cache-entry stamps; defaults to utc_now
  LogSink log;
};

struct RunResult {
  ExecuteResult execution;
  ExplanationStats explanations;
  std::optional<ValidationStats> validation;
  long backend_calls = 0;  // cache misses across all backends this session
};

/// explain + (validate when a validator is configured) + execute, with the
/// run manifest appended in out_dir. Raises kConfig when out_dir already
/// holds a run and resume is off.
RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options);

/// Explanation generation only; writes out_dir/explanations.jsonl.
ExplanationStats run_explain(const ExperimentSpec& spec, const RunOptions& options);

/// Validates out_dir/explanations.jsonl in place.
ValidationStats run_validate(const ExperimentSpec& spec, const RunOptions& options);

struct DatasetSummary {
  std::string dataset;
  std::optional<double> unbiased_accuracy;
  std::optional<double> influence;
  long unbiased_trials = 0;
  long influenced_trials = 0;
};

std::vector<DatasetSummary> summarize(std::span<const TrialRecord> records);

}  // namespace sway::runner
