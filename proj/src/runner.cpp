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

#include "sway/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sway/digest.hpp"
#include "sway/random.hpp"
#include "sway/serialize.hpp"

namespace sway::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const LogSink& log, LogLevel level, const std::string& message) {
  if (log) log(level, message);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn handles its own
// per-item failures; anything it throws stops the loop and is rethrown.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::exception_ptr first;
  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next++;
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  const int extra = std::max(0, std::min<int>(workers, static_cast<int>(n)) - 1);
  std::vector<std::thread> threads;
  threads.reserve(extra);
  for (int t = 0; t < extra; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

bool halts_run(ErrorKind kind) {
  return kind == ErrorKind::kBackendDown || kind == ErrorKind::kConfig ||
         kind == ErrorKind::kIo;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot replace " + path.string());
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string trial_id_of(const ExperimentSpec& spec, const Plan& p, const TrialDescriptor& t) {
  const QuestionInstance& q = p.datasets[t.dataset].data.instances[t.instance];
  json key = {{"dataset", p.datasets[t.dataset].manifest.name},
              {"instance", q.id},
              {"run_seed", spec.run_seed},
              {"judge", t.judge},
              {"mitigation", t.mitigation},
              {"kind", to_string(t.kind)},
              {"targets", t.targets},
              {"advocate", t.advocate},
              {"confidence", t.confidence ? json(*t.confidence) : json(nullptr)},
              {"multi_k", t.multi_k ? json(*t.multi_k) : json(nullptr)}};
  return "t" + sha256_hex(key.dump()).substr(0, 20);
}

}  // namespace

// ---------------------------------------------------------------------------
// Planning

Plan plan(const ExperimentSpec& spec, const LogSink& log) {
  spec.validate();
  Plan out;
  int max_shots = 0;
  for (const auto& m : spec.mitigation_grid) max_shots = std::max(max_shots, m.few_shot_k);

  for (const DatasetEntry& entry : spec.datasets) {
    LoadedDataset ds;
    ds.manifest = entry.manifest;
    ds.data = datasets::load(entry.manifest, entry.path, log);
    for (const QuestionInstance& q : ds.data.instances) {
      ds.shuffled.push_back(datasets::shuffle(q, spec.run_seed));
    }
    if (static_cast<std::size_t>(max_shots) > ds.data.held_out.size()) {
      throw Error(ErrorKind::kConfig,
                  entry.manifest.name + ": few_shot_k=" + std::to_string(max_shots) +
                      " needs that many held-out records past the sample cap, found " +
                      std::to_string(ds.data.held_out.size()));
    }
    for (int k = 0; k < max_shots; ++k) {
      const QuestionInstance& q = ds.data.held_out[k];
      prompts::FewShotExample ex;
      ex.shuffled = datasets::shuffle(q, spec.run_seed);
      Rng rng(mix_seed(spec.run_seed, "exemplar:" + q.id));
      const int target = static_cast<int>(rng.below(q.num_choices()));
      ex.influences.push_back(InfluenceSpec::opinion(AdvocacyTarget::make(q, target), Persona{}));
      ds.exemplars.push_back(std::move(ex));
    }
    out.datasets.push_back(std::move(ds));
  }

  std::vector<std::optional<int>> confidences;
  if (spec.confidence_levels.empty()) {
    confidences.push_back(std::nullopt);
  } else {
    for (int c : spec.confidence_levels) confidences.push_back(c);
  }

  for (int d = 0; d < static_cast<int>(out.datasets.size()); ++d) {
    const auto& instances = out.datasets[d].data.instances;
    for (int i = 0; i < static_cast<int>(instances.size()); ++i) {
      const int n = instances[i].num_choices();
      for (const Persona& judge : spec.judge_personas) {
        for (const auto& mitigation : spec.mitigation_grid) {
          TrialDescriptor base;
          base.dataset = d;
          base.instance = i;
          base.judge = judge;
          base.mitigation = mitigation;
          const bool unbiased =
              std::find(spec.influence_kinds.begin(), spec.influence_kinds.end(),
                        InfluenceKind::kNone) != spec.influence_kinds.end();
          if (unbiased) out.trials.push_back(base);
          for (InfluenceKind kind : spec.influence_kinds) {
            if (kind == InfluenceKind::kNone) continue;
            for (const Persona& advocate : spec.advocate_personas) {
              for (const auto& confidence : confidences) {
                for (int j = 0; j < n; ++j) {
                  TrialDescriptor t = base;
                  t.kind = kind;
                  t.targets = {j};
                  t.advocate = advocate;
                  t.confidence = confidence;
                  out.trials.push_back(std::move(t));
                }
              }
            }
          }
          for (int k : spec.multi_influence_ks) {
            if (k > n) continue;
            for (const Persona& advocate : spec.advocate_personas) {
              for (int j = 0; j < n; ++j) {
                TrialDescriptor t = base;
                t.kind = spec.multi_influence_kind;
                for (int b = 0; b < k; ++b) t.targets.push_back((j + b) % n);
                t.advocate = advocate;
                t.multi_k = k;
                out.trials.push_back(std::move(t));
              }
            }
          }
        }
      }
    }
  }
  if (out.trials.empty()) throw Error(ErrorKind::kConfig, "the spec expands to zero trials");
  for (std::size_t s = 0; s < out.trials.size(); ++s) {
    out.trials[s].seq = s;
    out.trials[s].trial_id = trial_id_of(spec, out, out.trials[s]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Explanations

std::vector<ExplanationNeed> explanation_needs(const Plan& plan) {
  std::vector<ExplanationNeed> out;
  std::set<std::string> seen;
  for (const TrialDescriptor& t : plan.trials) {
    if (t.kind != InfluenceKind::kExplanation) continue;
    for (int target : t.targets) {
      const std::string key =
          json{t.dataset, t.instance, target, json(t.advocate)}.dump();
      if (seen.insert(key).second) out.push_back({t.dataset, t.instance, target, t.advocate});
    }
  }
  return out;
}

std::string ExplanationStore::key_of(const std::string& dataset, const AdvocacyTarget& target,
                                     const Persona& advocate) {
  return json{dataset, target.instance_id, target.target_index, json(advocate)}.dump();
}

const Explanation* ExplanationStore::find(const std::string& dataset,
                                          const AdvocacyTarget& target,
                                          const Persona& advocate) const {
  auto it = entries_.find(key_of(dataset, target, advocate));
  return it == entries_.end() ? nullptr : &it->second.second;
}

void ExplanationStore::put(const std::string& dataset, Explanation explanation) {
  const std::string key = key_of(dataset, explanation.target, explanation.advocate_persona);
  entries_[key] = {dataset, std::move(explanation)};
}

void ExplanationStore::save(const fs::path& path) const {
  std::string content;
  for (const auto& [key, entry] : entries_) {
    content += json{{"dataset", entry.first}, {"explanation", entry.second}}.dump();
    content += '\n';
  }
  write_atomic(path, content);
}

ExplanationStore ExplanationStore::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  ExplanationStore store;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      store.put(j.at("dataset").get<std::string>(), j.at("explanation").get<Explanation>());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kConfig,
                  path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  return store;
}

ExplanationStats generate_explanations(const ExperimentSpec& spec, const Plan& plan,
                                       backends::Backend& advocate, ExplanationStore& store,
                                       const LogSink& log) {
  ExplanationStats stats;
  std::vector<ExplanationNeed> todo;
  for (const ExplanationNeed& need : explanation_needs(plan)) {
    ++stats.requested;
    const LoadedDataset& ds = plan.datasets[need.dataset];
    const QuestionInstance& q = ds.data.instances[need.instance];
    if (store.find(ds.manifest.name, AdvocacyTarget::make(q, need.target), need.advocate)) {
      ++stats.reused;
    } else {
      todo.push_back(need);
    }
  }

  std::vector<std::optional<Explanation>> results(todo.size());
  std::atomic<long> missing_context{0};
  parallel_for(todo.size(), spec.advocate_backend.inflight_limit, [&](std::size_t i) {
    const ExplanationNeed& need = todo[i];
    const LoadedDataset& ds = plan.datasets[need.dataset];
    const QuestionInstance& q = ds.data.instances[need.instance];
    const AdvocacyTarget target = AdvocacyTarget::make(q, need.target);
    try {
      const bool with_context = ds.manifest.context_policy != datasets::ContextPolicy::kNone;
      prompts::ExplanationRequest req =
          prompts::render_explanation_request(q, target, need.advocate, with_context, spec.texts);
      if (req.context_missing) ++missing_context;
      backends::GenerateContext ctx;
      ctx.purpose = backends::GeneratePurpose::kExplanation;
      ctx.instance = &q;
      ctx.target = target;
      ctx.persona = need.advocate;
      backends::GenerateRequest gen;
      gen.prompt = prompts::render_chat(req.turns, advocate.chat_template(), true);
      gen.params = spec.params;
      if (!gen.params.seed) {
        gen.params.seed = mix_seed(spec.run_seed, json{ds.manifest.name, q.id, need.target,
                                                       json(need.advocate)}
                                                      .dump());
      }
      gen.context = &ctx;
      std::string text = trim(advocate.generate(gen));
      if (text.empty()) throw Error(ErrorKind::kCapability, "advocate returned empty text");
      results[i] = Explanation{target, need.advocate, std::move(text), std::nullopt};
    } catch (const Error& e) {
      if (halts_run(e.kind())) throw;
      emit(log, LogLevel::kWarn,
           "explanation for " + ds.manifest.name + "/" + q.id + " target " +
               std::to_string(need.target) + " failed: " + e.what());
    }
  });

  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (!results[i]) {
      ++stats.failed;
      continue;
    }
    store.put(plan.datasets[todo[i].dataset].manifest.name, std::move(*results[i]));
    ++stats.generated;
  }
  stats.context_missing = missing_context.load();
  if (stats.context_missing > 0) {
    emit(log, LogLevel::kWarn,
         std::to_string(stats.context_missing) +
             " explanation requests asked for context the item does not have");
  }
  return stats;
}

std::optional<bool> parse_yes_no(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
  std::string word;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i]))) {
    word += static_cast<char>(std::tolower(static_cast<unsigned char>(reply[i])));
    ++i;
  }
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

ValidationStats validate_explanations(const ExperimentSpec& spec, const Plan& plan,
                                      backends::Backend& validator, ExplanationStore& store,
                                      const LogSink& log) {
  std::map<std::pair<std::string, std::string>, const QuestionInstance*> instances;
  for (const LoadedDataset& ds : plan.datasets) {
    for (const QuestionInstance& q : ds.data.instances) instances[{ds.manifest.name, q.id}] = &q;
  }
  std::vector<std::pair<const QuestionInstance*, Explanation*>> items;
  store.for_each([&](const std::string& dataset, Explanation& e) {
    auto it = instances.find({dataset, e.target.instance_id});
    if (it == instances.end()) {
      emit(log, LogLevel::kWarn, "explanation for unknown item " + dataset + "/" +
                                     e.target.instance_id + " left unvalidated");
      return;
    }
    items.emplace_back(it->second, &e);
  });

  backends::GenerationParams params = spec.params;
  params.temperature = 0.0;
  params.max_new_tokens = 8;
  std::vector<int> verdicts(items.size(), -1);  // 1 yes, 0 no, -1 indeterminate
  const int workers = spec.validator_backend ? spec.validator_backend->inflight_limit
                                             : spec.judge_backend.inflight_limit;
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const QuestionInstance& q = *items[i].first;
    const Explanation& e = *items[i].second;
    std::vector<std::optional<bool>> answers;
    for (const auto& turns : {prompts::render_validation_promote(q, e, spec.texts),
                              prompts::render_validation_reasoning(q, e, spec.texts)}) {
      backends::GenerateContext ctx;
      ctx.purpose = backends::GeneratePurpose::kValidation;
      ctx.instance = &q;
      ctx.target = e.target;
      ctx.persona = e.advocate_persona;
      ctx.explanation_text = e.text;
      backends::GenerateRequest gen;
      gen.prompt = prompts::render_chat(turns, validator.chat_template(), true);
      gen.params = params;
      gen.context = &ctx;
      try {
        answers.push_back(parse_yes_no(validator.generate(gen)));
      } catch (const Error& err) {
        if (halts_run(err.kind())) throw;
        answers.push_back(std::nullopt);
      }
    }
    if (answers[0] == false || answers[1] == false) {
      verdicts[i] = 0;
    } else if (answers[0] && answers[1]) {
      verdicts[i] = 1;
    }
  });

  ValidationStats stats;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Explanation& e = *items[i].second;
    if (verdicts[i] < 0) {
      e.validated.reset();
      ++stats.indeterminate;
      emit(log, LogLevel::kWarn, "validation of " + e.target.instance_id + " target " +
                                     std::to_string(e.target.target_index) +
                                     " is indeterminate");
    } else {
      e.validated = verdicts[i] == 1;
      ++(verdicts[i] == 1 ? stats.yes : stats.no);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Execution

std::vector<InfluenceSpec> trial_influences(const Plan& plan, const TrialDescriptor& t,
                                            const ExplanationStore& store) {
  if (t.kind == InfluenceKind::kNone) return {InfluenceSpec::none()};
  const LoadedDataset& ds = plan.datasets[t.dataset];
  const QuestionInstance& q = ds.data.instances[t.instance];
  std::optional<ConfidenceLevel> confidence;
  if (t.confidence) confidence = ConfidenceLevel{*t.confidence};
  std::vector<InfluenceSpec> out;
  for (int target_index : t.targets) {
    const AdvocacyTarget target = AdvocacyTarget::make(q, target_index);
    if (t.kind == InfluenceKind::kOpinion) {
      out.push_back(InfluenceSpec::opinion(target, t.advocate, confidence));
      continue;
    }
    const Explanation* e = store.find(ds.manifest.name, target, t.advocate);
    if (!e) {
      throw Error(ErrorKind::kContext, "no explanation for " + q.id + " target " +
                                           std::to_string(target_index));
    }
    out.push_back(InfluenceSpec::explained(*e, confidence));
  }
  return out;
}

prompts::JudgePrompt render_trial_prompt(const ExperimentSpec& spec, const Plan& plan,
                                         const TrialDescriptor& t,
                                         std::span<const InfluenceSpec> influences) {
  const LoadedDataset& ds = plan.datasets[t.dataset];
  return prompts::render_judge_prompt(ds.shuffled[t.instance], influences, t.judge,
                                      t.mitigation, ds.exemplars, spec.texts);
}

namespace {

struct Failure {
  std::string status;  // "failed" or "blocked"
  std::string kind;
  std::string message;
};

// Reads the partial records of an earlier session. Torn or unparseable lines
// (a crash mid-write) are dropped and the file is rewritten without them.
std::map<std::string, std::string> load_partial(const fs::path& path, const LogSink& log) {
  std::map<std::string, std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line, kept;
  int dropped = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      TrialRecord r = json::parse(line).get<TrialRecord>();
      r.check();
      if (lines.emplace(r.trial_id, line).second) kept += line + "\n";
    } catch (const std::exception&) {
      ++dropped;
    }
  }
  in.close();
  if (dropped > 0) {
    emit(log, LogLevel::kWarn,
         "dropped " + std::to_string(dropped) + " unreadable line(s) from " + path.string());
    write_atomic(path, kept);
  }
  return lines;
}

}  // namespace

ExecuteResult execute(const ExperimentSpec& spec, const Plan& plan,
                      const ExplanationStore& store, backends::Backend& judge,
                      const ExecuteOptions& options) {
  if (plan.trials.empty()) throw Error(ErrorKind::kConfig, "nothing to execute");
  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + options.out_dir.string());
  const fs::path partial_path = options.out_dir / "records.partial.jsonl";
  if (!options.resume) fs::remove(partial_path, ec);

  ExecuteResult result;
  result.counts.planned = static_cast<long>(plan.trials.size());
  std::map<std::string, std::string> done = load_partial(partial_path, options.log);

  std::vector<std::size_t> pending;
  for (const TrialDescriptor& t : plan.trials) {
    if (done.count(t.trial_id)) {
      ++result.counts.resumed;
    } else {
      pending.push_back(t.seq);
    }
  }
  if (result.counts.resumed > 0) {
    emit(options.log, LogLevel::kInfo,
         "resuming: " + std::to_string(result.counts.resumed) + " trial(s) already complete");
  }

  std::ofstream partial(partial_path, std::ios::binary | std::ios::app);
  if (!partial) throw Error(ErrorKind::kIo, "cannot append to " + partial_path.string());
  std::mutex sink_mu;
  std::map<std::string, Failure> failures;
  std::atomic<long> cached{0}, degraded{0};
  std::atomic<bool> halt{false};
  std::optional<Error> halt_error;
  const backends::Clock clock = options.clock ? options.clock : backends::Clock(backends::utc_now);

  parallel_for(pending.size(), spec.judge_backend.inflight_limit, [&](std::size_t k) {
    if (halt.load()) return;
    const TrialDescriptor& t = plan.trials[pending[k]];
    const LoadedDataset& ds = plan.datasets[t.dataset];
    const ShuffledInstance& s = ds.shuffled[t.instance];
    try {
      std::vector<InfluenceSpec> influences;
      try {
        influences = trial_influences(plan, t, store);
      } catch (const Error& e) {
        std::lock_guard lock(sink_mu);
        failures[t.trial_id] = {"blocked", std::string(to_string(e.kind())), e.what()};
        emit(options.log, LogLevel::kWarn, "trial " + t.trial_id + " blocked: " + e.what());
        return;
      }
      const prompts::JudgePrompt prompt = render_trial_prompt(spec, plan, t, influences);
      backends::JudgeContext ctx{&s, influences, t.judge, t.mitigation};
      backends::ScoreOptions score_options;
      score_options.allow_degraded = spec.allow_degraded;
      backends::ScoreOutcome o = backends::score_choices(prompt, ctx, spec.params, judge,
                                                         score_options);
      TrialRecord r;
      r.trial_id = t.trial_id;
      r.dataset = ds.manifest.name;
      r.instance_id = s.base.id;
      r.n_choices = s.base.num_choices();
      r.gold_index = s.base.gold_index;
      r.shuffle_seed = s.seed;
      r.permutation = s.permutation.presented_order();
      r.judge_persona = t.judge;
      r.mitigation = t.mitigation;
      r.influences = std::move(influences);
      r.multi_k = t.multi_k;
      r.prediction = std::move(o.prediction);
      r.backend_id = judge.id();
      r.scoring_variant = std::string(prompts::to_string(o.variant));
      r.degraded = o.degraded;
      r.prompt_digest = sha256_hex(o.prompt);
      r.timestamp = o.created ? *o.created : clock();
      r.check();
      if (o.from_cache) ++cached;
      if (o.degraded) ++degraded;
      const std::string line = to_line(r);
      std::lock_guard lock(sink_mu);
      partial << line << '\n';
      partial.flush();
      if (!partial) throw Error(ErrorKind::kIo, "cannot append to " + partial_path.string());
      done.emplace(t.trial_id, line);
    } catch (const Error& e) {
      std::lock_guard lock(sink_mu);
      if (halts_run(e.kind())) {
        if (!halt_error) halt_error = e;
        halt = true;
        return;
      }
      failures[t.trial_id] = {"failed", std::string(to_string(e.kind())), e.what()};
      emit(options.log, LogLevel::kWarn, "trial " + t.trial_id + " failed: " + e.what());
    } catch (const std::exception& e) {
      std::lock_guard lock(sink_mu);
      failures[t.trial_id] = {"failed", "internal", e.what()};
      emit(options.log, LogLevel::kError, "trial " + t.trial_id + " failed: " + e.what());
    }
  });
  partial.close();

  result.counts.cached = cached.load();
  result.counts.degraded = degraded.load();
  for (const auto& [id, f] : failures) ++(f.status == "blocked" ? result.counts.blocked
                                                               : result.counts.failed);
  result.counts.completed = static_cast<long>(done.size());
  if (halt.load()) {
    result.halted = true;
    result.halt_error = halt_error;
    emit(options.log, LogLevel::kError,
         std::string("run halted, resume with --resume: ") +
             (halt_error ? halt_error->what() : "unknown error"));
    return result;
  }

  std::string records, failure_lines;
  for (const TrialDescriptor& t : plan.trials) {
    auto it = done.find(t.trial_id);
    if (it != done.end()) {
      records += it->second + "\n";
      result.records.push_back(json::parse(it->second).get<TrialRecord>());
      continue;
    }
    auto f = failures.find(t.trial_id);
    if (f != failures.end()) {
      failure_lines += json{{"trial_id", t.trial_id},
                            {"status", f->second.status},
                            {"error", f->second.kind},
                            {"message", f->second.message}}
                           .dump() +
                       "\n";
    }
  }
  write_atomic(options.out_dir / "records.jsonl", records);
  write_atomic(options.out_dir / "failures.jsonl", failure_lines);
  return result;
}

// ---------------------------------------------------------------------------
// Whole runs

namespace {

// Backends for one session, shared when descriptors share an id.
class BackendSet {
 public:
  BackendSet(const RunOptions& options, backends::ResponseCache& cache)
      : options_(options), cache_(cache) {}

  backends::Backend& get(const backends::BackendDescriptor& d) {
    auto it = slots_.find(d.backend_id);
    if (it != slots_.end()) return *it->second.caching;
    Slot slot;
    slot.inner = options_.backend_factory ? options_.backend_factory(d) : backends::make_backend(d);
    if (!slot.inner) throw Error(ErrorKind::kConfig, "no backend for '" + d.backend_id + "'");
    slot.throttled = std::make_unique<backends::ThrottledBackend>(*slot.inner, d.inflight_limit);
    slot.caching =
        std::make_unique<backends::CachingBackend>(*slot.throttled, cache_, options_.clock);
    return *slots_.emplace(d.backend_id, std::move(slot)).first->second.caching;
  }

  long misses() const {
    long total = 0;
    for (const auto& [id, slot] : slots_) total += slot.caching->misses();
    return total;
  }

 private:
  struct Slot {
    std::unique_ptr<backends::Backend> inner;
    std::unique_ptr<backends::ThrottledBackend> throttled;
    std::unique_ptr<backends::CachingBackend> caching;
  };
  const RunOptions& options_;
  backends::ResponseCache& cache_;
  std::map<std::string, Slot> slots_;
};

fs::path cache_dir_for(const ExperimentSpec& spec, const RunOptions& options) {
  if (options.cache_dir) return *options.cache_dir;
  if (!spec.cache_dir.empty()) return spec.cache_dir;
  return options.out_dir / "cache";
}

Plan truncated_plan(const ExperimentSpec& spec, const RunOptions& options) {
  Plan p = plan(spec, options.log);
  if (options.max_trials) {
    if (*options.max_trials < 1) throw Error(ErrorKind::kConfig, "--max-trials must be >= 1");
    if (static_cast<std::size_t>(*options.max_trials) < p.trials.size()) {
      p.trials.resize(static_cast<std::size_t>(*options.max_trials));
    }
  }
  return p;
}

json stats_json(const ExplanationStats& s) {
  return {{"requested", s.requested}, {"reused", s.reused},
          {"generated", s.generated}, {"failed", s.failed},
          {"context_missing", s.context_missing}};
}

json stats_json(const ValidationStats& s) {
  return {{"yes", s.yes}, {"no", s.no}, {"indeterminate", s.indeterminate}};
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const std::string started = backends::utc_now();
  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + options.out_dir.string());
  const fs::path manifest_path = options.out_dir / "manifest.json";
  json manifest;
  if (fs::exists(manifest_path)) {
    if (!options.resume) {
      throw Error(ErrorKind::kConfig, options.out_dir.string() +
                                          " already holds a run; pass --resume to continue it");
    }
    manifest = read_json_file(manifest_path);
    const std::string previous = manifest.value("spec_digest", std::string());
    if (!previous.empty() && !spec.digest.empty() && previous != spec.digest) {
      throw Error(ErrorKind::kConfig, "the spec changed since this run started");
    }
  } else {
    manifest = {{"spec_digest", spec.digest},
                {"spec_name", spec.name},
                {"run_seed", spec.run_seed},
                {"artifacts",
                 {{"records", "records.jsonl"},
                  {"partial_records", "records.partial.jsonl"},
                  {"failures", "failures.jsonl"},
                  {"explanations", "explanations.jsonl"}}},
                {"sessions", json::array()}};
  }
  json backend_ids = {{"judge", spec.judge_backend.backend_id},
                      {"advocate", spec.advocate_backend.backend_id}};
  if (spec.validator_backend) backend_ids["validator"] = spec.validator_backend->backend_id;
  manifest["backends"] = backend_ids;

  backends::ResponseCache cache(cache_dir_for(spec, options), options.log);
  BackendSet backends_(options, cache);
  backends::Backend& judge = backends_.get(spec.judge_backend);

  const Plan p = truncated_plan(spec, options);
  RunResult result;
  ExplanationStore store;
  const fs::path store_path = options.out_dir / "explanations.jsonl";
  if (fs::exists(store_path)) store = ExplanationStore::load(store_path);

  json session = {{"start", started}, {"max_trials", options.max_trials ? json(*options.max_trials)
                                                                        : json(nullptr)}};
  auto finish = [&](const std::string& status, const std::string& reason) {
    session["end"] = backends::utc_now();
    session["status"] = status;
    if (!reason.empty()) session["halt_reason"] = reason;
    session["backend_calls"] = backends_.misses();
    manifest["sessions"].push_back(session);
    manifest["planned"] = p.trials.size();
    write_atomic(manifest_path, manifest.dump(2) + "\n");
  };

  try {
    if (!explanation_needs(p).empty()) {
      backends::Backend& advocate = backends_.get(spec.advocate_backend);
      result.explanations = generate_explanations(spec, p, advocate, store, options.log);
      store.save(store_path);
      session["explanations"] = stats_json(result.explanations);
      if (spec.validator_backend) {
        backends::Backend& validator = backends_.get(*spec.validator_backend);
        result.validation = validate_explanations(spec, p, validator, store, options.log);
        store.save(store_path);
        session["validation"] = stats_json(*result.validation);
      }
    }
  } catch (const Error& e) {
    finish("halted", e.what());
    throw;
  }

  ExecuteOptions exec;
  exec.out_dir = options.out_dir;
  exec.resume = options.resume;
  exec.clock = options.clock;
  exec.log = options.log;
  result.execution = execute(spec, p, store, judge, exec);
  const SessionCounts& c = result.execution.counts;
  session["counts"] = {{"planned", c.planned},   {"completed", c.completed},
                       {"resumed", c.resumed},   {"cached", c.cached},
                       {"degraded", c.degraded}, {"failed", c.failed},
                       {"blocked", c.blocked}};
  result.backend_calls = backends_.misses();
  finish(result.execution.halted ? "halted" : "complete",
         result.execution.halt_error ? result.execution.halt_error->what() : "");
  return result;
}

ExplanationStats run_explain(const ExperimentSpec& spec, const RunOptions& options) {
  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  backends::ResponseCache cache(cache_dir_for(spec, options), options.log);
  BackendSet set(options, cache);
  const Plan p = truncated_plan(spec, options);
  if (explanation_needs(p).empty()) {
    throw Error(ErrorKind::kConfig, "the spec plans no explanation trials");
  }
  ExplanationStore store;
  const fs::path store_path = options.out_dir / "explanations.jsonl";
  if (fs::exists(store_path)) store = ExplanationStore::load(store_path);
  ExplanationStats stats =
      generate_explanations(spec, p, set.get(spec.advocate_backend), store, options.log);
  store.save(store_path);
  return stats;
}

ValidationStats run_validate(const ExperimentSpec& spec, const RunOptions& options) {
  const fs::path store_path = options.out_dir / "explanations.jsonl";
  if (!fs::exists(store_path)) {
    throw Error(ErrorKind::kConfig, "no explanations.jsonl in " + options.out_dir.string() +
                                        "; run explain first");
  }
  ExplanationStore store = ExplanationStore::load(store_path);
  backends::ResponseCache cache(cache_dir_for(spec, options), options.log);
  BackendSet set(options, cache);
  const Plan p = plan(spec, options.log);
  const backends::BackendDescriptor& d =
      spec.validator_backend ? *spec.validator_backend : spec.judge_backend;
  ValidationStats stats = validate_explanations(spec, p, set.get(d), store, options.log);
  store.save(store_path);
  return stats;
}

std::vector<DatasetSummary> summarize(std::span<const TrialRecord> records) {
  std::map<std::string, std::pair<long, long>> unbiased, influenced;  // hits, total
  std::set<std::string> names;
  for (const TrialRecord& r : records) {
    names.insert(r.dataset);
    if (r.is_unbiased()) {
      auto& u = unbiased[r.dataset];
      u.first += r.correct();
      ++u.second;
    } else if (r.is_single()) {
      auto& v = influenced[r.dataset];
      v.first += r.prediction.argmax_canonical == r.influence().target->target_index;
      ++v.second;
    }
  }
  std::vector<DatasetSummary> out;
  for (const std::string& name : names) {
    DatasetSummary s;
    s.dataset = name;
    if (auto it = unbiased.find(name); it != unbiased.end()) {
      s.unbiased_trials = it->second.second;
      s.unbiased_accuracy = static_cast<double>(it->second.first) / it->second.second;
    }
    if (auto it = influenced.find(name); it != influenced.end()) {
      s.influenced_trials = it->second.second;
      s.influence = static_cast<double>(it->second.first) / it->second.second;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sway::runner
