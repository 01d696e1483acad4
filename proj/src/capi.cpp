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

#include "sway/sway.h"

#include <cstdlib>
#include <fstream>
#include <string>

#include "sway/backends.hpp"
#include "sway/datasets.hpp"
#include "sway/report.hpp"
#include "sway/runner.hpp"
#include "sway/serialize.hpp"

struct sway_session {
  std::string last_error;
  std::string output;
  sway_log_fn log_fn = nullptr;
  void* log_user = nullptr;

  sway::LogSink sink() {
    if (!log_fn) return {};
    return [fn = log_fn, user = log_user](sway::LogLevel level, std::string_view message) {
      const std::string text(message);
      fn(static_cast<sway_log_level>(level), text.c_str(), user);
    };
  }
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using sway::ErrorKind;

sway_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain:
    case ErrorKind::kIngest:
    case ErrorKind::kContext:
    case ErrorKind::kRender:
    case ErrorKind::kConfig:
      return SWAY_ERR_CONFIG;
    case ErrorKind::kCapability:
    case ErrorKind::kTransport:
    case ErrorKind::kBackendDown:
    case ErrorKind::kPromptTooLong:
      return SWAY_ERR_BACKEND;
    case ErrorKind::kUndefinedMetric:
    case ErrorKind::kInconsistentRecords:
      return SWAY_ERR_RECORDS;
    case ErrorKind::kIo:
      return SWAY_ERR_IO;
  }
  return SWAY_ERR_INTERNAL;
}

// Runs body, translating exceptions into a status and message.
template <class F>
sway_status guarded(sway_session* s, F&& body) {
  if (!s) return SWAY_ERR_INVALID_ARGUMENT;
  s->last_error.clear();
  s->output.clear();
  try {
    return body();
  } catch (const sway::Error& e) {
    s->last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    s->last_error = e.what();
    return SWAY_ERR_CONFIG;
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return SWAY_ERR_INTERNAL;
  }
}

sway_status invalid(sway_session* s, const char* what) {
  s->last_error = what;
  return SWAY_ERR_INVALID_ARGUMENT;
}

// SWAY_CLOCK pins the stamp given to new cache entries, which makes records
// of separate runs byte-comparable.
sway::backends::Clock clock_from_env() {
  if (const char* fixed = std::getenv("SWAY_CLOCK"); fixed && *fixed) {
    return [value = std::string(fixed)] { return value; };
  }
  return {};
}

sway::runner::ExperimentSpec load_spec_with_overrides(const char* spec_path,
                                                      const sway_run_options* o) {
  sway::runner::ExperimentSpec spec = sway::runner::load_spec(spec_path);
  if (o && o->backend_override_path && *o->backend_override_path) {
    const json j = sway::read_json_file(o->backend_override_path);
    try {
      if (j.contains("backend_id")) {
        spec.judge_backend = j.get<sway::backends::BackendDescriptor>();
      } else {
        if (j.contains("judge")) spec.judge_backend = j["judge"];
        if (j.contains("advocate")) spec.advocate_backend = j["advocate"];
        if (j.contains("validator")) spec.validator_backend = j["validator"];
      }
    } catch (const json::exception& e) {
      throw sway::Error(ErrorKind::kConfig, std::string("backend override: ") + e.what());
    }
    spec.validate();
  }
  return spec;
}

sway::runner::RunOptions run_options(sway_session* s, const char* out_dir,
                                     const sway_run_options* o) {
  sway::runner::RunOptions options;
  options.out_dir = out_dir;
  options.log = s->sink();
  options.clock = clock_from_env();
  if (o) {
    options.resume = o->resume != 0;
    if (o->max_trials > 0) options.max_trials = static_cast<long>(o->max_trials);
    if (o->cache_dir && *o->cache_dir) options.cache_dir = fs::path(o->cache_dir);
  }
  return options;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

extern "C" {

const char* sway_version(void) { return "0.1.0"; }

sway_status sway_session_create(sway_session** out) {
  if (!out) return SWAY_ERR_INVALID_ARGUMENT;
  try {
    *out = new sway_session();
  } catch (...) {
    return SWAY_ERR_INTERNAL;
  }
  return SWAY_OK;
}

void sway_session_destroy(sway_session* session) { delete session; }

const char* sway_session_last_error(const sway_session* session) {
  return session ? session->last_error.c_str() : "null session";
}

const char* sway_session_output(const sway_session* session) {
  return session ? session->output.c_str() : "";
}

void sway_session_set_log(sway_session* session, sway_log_fn fn, void* user) {
  if (!session) return;
  session->log_fn = fn;
  session->log_user = user;
}

sway_status sway_ingest(sway_session* s, const char* manifest_path, const char* data_path,
                        const char* out_path) {
  return guarded(s, [&] {
    if (!manifest_path || !data_path || !out_path) return invalid(s, "null path");
    const auto manifest =
        sway::read_json_file(manifest_path).get<sway::datasets::DatasetManifest>();
    const auto result = sway::datasets::load(manifest, data_path, s->sink());
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw sway::Error(ErrorKind::kIo, std::string("cannot write ") + out_path);
    for (const auto& q : result.instances) out << sway::datasets::to_canonical_line(q) << '\n';
    if (!out.flush()) throw sway::Error(ErrorKind::kIo, std::string("cannot write ") + out_path);
    const auto& c = result.counts;
    s->output = json{{"dataset", manifest.name},
                     {"records_read", c.records_read},
                     {"kept", c.kept},
                     {"skipped_too_many_choices", c.skipped_too_many_choices},
                     {"skipped_too_few_choices", c.skipped_too_few_choices},
                     {"beyond_cap", c.beyond_cap},
                     {"held_out", result.held_out.size()}}
                    .dump();
    return SWAY_OK;
  });
}

sway_status sway_explain(sway_session* s, const char* spec_path, const char* out_dir,
                         const sway_run_options* o) {
  return guarded(s, [&] {
    if (!spec_path || !out_dir) return invalid(s, "null path");
    const auto spec = load_spec_with_overrides(spec_path, o);
    const auto stats = sway::runner::run_explain(spec, run_options(s, out_dir, o));
    s->output = json{{"requested", stats.requested},
                     {"reused", stats.reused},
                     {"generated", stats.generated},
                     {"failed", stats.failed},
                     {"context_missing", stats.context_missing}}
                    .dump();
    return SWAY_OK;
  });
}

sway_status sway_validate(sway_session* s, const char* spec_path, const char* out_dir,
                          const sway_run_options* o) {
  return guarded(s, [&] {
    if (!spec_path || !out_dir) return invalid(s, "null path");
    const auto spec = load_spec_with_overrides(spec_path, o);
    const auto stats = sway::runner::run_validate(spec, run_options(s, out_dir, o));
    const long total = stats.yes + stats.no + stats.indeterminate;
    s->output = json{{"yes", stats.yes},
                     {"no", stats.no},
                     {"indeterminate", stats.indeterminate},
                     {"yes_rate", total ? json(static_cast<double>(stats.yes) / total)
                                        : json(nullptr)}}
                    .dump();
    return SWAY_OK;
  });
}

sway_status sway_run(sway_session* s, const char* spec_path, const char* out_dir,
                     const sway_run_options* o) {
  return guarded(s, [&] {
    if (!spec_path || !out_dir) return invalid(s, "null path");
    const auto spec = load_spec_with_overrides(spec_path, o);
    const auto result = sway::runner::run_experiment(spec, run_options(s, out_dir, o));
    const auto& c = result.execution.counts;
    json datasets = json::array();
    for (const auto& d : sway::runner::summarize(result.execution.records)) {
      datasets.push_back({{"dataset", d.dataset},
                          {"unbiased_accuracy", optional_number(d.unbiased_accuracy)},
                          {"influence", optional_number(d.influence)},
                          {"unbiased_trials", d.unbiased_trials},
                          {"influenced_trials", d.influenced_trials}});
    }
    s->output = json{{"status", result.execution.halted ? "halted" : "complete"},
                     {"planned", c.planned},
                     {"completed", c.completed},
                     {"resumed", c.resumed},
                     {"cached", c.cached},
                     {"degraded", c.degraded},
                     {"failed", c.failed},
                     {"blocked", c.blocked},
                     {"backend_calls", result.backend_calls},
                     {"datasets", datasets}}
                    .dump();
    if (result.execution.halted) {
      const auto& e = result.execution.halt_error;
      s->last_error = e ? e->what() : "run halted";
      return e ? status_of(e->kind()) : SWAY_ERR_BACKEND;
    }
    return SWAY_OK;
  });
}

sway_status sway_report(sway_session* s, const char* records_dir, const char* kind,
                        const char* out_path) {
  return guarded(s, [&] {
    if (!records_dir || !kind || !out_path) return invalid(s, "null argument");
    const auto report_kind = sway::report::report_kind_from_string(kind);
    const auto records = sway::report::load_run(records_dir);
    const auto table = sway::report::build(report_kind, records);
    const fs::path json_path = sway::report::write(table, out_path);
    s->output = json{{"kind", table.kind},
                     {"rows", table.rows.size()},
                     {"csv", out_path},
                     {"json", json_path.string()},
                     {"summary", table.summary}}
                    .dump();
    return SWAY_OK;
  });
}

sway_status sway_render_judge_prompt(sway_session* s, const char* request_json) {
  return guarded(s, [&] {
    if (!request_json) return invalid(s, "null request");
    const json req = sway::parse_json(request_json, "render request");
    auto shuffled_of = [&](const json& j) {
      const auto q = j.at("instance").get<sway::QuestionInstance>();
      q.validate();
      sway::ShuffledInstance out;
      if (j.contains("permutation")) {
        out.base = q;
        out.permutation = sway::Permutation(j["permutation"].get<std::vector<int>>());
      } else {
        out = sway::datasets::shuffle(q, j.value("run_seed", std::uint64_t{0}));
      }
      return out;
    };
    const sway::ShuffledInstance shuffled = shuffled_of(req);
    const auto influences =
        req.value("influences", std::vector<sway::InfluenceSpec>{sway::InfluenceSpec::none()});
    const auto judge = req.value("judge", sway::Persona{});
    const auto mitigation = req.value("mitigation", sway::prompts::MitigationConfig{});
    const auto texts = req.value("prompt_texts", sway::prompts::PromptTexts{});
    const auto tmpl = req.value("chat_template", sway::prompts::ChatTemplate::plain());
    std::vector<sway::prompts::FewShotExample> shots;
    for (const json& ex : req.value("few_shots", json::array())) {
      shots.push_back({shuffled_of(ex), ex.value("influences", std::vector<sway::InfluenceSpec>{})});
    }
    const auto prompt =
        sway::prompts::render_judge_prompt(shuffled, influences, judge, mitigation, shots, texts);
    s->output = json{{"turns", prompt.turns},
                     {"assistant_prefix", prompt.assistant_prefix},
                     {"permutation", shuffled.permutation.presented_order()},
                     {"scoring_prompt", sway::prompts::render_scoring_prompt(prompt, tmpl)}}
                    .dump();
    return SWAY_OK;
  });
}

sway_status sway_synthetic_score(sway_session* s, const char* request_json) {
  return guarded(s, [&] {
    if (!request_json) return invalid(s, "null request");
    const json req = sway::parse_json(request_json, "score request");
    const auto params = req.value("params", sway::backends::SyntheticJudgeParams{});
    const auto q = req.at("instance").get<sway::QuestionInstance>();
    q.validate();
    const auto influences = req.value("influences", std::vector<sway::InfluenceSpec>{});
    s->output = json(sway::backends::synthetic_score(params, q, influences)).dump();
    return SWAY_OK;
  });
}

}  // extern "C"
