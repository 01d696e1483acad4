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

// Command-line front end. Links only the shared library's C interface.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sway/sway.h"

namespace {

int exit_code(sway_status status) {
  switch (status) {
    case SWAY_OK:
      return 0;
    case SWAY_ERR_BACKEND:
      return 3;
    case SWAY_ERR_RECORDS:
      return 4;
    case SWAY_ERR_INTERNAL:
      return 1;
    default:
      return 2;
  }
}

int g_min_level = SWAY_LOG_INFO;

void log_to_stderr(sway_log_level level, const char* message, void*) {
  static const char* names[] = {"debug", "info", "warn", "error"};
  if (level < g_min_level) return;
  std::fprintf(stderr, "[%s] %s\n", names[level], message);
}

std::string fmt(const nlohmann::json& v) {
  if (v.is_null()) return "n/a";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", v.get<double>());
  return buffer;
}

void print_run_summary(const char* output) {
  const auto j = nlohmann::json::parse(output, nullptr, false);
  if (j.is_discarded()) return;
  std::printf("%s: %ld planned, %ld completed (%ld resumed, %ld cached, %ld degraded), "
              "%ld failed, %ld blocked, %ld backend calls\n",
              j.value("status", "").c_str(), j.value("planned", 0L), j.value("completed", 0L),
              j.value("resumed", 0L), j.value("cached", 0L), j.value("degraded", 0L),
              j.value("failed", 0L), j.value("blocked", 0L), j.value("backend_calls", 0L));
  for (const auto& d : j.value("datasets", nlohmann::json::array())) {
    std::printf("%s: unbiased accuracy %s (n=%ld), influence %s (n=%ld)\n",
                d.value("dataset", "").c_str(), fmt(d["unbiased_accuracy"]).c_str(),
                d.value("unbiased_trials", 0L), fmt(d["influence"]).c_str(),
                d.value("influenced_trials", 0L));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measures how strongly an LLM judge follows advocacy injected into its prompt."};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");
  app.add_flag("-v,--verbose", verbose, "Print debug messages");
  app.set_version_flag("--version", sway_version());

  std::string manifest, data, out, spec, out_dir, records_dir, kind, override_path, cache_dir;
  bool resume = false;
  long long max_trials = 0;

  auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize a dataset file");
  ingest->add_option("manifest", manifest, "Dataset manifest (JSON)")->required();
  ingest->add_option("data", data, "Line-delimited source records")->required();
  ingest->add_option("out", out, "Canonical output file")->required();

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("spec", spec, "Experiment spec (JSON)")->required();
    cmd->add_option("out_dir", out_dir, "Run directory")->required();
    cmd->add_option("--backend-override", override_path,
                    "JSON backend descriptor replacing the judge, or {judge, advocate, "
                    "validator}");
    cmd->add_option("--max-trials", max_trials, "Only the first N planned trials")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", cache_dir, "Response cache directory");
  };
  auto* explain = app.add_subcommand("explain", "Generate advocate explanations");
  add_run_flags(explain);
  auto* validate = app.add_subcommand("validate", "Yes/no check of generated explanations");
  add_run_flags(validate);
  auto* run = app.add_subcommand("run", "Run an experiment");
  add_run_flags(run);
  run->add_flag("--resume", resume, "Continue an interrupted run in out_dir");

  auto* report = app.add_subcommand("report", "Emit a report table from a run directory");
  report->add_option("records_dir", records_dir, "Run directory holding records.jsonl")
      ->required();
  report->add_option("kind", kind,
                     "unbiased_perf | influence_overview | influence_by_correctness | "
                     "shift_scatter | calibration | persona_heatmap | mitigation_table | "
                     "confidence_curve | multi_influence_curve")
      ->required();
  report->add_option("out", out, "CSV output path (a .json twin is written alongside)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g_min_level = quiet ? SWAY_LOG_WARN : verbose ? SWAY_LOG_DEBUG : SWAY_LOG_INFO;

  sway_session* session = nullptr;
  if (sway_session_create(&session) != SWAY_OK) {
    std::fprintf(stderr, "error: cannot create session\n");
    return 1;
  }
  sway_session_set_log(session, log_to_stderr, nullptr);

  sway_run_options options{};
  options.resume = resume ? 1 : 0;
  options.backend_override_path = override_path.empty() ? nullptr : override_path.c_str();
  options.max_trials = max_trials;
  options.cache_dir = cache_dir.empty() ? nullptr : cache_dir.c_str();

  sway_status status = SWAY_OK;
  if (*ingest) {
    status = sway_ingest(session, manifest.c_str(), data.c_str(), out.c_str());
  } else if (*explain) {
    status = sway_explain(session, spec.c_str(), out_dir.c_str(), &options);
  } else if (*validate) {
    status = sway_validate(session, spec.c_str(), out_dir.c_str(), &options);
  } else if (*run) {
    status = sway_run(session, spec.c_str(), out_dir.c_str(), &options);
  } else if (*report) {
    status = sway_report(session, records_dir.c_str(), kind.c_str(), out.c_str());
  }

  const char* output = sway_session_output(session);
  if (*run) {
    if (*output) print_run_summary(output);
  } else if (*output) {
    std::printf("%s\n", output);
  }
  if (status != SWAY_OK) {
    std::fprintf(stderr, "error: %s\n", sway_session_last_error(session));
  }
  sway_session_destroy(session);
  return exit_code(status);
}
