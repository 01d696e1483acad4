/* Copyright 2026 The sway Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SWAY_SWAY_H_
#define SWAY_SWAY_H_

/* C interface to the sway influence harness. Every call reports a status
 * code; on failure the session keeps a message for sway_session_last_error.
 * Calls that produce text (summaries, rendered prompts, report paths) leave
 * it in the session's output buffer, valid until the next call on the same
 * session. A session must not be used from two threads at once. */

#include <stdint.h>

#if defined(_WIN32)
#define SWAY_API __declspec(dllexport)
#else
#define SWAY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sway_status {
  SWAY_OK = 0,
  SWAY_ERR_INVALID_ARGUMENT = 1,
  SWAY_ERR_CONFIG = 2,  /* config, schema or dataset error */
  SWAY_ERR_BACKEND = 3, /* backend unreachable or incapable */
  SWAY_ERR_RECORDS = 4, /* records missing, inconsistent or lacking an axis */
  SWAY_ERR_IO = 5,
  SWAY_ERR_INTERNAL = 6
} sway_status;

typedef enum sway_log_level {
  SWAY_LOG_DEBUG = 0,
  SWAY_LOG_INFO = 1,
  SWAY_LOG_WARN = 2,
  SWAY_LOG_ERROR = 3
} sway_log_level;

typedef void (*sway_log_fn)(sway_log_level level, const char* message, void* user);

typedef struct sway_session sway_session;

typedef struct sway_run_options {
  int resume;                        /* nonzero: continue an existing run */
  const char* backend_override_path; /* JSON descriptor(s), or NULL */
  int64_t max_trials;                /* <= 0: no limit */
  const char* cache_dir;             /* overrides the spec, or NULL */
} sway_run_options;

SWAY_API const char* sway_version(void);

SWAY_API sway_status sway_session_create(sway_session** out);
SWAY_API void sway_session_destroy(sway_session* session);
SWAY_API const char* sway_session_last_error(const sway_session* session);
SWAY_API const char* sway_session_output(const sway_session* session);
/* Log lines from later calls go to fn; NULL silences them. */
SWAY_API void sway_session_set_log(sway_session* session, sway_log_fn fn, void* user);

/* Writes the canonical record file; output is a JSON filter summary. */
SWAY_API sway_status sway_ingest(sway_session* session, const char* manifest_path,
                                 const char* data_path, const char* out_path);

/* Generates advocate explanations into out_dir/explanations.jsonl. */
SWAY_API sway_status sway_explain(sway_session* session, const char* spec_path,
                                  const char* out_dir, const sway_run_options* options);

/* Annotates out_dir/explanations.jsonl with yes/no validation. */
SWAY_API sway_status sway_validate(sway_session* session, const char* spec_path,
                                   const char* out_dir, const sway_run_options* options);

/* Full run; output is a JSON summary with per-dataset accuracy and influence.
 * options may be NULL. */
SWAY_API sway_status sway_run(sway_session* session, const char* spec_path,
                              const char* out_dir, const sway_run_options* options);

/* Writes a report table (CSV at out_path plus a .json twin). */
SWAY_API sway_status sway_report(sway_session* session, const char* records_dir,
                                 const char* kind, const char* out_path);

/* Renders a judge prompt from a JSON request {instance, run_seed?,
 * influences?, judge?, mitigation?, chat_template?}; output is JSON with
 * the turns and the serialized scoring prompt. */
SWAY_API sway_status sway_render_judge_prompt(sway_session* session, const char* request_json);

/* Synthetic oracle probabilities for a JSON request {params, instance,
 * influences}; output is a JSON array in canonical order. */
SWAY_API sway_status sway_synthetic_score(sway_session* session, const char* request_json);

#ifdef __cplusplus
}
#endif

#endif /* SWAY_SWAY_H_ */
