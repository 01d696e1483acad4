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

// Client for a completions-style inference service. Letter scoring uses one
// echo request per candidate (the log-probability of the candidate tokens
// continuing the prompt) or, in top-logprobs mode, a single request reading
// the first generated position's top alternatives.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <limits>
#include <thread>

#include "json.hpp"
#include "sway/backends.hpp"
#include "sway/digest.hpp"

namespace sway::backends {

using nlohmann::json;

std::string_view to_string(ScoringMode mode) {
  return mode == ScoringMode::kEcho ? "echo" : "top_logprobs";
}

ScoringMode scoring_mode_from_string(std::string_view text) {
  if (text == "echo") return ScoringMode::kEcho;
  if (text == "top_logprobs") return ScoringMode::kTopLogprobs;
  throw Error(ErrorKind::kConfig, "unknown scoring mode '" + std::string(text) + "'");
}

namespace {

// The service reports text offsets in characters, not bytes.
std::size_t codepoints(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

const json& first_choice(const json& response) {
  auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorKind::kCapability, "completion response has no choices");
  }
  return (*choices)[0];
}

const json& logprobs_of(const json& choice) {
  auto lp = choice.find("logprobs");
  if (lp == choice.end() || !lp->is_object()) {
    throw Error(ErrorKind::kCapability, "endpoint returned no log-probabilities");
  }
  return *lp;
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("unparseable completion response: ") + e.what());
  }
}

bool context_overflow(const std::string& body) {
  for (std::string_view needle : {"context length", "context_length", "maximum context",
                                  "too long", "prompt is too long"}) {
    if (body.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

RemoteBackend::RemoteBackend(std::string id, RemoteConfig config,
                             prompts::ChatTemplate tmpl)
    : id_(std::move(id)), config_(std::move(config)), template_(std::move(tmpl)) {
  if (config_.base_url.empty()) {
    throw Error(ErrorKind::kConfig, "remote backend '" + id_ + "' needs a base_url");
  }
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::fingerprint() const {
  return id_ + ":" + config_.model + ":" + std::string(to_string(config_.scoring_mode));
}

std::string RemoteBackend::post(const std::string& body, std::size_t prompt_length) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  client.set_write_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  int backoff_ms = config_.backoff_initial_ms;
  std::string last_error;
  bool connection_failure = false;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    auto res = client.Post(config_.completions_path, headers, body, "application/json");
    if (!res) {
      connection_failure = true;
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 500) {
      connection_failure = false;
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status >= 400) {
      if (context_overflow(res->body)) {
        throw PromptTooLong(prompt_length, "prompt of " + std::to_string(prompt_length) +
                                               " characters exceeds the context of '" +
                                               id_ + "'");
      }
      if (res->status == 401 || res->status == 403) {
        throw Error(ErrorKind::kConfig, "backend '" + id_ + "' rejected credentials");
      }
      throw Error(ErrorKind::kCapability, "backend '" + id_ + "' rejected request: HTTP " +
                                              std::to_string(res->status) + " " +
                                              res->body.substr(0, 200));
    } else {
      return res->body;
    }
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
  }
  throw Error(connection_failure ? ErrorKind::kBackendDown : ErrorKind::kTransport,
              "backend '" + id_ + "' failed after " + std::to_string(config_.max_attempts) +
                  " attempts: " + last_error);
}

LetterScores RemoteBackend::score_letters(const ScoreRequest& request) {
  if (config_.max_prompt_chars && request.prompt.size() > config_.max_prompt_chars) {
    throw PromptTooLong(request.prompt.size(), "prompt exceeds the configured limit");
  }
  try {
    return config_.scoring_mode == ScoringMode::kEcho ? score_echo(request)
                                                      : score_top_logprobs(request);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCapability, std::string("malformed logprob payload: ") + e.what());
  }
}

LetterScores RemoteBackend::score_echo(const ScoreRequest& request) {
  LetterScores out;
  out.variant = request.variant;
  const std::size_t start = codepoints(request.prompt);
  for (const std::string& candidate : request.candidates) {
    const std::string full = request.prompt + candidate;
    json body = {{"model", config_.model},
                 {"prompt", full},
                 {"max_tokens", config_.echo_max_tokens},
                 {"temperature", 0.0},
                 {"echo", true},
                 {"logprobs", 1}};
    const json response = parse_body(post(body.dump(), full.size()));
    const json& lp = logprobs_of(first_choice(response));
    if (!lp.contains("tokens") || !lp.contains("token_logprobs") ||
        !lp.contains("text_offset")) {
      throw Error(ErrorKind::kCapability, "endpoint does not support echo scoring");
    }
    const auto& tokens = lp["tokens"];
    const auto& logps = lp["token_logprobs"];
    const auto& offsets = lp["text_offset"];
    const std::size_t end = codepoints(full);
    double total = 0.0;
    bool covered = false;
    for (std::size_t i = 0; i < tokens.size() && i < offsets.size(); ++i) {
      const auto offset = offsets[i].get<std::size_t>();
      const std::size_t length = i + 1 < offsets.size()
                                     ? offsets[i + 1].get<std::size_t>() - offset
                                     : codepoints(tokens[i].get<std::string>());
      if (offset >= end || offset + length <= start) continue;
      if (logps[i].is_null()) {
        throw Error(ErrorKind::kCapability, "candidate token has no log-probability");
      }
      total += logps[i].get<double>();
      covered = true;
    }
    if (!covered) throw Error(ErrorKind::kCapability, "echo response did not cover candidate");
    out.log_scores.push_back(total);
  }
  return out;
}

LetterScores RemoteBackend::score_top_logprobs(const ScoreRequest& request) {
  json body = {{"model", config_.model},
               {"prompt", request.prompt},
               {"max_tokens", 1},
               {"temperature", 0.0},
               {"logprobs", config_.top_logprobs}};
  const json response = parse_body(post(body.dump(), request.prompt.size()));
  const json& lp = logprobs_of(first_choice(response));
  auto top = lp.find("top_logprobs");
  if (top == lp.end() || !top->is_array() || top->empty() || !(*top)[0].is_object()) {
    throw Error(ErrorKind::kCapability, "endpoint returned no top log-probabilities");
  }
  const json& alternatives = (*top)[0];
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& [token, value] : alternatives.items()) {
    floor = std::min(floor, value.get<double>());
  }

  auto lookup = [&](prompts::LetterVariant variant, std::vector<double>& scores) {
    int found = 0;
    scores.clear();
    for (std::size_t i = 0; i < request.candidates.size(); ++i) {
      std::string letter(1, static_cast<char>('A' + i));
      const std::string key = variant == prompts::LetterVariant::kSpace ? " " + letter : letter;
      auto it = alternatives.find(key);
      if (it != alternatives.end()) {
        scores.push_back(it->get<double>());
        ++found;
      } else {
        scores.push_back(floor);
      }
    }
    return found;
  };

  LetterScores out;
  out.variant = request.variant;
  if (lookup(request.variant, out.log_scores) > 0) return out;
  const auto other = request.variant == prompts::LetterVariant::kSpace
                         ? prompts::LetterVariant::kBare
                         : prompts::LetterVariant::kSpace;
  if (lookup(other, out.log_scores) > 0) {
    out.variant = other;
    return out;
  }
  throw Error(ErrorKind::kCapability, "no candidate letter among the top log-probabilities");
}

std::string RemoteBackend::generation_body(const GenerateRequest& request) const {
  const GenerationParams& p = request.params;
  json body = {{"model", config_.model},
               {"prompt", request.prompt},
               {"max_tokens", p.max_new_tokens},
               {"temperature", p.temperature},
               {"top_p", p.top_p},
               {"top_k", p.top_k}};
  if (p.seed) body["seed"] = *p.seed;
  return body.dump();
}

std::string RemoteBackend::generate(const GenerateRequest& request) {
  request.params.validate();
  if (config_.max_prompt_chars && request.prompt.size() > config_.max_prompt_chars) {
    throw PromptTooLong(request.prompt.size(), "prompt exceeds the configured limit");
  }
  const json response =
      parse_body(post(generation_body(request), request.prompt.size()));
  const json& choice = first_choice(response);
  auto text = choice.find("text");
  if (text == choice.end() || !text->is_string()) {
    throw Error(ErrorKind::kCapability, "completion response has no text");
  }
  return text->get<std::string>();
}

}  // namespace sway::backends
