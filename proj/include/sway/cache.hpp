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

// Content-addressed on-disk response cache and the backend decorator that
// consults it. Entries live at <dir>/<first two hex digits>/<digest>.json and
// are never rewritten once stored.

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sway/backends.hpp"

namespace sway::backends {

struct CacheKey {
  std::string digest;  // lowercase hex SHA-256

  /// `mode` is "score" or "generate". `extra` carries structured context the
  /// rendered prompt alone does not pin down (e.g. instance ids for oracles).
  static CacheKey make(std::string_view mode, std::string_view fingerprint,
                       std::string_view prompt, const nlohmann::json& params,
                       const std::vector<std::string>& candidates,
                       const nlohmann::json& extra = nullptr);
};

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir, LogSink log = {});

  const std::filesystem::path& dir() const { return dir_; }

  /// Stored entry, or nullopt on a miss. Unreadable or mismatched entries
  /// are removed with a warning and reported as misses.
  std::optional<nlohmann::json> get(const CacheKey& key) const;

  /// Stores `entry` unless the key is already present. Returns the entry
  /// that is stored afterwards (the earlier one wins a race).
  nlohmann::json put(const CacheKey& key, nlohmann::json entry);

  std::filesystem::path path_of(const CacheKey& key) const;

 private:
  std::filesystem::path dir_;
  LogSink log_;
};

using Clock = std::function<std::string()>;

/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_now();

class CachingBackend final : public Backend {
 public:
  CachingBackend(Backend& inner, ResponseCache& cache, Clock clock = utc_now);

  const std::string& id() const override { return inner_.id(); }
  std::string fingerprint() const override { return inner_.fingerprint(); }
  const prompts::ChatTemplate& chat_template() const override {
    return inner_.chat_template();
  }

  LetterScores score_letters(const ScoreRequest& request) override;
  std::string generate(const GenerateRequest& request) override;

  long hits() const { return hits_.load(); }
  long misses() const { return misses_.load(); }

 private:
  Backend& inner_;
  ResponseCache& cache_;
  Clock clock_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
};

}  // namespace sway::backends
