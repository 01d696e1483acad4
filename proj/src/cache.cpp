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

#include "sway/cache.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "sway/digest.hpp"
#include "sway/serialize.hpp"

namespace sway::backends {

namespace fs = std::filesystem;
using nlohmann::json;

CacheKey CacheKey::make(std::string_view mode, std::string_view fingerprint,
                        std::string_view prompt, const json& params,
                        const std::vector<std::string>& candidates, const json& extra) {
  // Sorted-key dump keeps the digest independent of insertion order.
  const json material = {{"mode", mode},
                         {"backend", fingerprint},
                         {"prompt", prompt},
                         {"params", params},
                         {"candidates", candidates},
                         {"extra", extra}};
  return CacheKey{sha256_hex(material.dump())};
}

ResponseCache::ResponseCache(fs::path dir, LogSink log)
    : dir_(std::move(dir)), log_(std::move(log)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create cache directory " + dir_.string());
}

fs::path ResponseCache::path_of(const CacheKey& key) const {
  return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<json> ResponseCache::get(const CacheKey& key) const {
  const fs::path path = path_of(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  in.close();
  try {
    json entry = json::parse(buffer.str());
    if (entry.value("key", std::string()) != key.digest || !entry.contains("result")) {
      throw std::runtime_error("key mismatch");
    }
    return entry;
  } catch (const std::exception&) {
    if (log_) log_(LogLevel::kWarn, "discarding corrupt cache entry " + path.string());
    std::error_code ec;
    fs::remove(path, ec);
    return std::nullopt;
  }
}

json ResponseCache::put(const CacheKey& key, json entry) {
  entry["key"] = key.digest;
  const fs::path path = path_of(key);
  if (auto existing = get(key)) return *existing;

  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << std::random_device{}();
  const fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write cache entry " + tmp.string());
    out << entry.dump();
    if (!out.flush()) throw Error(ErrorKind::kIo, "cannot write cache entry " + tmp.string());
  }
  // Another writer may have landed first; its entry stays.
  if (auto existing = get(key)) {
    fs::remove(tmp, ec);
    return *existing;
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot store cache entry " + path.string());
  }
  return entry;
}

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

CachingBackend::CachingBackend(Backend& inner, ResponseCache& cache, Clock clock)
    : inner_(inner), cache_(cache), clock_(clock ? std::move(clock) : Clock(utc_now)) {}

LetterScores CachingBackend::score_letters(const ScoreRequest& request) {
  json extra = nullptr;
  if (request.context && request.context->shuffled) {
    extra = {{"instance", request.context->shuffled->base.id}};
  }
  const CacheKey key = CacheKey::make("score", inner_.fingerprint(), request.prompt,
                                      json(request.params), request.candidates, extra);
  if (auto entry = cache_.get(key)) {
    try {
      LetterScores out = entry->at("result").get<LetterScores>();
      out.created = entry->at("created").get<std::string>();
      out.from_cache = true;
      ++hits_;
      return out;
    } catch (const json::exception&) {
      // Structurally valid JSON with the wrong shape: fall through and
      // recompute; put() keeps the earlier entry, so drop it first.
      std::error_code ec;
      fs::remove(cache_.path_of(key), ec);
    }
  }
  ++misses_;
  LetterScores fresh = inner_.score_letters(request);
  json stored = cache_.put(key, {{"mode", "score"}, {"created", clock_()}, {"result", fresh}});
  LetterScores out = stored.at("result").get<LetterScores>();
  out.created = stored.at("created").get<std::string>();
  return out;
}

std::string CachingBackend::generate(const GenerateRequest& request) {
  json extra = nullptr;
  if (const GenerateContext* ctx = request.context) {
    extra = {{"purpose", static_cast<int>(ctx->purpose)}};
    if (ctx->instance) extra["instance"] = ctx->instance->id;
    if (ctx->target) extra["target"] = ctx->target->target_index;
    if (ctx->judge && ctx->judge->shuffled) extra["instance"] = ctx->judge->shuffled->base.id;
  }
  const CacheKey key = CacheKey::make("generate", inner_.fingerprint(), request.prompt,
                                      json(request.params), {}, extra);
  if (auto entry = cache_.get(key)) {
    const json& result = entry->at("result");
    if (result.is_string() && entry->contains("created")) {
      ++hits_;
      if (request.created) *request.created = entry->at("created").get<std::string>();
      return result.get<std::string>();
    }
    std::error_code ec;
    fs::remove(cache_.path_of(key), ec);
  }
  ++misses_;
  std::string text = inner_.generate(request);
  json stored =
      cache_.put(key, {{"mode", "generate"}, {"created", clock_()}, {"result", std::move(text)}});
  if (request.created) *request.created = stored.at("created").get<std::string>();
  return stored.at("result").get<std::string>();
}

}  // namespace sway::backends
