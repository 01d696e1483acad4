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

#include "sway/datasets.hpp"

#include <fstream>
#include <istream>
#include <set>

#include "json.hpp"
#include "sway/random.hpp"

namespace sway::datasets {

using nlohmann::json;

std::string_view to_string(FormatKind kind) {
  switch (kind) {
    case FormatKind::kGenericMcq: return "generic_mcq";
    case FormatKind::kBoolqLike: return "boolq_like";
    case FormatKind::kQualityLike: return "quality_like";
  }
  return "generic_mcq";
}

std::string_view to_string(ContextPolicy policy) {
  switch (policy) {
    case ContextPolicy::kNone: return "none";
    case ContextPolicy::kFull: return "full";
    case ContextPolicy::kSubsample: return "subsample";
  }
  return "none";
}

FormatKind format_kind_from_string(std::string_view text) {
  if (text == "generic_mcq") return FormatKind::kGenericMcq;
  if (text == "boolq_like") return FormatKind::kBoolqLike;
  if (text == "quality_like") return FormatKind::kQualityLike;
  throw Error(ErrorKind::kConfig, "unknown format_kind '" + std::string(text) + "'");
}

ContextPolicy context_policy_from_string(std::string_view text) {
  if (text == "none") return ContextPolicy::kNone;
  if (text == "full") return ContextPolicy::kFull;
  if (text == "subsample") return ContextPolicy::kSubsample;
  throw Error(ErrorKind::kConfig,
              "unknown context_policy '" + std::string(text) + "'");
}

void DatasetManifest::validate() const {
  if (name.empty()) throw Error(ErrorKind::kConfig, "dataset manifest needs a name");
  if (sample_cap < 1) throw Error(ErrorKind::kConfig, "sample_cap must be >= 1");
  if (max_choices < 2 || max_choices > kMaxChoices) {
    throw Error(ErrorKind::kConfig, "max_choices must be within 2..8");
  }
  if (context_policy == ContextPolicy::kSubsample && context_budget == 0) {
    throw Error(ErrorKind::kConfig, "subsample context policy needs a budget > 0");
  }
}

namespace {

std::string id_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw std::invalid_argument("id must be a string or integer");
}

std::string required_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_array()) {
    throw std::invalid_argument(std::string("missing array field '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& item : *it) {
    if (!item.is_string()) {
      throw std::invalid_argument(std::string("'") + key + "' entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

int required_int(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_number_integer()) {
    throw std::invalid_argument(std::string("missing integer field '") + key + "'");
  }
  return it->get<int>();
}

QuestionInstance from_generic(const json& record, const DatasetManifest& m) {
  QuestionInstance q;
  q.id = id_string(record.at("id"));
  q.instructions = optional_string(record, "instructions").value_or(m.instruction_text);
  q.question = required_string(record, "question");
  q.choices = string_list(record, "choices");
  q.gold_index = required_int(record, "gold_index");
  q.extra_context = optional_string(record, "context");
  q.field_tag = optional_string(record, "field").value_or(m.default_field);
  return q;
}

QuestionInstance from_boolq(const json& record, const DatasetManifest& m,
                            int line_no) {
  QuestionInstance q;
  q.id = record.contains("id") ? id_string(record.at("id"))
                               : m.name + "-" + std::to_string(line_no);
  q.instructions = m.instruction_text;
  q.question = required_string(record, "question");
  auto answer = record.find("answer");
  if (answer == record.end() || !answer->is_boolean()) {
    throw std::invalid_argument("missing boolean field 'answer'");
  }
  q.choices = {"True", "False"};
  q.gold_index = answer->get<bool>() ? 0 : 1;
  q.extra_context = required_string(record, "passage");
  q.field_tag = optional_string(record, "field").value_or(m.default_field);
  return q;
}

QuestionInstance from_quality(const json& record, const DatasetManifest& m,
                              int line_no) {
  QuestionInstance q;
  if (record.contains("id")) {
    q.id = id_string(record.at("id"));
  } else if (record.contains("question_unique_id")) {
    q.id = id_string(record.at("question_unique_id"));
  } else {
    q.id = m.name + "-" + std::to_string(line_no);
  }
  q.instructions = m.instruction_text;
  q.question = required_string(record, "question");
  q.choices = string_list(record, "options");
  q.gold_index = required_int(record, "gold_label") - 1;  // 1-based upstream
  q.extra_context = required_string(record, "article");
  q.field_tag = optional_string(record, "field").value_or(m.default_field);
  return q;
}

std::string record_label(const json& record, int line_no) {
  for (const char* key : {"id", "question_unique_id"}) {
    auto it = record.find(key);
    if (it != record.end()) {
      try {
        return "'" + id_string(*it) + "'";
      } catch (const std::exception&) {
      }
    }
  }
  return "at line " + std::to_string(line_no);
}

bool utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

LoadResult load_from_stream(const DatasetManifest& manifest, std::istream& in,
                            const LogSink& log) {
  manifest.validate();
  LoadResult result;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.counts.records_read;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kIngest, manifest.name + ": malformed record at line " +
                                          std::to_string(line_no) + ": " + e.what());
    }

    QuestionInstance q;
    try {
      if (!record.is_object()) throw std::invalid_argument("record is not an object");
      switch (manifest.format_kind) {
        case FormatKind::kGenericMcq: q = from_generic(record, manifest); break;
        case FormatKind::kBoolqLike: q = from_boolq(record, manifest, line_no); break;
        case FormatKind::kQualityLike: q = from_quality(record, manifest, line_no); break;
      }
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kIngest, manifest.name + ": malformed record " +
                                          record_label(record, line_no) + ": " +
                                          e.what());
    }
    if (q.field_tag.empty()) q.field_tag = manifest.default_field;

    if (q.num_choices() > manifest.max_choices) {
      ++result.counts.skipped_too_many_choices;
      if (log) {
        log(LogLevel::kDebug, manifest.name + ": skipped '" + q.id + "' with " +
                                  std::to_string(q.num_choices()) + " choices");
      }
      continue;
    }
    if (q.num_choices() < 2) {
      ++result.counts.skipped_too_few_choices;
      continue;
    }
    if (q.gold_index < 0 || q.gold_index >= q.num_choices()) {
      throw Error(ErrorKind::kIngest, manifest.name + ": malformed record '" + q.id +
                                          "': gold_index out of range");
    }
    if (!seen.insert(q.id).second) {
      throw Error(ErrorKind::kIngest,
                  manifest.name + ": duplicate record id '" + q.id + "'");
    }

    q = attach_context(std::move(q), manifest.context_policy,
                       manifest.context_budget, mix_seed(fnv1a(manifest.name), q.id));

    if (static_cast<int>(result.instances.size()) < manifest.sample_cap) {
      result.instances.push_back(std::move(q));
    } else {
      ++result.counts.beyond_cap;
      result.held_out.push_back(std::move(q));
    }
  }
  result.counts.kept = static_cast<int>(result.instances.size());
  if (log) {
    const auto& c = result.counts;
    log(LogLevel::kInfo,
        manifest.name + ": read " + std::to_string(c.records_read) + ", kept " +
            std::to_string(c.kept) + ", skipped >" +
            std::to_string(manifest.max_choices) + " choices " +
            std::to_string(c.skipped_too_many_choices) + ", skipped <2 choices " +
            std::to_string(c.skipped_too_few_choices) + ", beyond cap " +
            std::to_string(c.beyond_cap));
  }
  return result;
}

LoadResult load(const DatasetManifest& manifest,
                const std::filesystem::path& path, const LogSink& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open dataset file " + path.string());
  }
  return load_from_stream(manifest, in, log);
}

ContextExcerpt subsample(std::string_view source, std::size_t budget,
                         std::uint64_t seed) {
  ContextExcerpt out;
  out.source_length = source.size();
  out.excerpt_seed = seed;
  if (source.size() <= budget) {
    out.excerpt = std::string(source);
    return out;
  }
  Rng rng(seed);
  std::size_t start = rng.below(source.size() - budget + 1);
  std::size_t end = start + budget;
  while (start < end && utf8_continuation(static_cast<unsigned char>(source[start]))) {
    ++start;
  }
  while (end > start && end < source.size() &&
         utf8_continuation(static_cast<unsigned char>(source[end]))) {
    --end;
  }
  out.excerpt = std::string(source.substr(start, end - start));
  return out;
}

QuestionInstance attach_context(QuestionInstance instance, ContextPolicy policy,
                                std::size_t budget, std::uint64_t seed) {
  switch (policy) {
    case ContextPolicy::kNone:
      instance.extra_context.reset();
      break;
    case ContextPolicy::kFull:
      break;
    case ContextPolicy::kSubsample:
      if (budget == 0) {
        throw Error(ErrorKind::kContext, "subsample policy needs a budget > 0");
      }
      if (!instance.extra_context) {
        throw Error(ErrorKind::kContext,
                    "instance '" + instance.id + "' has no context to subsample");
      }
      instance.extra_context = subsample(*instance.extra_context, budget, seed).excerpt;
      break;
  }
  return instance;
}

std::uint64_t shuffle_seed(std::uint64_t run_seed, std::string_view instance_id) {
  return mix_seed(run_seed, instance_id);
}

ShuffledInstance shuffle(const QuestionInstance& instance, std::uint64_t run_seed) {
  ShuffledInstance out;
  out.base = instance;
  out.seed = shuffle_seed(run_seed, instance.id);
  out.permutation = Permutation::from_seed(instance.num_choices(), out.seed);
  return out;
}

std::string to_canonical_line(const QuestionInstance& q) {
  json j = {{"id", q.id},
            {"instructions", q.instructions},
            {"question", q.question},
            {"choices", q.choices},
            {"gold_index", q.gold_index},
            {"field", q.field_tag}};
  if (q.extra_context) j["context"] = *q.extra_context;
  return j.dump();
}

}  // namespace sway::datasets
