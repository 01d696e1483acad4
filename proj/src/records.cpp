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

#include "sway/records.hpp"

#include <cmath>
#include <fstream>

#include "sway/serialize.hpp"

namespace sway {

InfluenceKind TrialRecord::kind() const {
  for (const InfluenceSpec& s : influences) {
    if (s.kind != InfluenceKind::kNone) return s.kind;
  }
  return InfluenceKind::kNone;
}

const InfluenceSpec& TrialRecord::influence() const {
  if (multi_k || influences.size() != 1) {
    throw Error(ErrorKind::kInconsistentRecords,
                "trial " + trial_id + " carries more than one influence block");
  }
  return influences.front();
}

double TrialRecord::gold_probability() const {
  return prediction.probs.at(permutation.at(gold_index));
}

void TrialRecord::check() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kInconsistentRecords, "trial " + trial_id + ": " + what);
  };
  if (trial_id.empty()) fail("missing trial_id");
  if (n_choices < 2 || n_choices > kMaxChoices) fail("bad choice count");
  if (gold_index < 0 || gold_index >= n_choices) fail("gold index out of range");
  if (static_cast<int>(permutation.size()) != n_choices) fail("permutation size mismatch");
  if (static_cast<int>(prediction.probs.size()) != n_choices) {
    fail("prediction letters do not match the presented choice count");
  }
  double total = 0.0;
  for (double p : prediction.probs) {
    if (!(p >= 0.0)) fail("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) fail("probabilities do not sum to one");
  if (prediction.argmax_canonical < 0 || prediction.argmax_canonical >= n_choices) {
    fail("argmax out of range");
  }
  if (influences.empty()) fail("no influence block");
  if (multi_k && static_cast<int>(influences.size()) != *multi_k) fail("multi_k mismatch");
  for (const InfluenceSpec& s : influences) {
    if (s.kind == InfluenceKind::kNone) continue;
    if (!s.target || s.target->instance_id != instance_id) fail("influence target mismatch");
    if (s.target->target_index < 0 || s.target->target_index >= n_choices) {
      fail("influence target out of range");
    }
  }
}

void to_json(nlohmann::json& j, const TrialRecord& r) {
  j = nlohmann::json{{"trial_id", r.trial_id},
                     {"dataset", r.dataset},
                     {"instance_id", r.instance_id},
                     {"n_choices", r.n_choices},
                     {"gold_index", r.gold_index},
                     {"shuffle_seed", r.shuffle_seed},
                     {"permutation", r.permutation},
                     {"judge_persona", r.judge_persona},
                     {"mitigation", r.mitigation},
                     {"influences", r.influences},
                     {"prediction", r.prediction},
                     {"backend_id", r.backend_id},
                     {"scoring_variant", r.scoring_variant},
                     {"degraded", r.degraded},
                     {"prompt_digest", r.prompt_digest},
                     {"timestamp", r.timestamp}};
  j["multi_k"] = r.multi_k ? nlohmann::json(*r.multi_k) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrialRecord& r) {
  r = TrialRecord{};
  j.at("trial_id").get_to(r.trial_id);
  j.at("dataset").get_to(r.dataset);
  j.at("instance_id").get_to(r.instance_id);
  j.at("n_choices").get_to(r.n_choices);
  j.at("gold_index").get_to(r.gold_index);
  j.at("shuffle_seed").get_to(r.shuffle_seed);
  j.at("permutation").get_to(r.permutation);
  j.at("judge_persona").get_to(r.judge_persona);
  j.at("mitigation").get_to(r.mitigation);
  j.at("influences").get_to(r.influences);
  if (j.contains("multi_k") && !j["multi_k"].is_null()) r.multi_k = j["multi_k"].get<int>();
  j.at("prediction").get_to(r.prediction);
  j.at("backend_id").get_to(r.backend_id);
  r.scoring_variant = j.value("scoring_variant", std::string());
  r.degraded = j.value("degraded", false);
  r.prompt_digest = j.value("prompt_digest", std::string());
  r.timestamp = j.value("timestamp", std::string());
}

std::string to_line(const TrialRecord& record) {
  return nlohmann::json(record).dump();
}

std::vector<TrialRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInconsistentRecords, "cannot read " + path.string());
  std::vector<TrialRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<TrialRecord>());
      out.back().check();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kInconsistentRecords,
                  path.string() + " line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kInconsistentRecords,
                  path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sway
