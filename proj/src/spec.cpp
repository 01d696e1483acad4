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

#include <algorithm>
#include <set>

#include "sway/digest.hpp"
#include "sway/runner.hpp"
#include "sway/serialize.hpp"

namespace sway::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class T>
std::vector<T> list_of(const json& j, const char* key, std::vector<T> fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_array()) throw Error(ErrorKind::kConfig, std::string(key) + " must be a list");
  return it->get<std::vector<T>>();
}

}  // namespace

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, what); };
  if (datasets.empty()) fail("spec lists no datasets");
  std::set<std::string> names;
  for (const DatasetEntry& d : datasets) {
    d.manifest.validate();
    if (!names.insert(d.manifest.name).second) fail("duplicate dataset '" + d.manifest.name + "'");
  }
  if (influence_kinds.empty() && multi_influence_ks.empty()) {
    fail("spec lists no influence kinds");
  }
  if (judge_personas.empty()) fail("judge_personas is empty");
  if (advocate_personas.empty()) fail("advocate_personas is empty");
  if (mitigation_grid.empty()) fail("mitigation_grid is empty");
  for (const auto& m : mitigation_grid) m.validate();
  for (int c : confidence_levels) {
    if (c < 0 || c > 100) fail("confidence levels must lie in [0, 100]");
  }
  for (int k : multi_influence_ks) {
    if (k < 1 || k > kMaxChoices) fail("multi_influence_ks entries must lie in [1, 8]");
  }
  if (!multi_influence_ks.empty() && multi_influence_kind == InfluenceKind::kNone) {
    fail("multi_influence_kind cannot be none");
  }
  params.validate();
  auto check_pair = [&](const backends::BackendDescriptor& a,
                        const backends::BackendDescriptor& b) {
    if (a.backend_id == b.backend_id && json(a) != json(b)) {
      fail("backend id '" + a.backend_id + "' names two different backends");
    }
  };
  check_pair(judge_backend, advocate_backend);
  if (validator_backend) {
    check_pair(judge_backend, *validator_backend);
    check_pair(advocate_backend, *validator_backend);
  }
}

ExperimentSpec spec_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "experiment spec must be an object");
  try {
    ExperimentSpec spec;
    spec.name = j.value("name", spec.name);
    spec.run_seed = j.value("run_seed", std::uint64_t{0});
    for (const json& d : j.at("datasets")) {
      DatasetEntry entry;
      const json& m = d.at("manifest");
      entry.manifest = m.is_string()
                           ? read_json_file(resolve(base_dir, m.get<std::string>()))
                                 .get<datasets::DatasetManifest>()
                           : m.get<datasets::DatasetManifest>();
      entry.path = resolve(base_dir, d.at("path").get<std::string>());
      spec.datasets.push_back(std::move(entry));
    }
    spec.judge_backend = j.at("judge_backend").get<backends::BackendDescriptor>();
    spec.advocate_backend = j.contains("advocate_backend")
                                ? j["advocate_backend"].get<backends::BackendDescriptor>()
                                : spec.judge_backend;
    if (j.contains("validator_backend") && !j["validator_backend"].is_null()) {
      spec.validator_backend = j["validator_backend"].get<backends::BackendDescriptor>();
    }
    for (const std::string& k : list_of<std::string>(j, "influence_kinds", {})) {
      spec.influence_kinds.push_back(influence_kind_from_string(k));
    }
    spec.judge_personas = list_of<Persona>(j, "judge_personas", spec.judge_personas);
    spec.advocate_personas = list_of<Persona>(j, "advocate_personas", spec.advocate_personas);
    spec.mitigation_grid =
        list_of<prompts::MitigationConfig>(j, "mitigation_grid", spec.mitigation_grid);
    spec.confidence_levels = list_of<int>(j, "confidence_levels", {});
    spec.multi_influence_ks = list_of<int>(j, "multi_influence_ks", {});
    if (j.contains("multi_influence_kind")) {
      spec.multi_influence_kind =
          influence_kind_from_string(j["multi_influence_kind"].get<std::string>());
    }
    if (j.contains("params")) spec.params = j["params"].get<backends::GenerationParams>();
    if (j.contains("prompt_texts")) spec.texts = j["prompt_texts"].get<prompts::PromptTexts>();
    if (j.contains("cache_dir")) {
      spec.cache_dir = resolve(base_dir, j["cache_dir"].get<std::string>());
    }
    spec.allow_degraded = j.value("allow_degraded", true);
    spec.digest = sha256_hex(j.dump());
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("experiment spec: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(ErrorKind::kConfig, std::string("experiment spec: ") + e.what());
  }
}

ExperimentSpec load_spec(const fs::path& path) {
  return spec_from_json(read_json_file(path), path.parent_path());
}

}  // namespace sway::runner
