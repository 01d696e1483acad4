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

// nlohmann/json bindings for the domain and config types. Config readers
// accept partial objects and keep defaults for absent keys.

#include <filesystem>

#include "json.hpp"
#include "sway/backends.hpp"
#include "sway/core.hpp"
#include "sway/datasets.hpp"
#include "sway/prompts.hpp"

namespace sway {

using Json = nlohmann::json;

void to_json(Json& j, const Persona& p);
void from_json(const Json& j, Persona& p);
void to_json(Json& j, const AdvocacyTarget& t);
void from_json(const Json& j, AdvocacyTarget& t);
void to_json(Json& j, const Explanation& e);
void from_json(const Json& j, Explanation& e);
void to_json(Json& j, const InfluenceSpec& s);
void from_json(const Json& j, InfluenceSpec& s);
void to_json(Json& j, const ScoredPrediction& p);
void from_json(const Json& j, ScoredPrediction& p);
void to_json(Json& j, const QuestionInstance& q);
void from_json(const Json& j, QuestionInstance& q);

/// Parses JSON text, raising kConfig with `what` in the message on failure.
Json parse_json(std::string_view text, const std::string& what);
Json read_json_file(const std::filesystem::path& path);

namespace prompts {
void to_json(Json& j, const MitigationConfig& m);
void from_json(const Json& j, MitigationConfig& m);
void to_json(Json& j, const Turn& t);
void from_json(const Json& j, Turn& t);
void to_json(Json& j, const ChatTemplate& t);
void from_json(const Json& j, ChatTemplate& t);
void to_json(Json& j, const PromptTexts& t);
void from_json(const Json& j, PromptTexts& t);
}  // namespace prompts

namespace backends {
void to_json(Json& j, const GenerationParams& p);
void from_json(const Json& j, GenerationParams& p);
void to_json(Json& j, const PriorRule& r);
void from_json(const Json& j, PriorRule& r);
void to_json(Json& j, const SyntheticJudgeParams& p);
void from_json(const Json& j, SyntheticJudgeParams& p);
void to_json(Json& j, const RemoteConfig& c);
void from_json(const Json& j, RemoteConfig& c);
void to_json(Json& j, const BackendDescriptor& d);
void from_json(const Json& j, BackendDescriptor& d);
void to_json(Json& j, const LetterScores& s);
void from_json(const Json& j, LetterScores& s);
}  // namespace backends

namespace datasets {
void to_json(Json& j, const DatasetManifest& m);
void from_json(const Json& j, DatasetManifest& m);
}  // namespace datasets

}  // namespace sway
