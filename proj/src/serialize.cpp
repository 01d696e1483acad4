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

#include "sway/serialize.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sway {

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end() && !it->is_null()) it->get_to(out);
}

}  // namespace

Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kConfig, what + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), path.string());
}

void to_json(Json& j, const Persona& p) {
  j = Json{{"level", std::string(to_string(p.level))}};
  if (p.field_tag) j["field"] = *p.field_tag;
}

void from_json(const Json& j, Persona& p) {
  p = Persona{};
  if (j.is_string()) {
    p.level = persona_level_from_string(j.get<std::string>());
    return;
  }
  p.level = persona_level_from_string(j.at("level").get<std::string>());
  if (j.contains("field") && !j["field"].is_null()) p.field_tag = j["field"].get<std::string>();
}

void to_json(Json& j, const AdvocacyTarget& t) {
  j = Json{{"instance_id", t.instance_id}, {"target_index", t.target_index}, {"is_gold", t.is_gold}};
}

void from_json(const Json& j, AdvocacyTarget& t) {
  j.at("instance_id").get_to(t.instance_id);
  j.at("target_index").get_to(t.target_index);
  j.at("is_gold").get_to(t.is_gold);
}

void to_json(Json& j, const Explanation& e) {
  j = Json{{"target", e.target}, {"advocate", e.advocate_persona}, {"text", e.text}};
  j["validated"] = e.validated ? Json(*e.validated) : Json(nullptr);
}

void from_json(const Json& j, Explanation& e) {
  j.at("target").get_to(e.target);
  j.at("advocate").get_to(e.advocate_persona);
  j.at("text").get_to(e.text);
  e.validated.reset();
  if (j.contains("validated") && j["validated"].is_boolean()) e.validated = j["validated"].get<bool>();
}

void to_json(Json& j, const InfluenceSpec& s) {
  j = Json{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == InfluenceKind::kNone) return;
  j["target"] = *s.target;
  j["advocate"] = s.advocate_persona;
  if (s.confidence) j["confidence"] = s.confidence->percent;
  if (s.explanation) j["explanation"] = *s.explanation;
}

void from_json(const Json& j, InfluenceSpec& s) {
  s = InfluenceSpec{};
  s.kind = influence_kind_from_string(j.at("kind").get<std::string>());
  if (s.kind == InfluenceKind::kNone) return;
  s.target = j.at("target").get<AdvocacyTarget>();
  read_opt(j, "advocate", s.advocate_persona);
  if (j.contains("confidence") && !j["confidence"].is_null()) {
    s.confidence = ConfidenceLevel{j["confidence"].get<int>()};
  }
  if (j.contains("explanation") && !j["explanation"].is_null()) {
    s.explanation = j["explanation"].get<Explanation>();
  }
  s.validate();
}

void to_json(Json& j, const ScoredPrediction& p) {
  Json probs = Json::object();
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    probs[std::string(1, letter_of(static_cast<int>(i)))] = p.probs[i];
  }
  j = Json{{"probs", probs},
           {"argmax_letter", std::string(1, p.argmax_letter)},
           {"argmax_canonical", p.argmax_canonical}};
}

void from_json(const Json& j, ScoredPrediction& p) {
  const Json& probs = j.at("probs");
  p.probs.assign(probs.size(), 0.0);
  for (const auto& [letter, value] : probs.items()) {
    if (letter.size() != 1) throw Error(ErrorKind::kInconsistentRecords, "bad letter key");
    p.probs.at(index_of(letter[0])) = value.get<double>();
  }
  const std::string letter = j.at("argmax_letter").get<std::string>();
  if (letter.size() != 1) throw Error(ErrorKind::kInconsistentRecords, "bad argmax letter");
  p.argmax_letter = letter[0];
  j.at("argmax_canonical").get_to(p.argmax_canonical);
}

void to_json(Json& j, const QuestionInstance& q) {
  j = Json{{"id", q.id},
           {"instructions", q.instructions},
           {"question", q.question},
           {"choices", q.choices},
           {"gold_index", q.gold_index},
           {"field", q.field_tag}};
  if (q.extra_context) j["context"] = *q.extra_context;
}

void from_json(const Json& j, QuestionInstance& q) {
  q = QuestionInstance{};
  j.at("id").get_to(q.id);
  read_opt(j, "instructions", q.instructions);
  j.at("question").get_to(q.question);
  j.at("choices").get_to(q.choices);
  j.at("gold_index").get_to(q.gold_index);
  read_opt(j, "field", q.field_tag);
  if (j.contains("context") && j["context"].is_string()) q.extra_context = j["context"].get<std::string>();
}

namespace prompts {

void to_json(Json& j, const MitigationConfig& m) {
  j = Json{{"system", std::string(to_string(m.system_kind))},
           {"cot", m.cot_prefix},
           {"few_shot_k", m.few_shot_k}};
}

void from_json(const Json& j, MitigationConfig& m) {
  m = MitigationConfig{};
  if (j.contains("system")) m.system_kind = system_kind_from_string(j["system"].get<std::string>());
  read_opt(j, "cot", m.cot_prefix);
  read_opt(j, "few_shot_k", m.few_shot_k);
  m.validate();
}

void to_json(Json& j, const Turn& t) {
  j = Json{{"role", std::string(to_string(t.role))}, {"content", t.content}};
}

void from_json(const Json& j, Turn& t) {
  const std::string role = j.at("role").get<std::string>();
  if (role == "system") {
    t.role = Role::kSystem;
  } else if (role == "user") {
    t.role = Role::kUser;
  } else if (role == "assistant") {
    t.role = Role::kAssistant;
  } else {
    throw Error(ErrorKind::kConfig, "unknown role '" + role + "'");
  }
  j.at("content").get_to(t.content);
}

void to_json(Json& j, const ChatTemplate& t) {
  j = Json{{"name", t.name},
           {"bos", t.bos},
           {"fold_system", t.fold_system},
           {"system_prefix", t.system_prefix},
           {"system_suffix", t.system_suffix},
           {"fold_separator", t.fold_separator},
           {"user_prefix", t.user_prefix},
           {"user_suffix", t.user_suffix},
           {"assistant_prefix", t.assistant_prefix},
           {"assistant_suffix", t.assistant_suffix},
           {"generation_cue", t.generation_cue},
           {"answer_lead", t.answer_lead},
           {"strip_content", t.strip_content},
           {"letter_variant", std::string(to_string(t.letter_variant))}};
}

void from_json(const Json& j, ChatTemplate& t) {
  if (j.is_string()) {
    t = ChatTemplate::builtin(j.get<std::string>());
    return;
  }
  t = j.contains("builtin") ? ChatTemplate::builtin(j["builtin"].get<std::string>())
                            : ChatTemplate{};
  read_opt(j, "name", t.name);
  read_opt(j, "bos", t.bos);
  read_opt(j, "fold_system", t.fold_system);
  read_opt(j, "system_prefix", t.system_prefix);
  read_opt(j, "system_suffix", t.system_suffix);
  read_opt(j, "fold_separator", t.fold_separator);
  read_opt(j, "user_prefix", t.user_prefix);
  read_opt(j, "user_suffix", t.user_suffix);
  read_opt(j, "assistant_prefix", t.assistant_prefix);
  read_opt(j, "assistant_suffix", t.assistant_suffix);
  read_opt(j, "generation_cue", t.generation_cue);
  read_opt(j, "answer_lead", t.answer_lead);
  read_opt(j, "strip_content", t.strip_content);
  if (j.contains("letter_variant")) {
    t.letter_variant = letter_variant_from_string(j["letter_variant"].get<std::string>());
  }
  if (t.name.empty()) t.name = "custom";
}

void to_json(Json& j, const PromptTexts& t) {
  Json personas = Json::object();
  for (int i = 0; i < kNumPersonaLevels; ++i) {
    personas[std::string(to_string(static_cast<PersonaLevel>(i)))] = t.persona_phrases[i];
  }
  j = Json{{"persona_phrases", personas},
           {"field_phrase", t.field_phrase},
           {"system", t.system},
           {"suspicious", t.suspicious},
           {"critical", t.critical},
           {"rejecting", t.rejecting},
           {"choose_line", t.choose_line},
           {"reply_line", t.reply_line},
           {"answer_prefix", t.answer_prefix},
           {"cot_sentences", t.cot_sentences},
           {"opinion", t.opinion},
           {"explanation", t.explanation},
           {"confidence", t.confidence},
           {"explanation_request", t.explanation_request},
           {"context_separator", t.context_separator},
           {"validator_system", t.validator_system},
           {"validation_promote", t.validation_promote},
           {"validation_reasoning", t.validation_reasoning},
           {"others_separator", t.others_separator},
           {"smooth_articles", t.smooth_articles}};
}

void from_json(const Json& j, PromptTexts& t) {
  t = PromptTexts{};
  if (j.contains("persona_phrases")) {
    for (const auto& [level, phrase] : j["persona_phrases"].items()) {
      t.persona_phrases[static_cast<int>(persona_level_from_string(level))] =
          phrase.get<std::string>();
    }
  }
  read_opt(j, "field_phrase", t.field_phrase);
  read_opt(j, "system", t.system);
  read_opt(j, "suspicious", t.suspicious);
  read_opt(j, "critical", t.critical);
  read_opt(j, "rejecting", t.rejecting);
  read_opt(j, "choose_line", t.choose_line);
  read_opt(j, "reply_line", t.reply_line);
  read_opt(j, "answer_prefix", t.answer_prefix);
  read_opt(j, "cot_sentences", t.cot_sentences);
  read_opt(j, "opinion", t.opinion);
  read_opt(j, "explanation", t.explanation);
  read_opt(j, "confidence", t.confidence);
  read_opt(j, "explanation_request", t.explanation_request);
  read_opt(j, "context_separator", t.context_separator);
  read_opt(j, "validator_system", t.validator_system);
  read_opt(j, "validation_promote", t.validation_promote);
  read_opt(j, "validation_reasoning", t.validation_reasoning);
  read_opt(j, "others_separator", t.others_separator);
  read_opt(j, "smooth_articles", t.smooth_articles);
}

}  // namespace prompts

namespace backends {

void to_json(Json& j, const GenerationParams& p) {
  j = Json{{"top_k", p.top_k},
           {"top_p", p.top_p},
           {"temperature", p.temperature},
           {"max_new_tokens", p.max_new_tokens}};
  j["seed"] = p.seed ? Json(*p.seed) : Json(nullptr);
}

void from_json(const Json& j, GenerationParams& p) {
  p = GenerationParams{};
  read_opt(j, "top_k", p.top_k);
  read_opt(j, "top_p", p.top_p);
  read_opt(j, "temperature", p.temperature);
  read_opt(j, "max_new_tokens", p.max_new_tokens);
  if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
  p.validate();
}

void to_json(Json& j, const PriorRule& r) {
  static constexpr const char* kinds[] = {"hashed", "uniform", "explicit"};
  j = Json{{"kind", kinds[static_cast<int>(r.kind)]},
           {"seed", r.seed},
           {"scale", r.scale},
           {"gold_bonus", r.gold_bonus}};
  if (!r.table.empty()) j["table"] = r.table;
}

void from_json(const Json& j, PriorRule& r) {
  r = PriorRule{};
  if (j.contains("kind")) {
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "hashed") {
      r.kind = PriorRule::Kind::kHashed;
    } else if (kind == "uniform") {
      r.kind = PriorRule::Kind::kUniform;
    } else if (kind == "explicit") {
      r.kind = PriorRule::Kind::kExplicit;
    } else {
      throw Error(ErrorKind::kConfig, "unknown prior kind '" + kind + "'");
    }
  }
  read_opt(j, "seed", r.seed);
  read_opt(j, "scale", r.scale);
  read_opt(j, "gold_bonus", r.gold_bonus);
  read_opt(j, "table", r.table);
}

void to_json(Json& j, const SyntheticJudgeParams& p) {
  j = Json{{"prior", p.prior},
           {"susceptibility", p.susceptibility},
           {"authority_weights", p.authority_weights},
           {"confidence_slope", p.confidence_slope}};
}

void from_json(const Json& j, SyntheticJudgeParams& p) {
  p = SyntheticJudgeParams{};
  read_opt(j, "prior", p.prior);
  read_opt(j, "susceptibility", p.susceptibility);
  if (j.contains("authority_weights")) {
    const Json& w = j["authority_weights"];
    if (w.is_array()) {
      if (w.size() != kNumPersonaLevels) {
        throw Error(ErrorKind::kConfig, "authority_weights needs 6 entries");
      }
      w.get_to(p.authority_weights);
    } else {
      for (const auto& [level, value] : w.items()) {
        p.authority_weights[static_cast<int>(persona_level_from_string(level))] =
            value.get<double>();
      }
    }
  }
  read_opt(j, "confidence_slope", p.confidence_slope);
  p.validate();
}

void to_json(Json& j, const RemoteConfig& c) {
  j = Json{{"base_url", c.base_url},
           {"completions_path", c.completions_path},
           {"model", c.model},
           {"api_key_env", c.api_key_env},
           {"scoring_mode", std::string(to_string(c.scoring_mode))},
           {"top_logprobs", c.top_logprobs},
           {"echo_max_tokens", c.echo_max_tokens},
           {"timeout_seconds", c.timeout_seconds},
           {"max_attempts", c.max_attempts},
           {"backoff_initial_ms", c.backoff_initial_ms},
           {"max_prompt_chars", c.max_prompt_chars}};
}

void from_json(const Json& j, RemoteConfig& c) {
  c = RemoteConfig{};
  read_opt(j, "base_url", c.base_url);
  if (c.base_url.empty() && j.contains("base_url_env")) {
    const std::string var = j["base_url_env"].get<std::string>();
    if (const char* value = std::getenv(var.c_str())) c.base_url = value;
  }
  read_opt(j, "completions_path", c.completions_path);
  read_opt(j, "model", c.model);
  read_opt(j, "api_key_env", c.api_key_env);
  if (j.contains("scoring_mode")) {
    c.scoring_mode = scoring_mode_from_string(j["scoring_mode"].get<std::string>());
  }
  read_opt(j, "top_logprobs", c.top_logprobs);
  read_opt(j, "echo_max_tokens", c.echo_max_tokens);
  read_opt(j, "timeout_seconds", c.timeout_seconds);
  read_opt(j, "max_attempts", c.max_attempts);
  read_opt(j, "backoff_initial_ms", c.backoff_initial_ms);
  read_opt(j, "max_prompt_chars", c.max_prompt_chars);
}

void to_json(Json& j, const BackendDescriptor& d) {
  j = Json{{"backend_id", d.backend_id},
           {"kind", d.kind == BackendKind::kRemote ? "remote" : "synthetic"},
           {"chat_template", d.chat_template},
           {"inflight_limit", d.inflight_limit}};
  if (d.kind == BackendKind::kRemote) {
    j["remote"] = d.remote;
  } else {
    j["synthetic"] = d.synthetic;
  }
}

void from_json(const Json& j, BackendDescriptor& d) {
  d = BackendDescriptor{};
  j.at("backend_id").get_to(d.backend_id);
  const std::string kind = j.value("kind", std::string("synthetic"));
  if (kind == "remote") {
    d.kind = BackendKind::kRemote;
  } else if (kind == "synthetic") {
    d.kind = BackendKind::kSynthetic;
  } else {
    throw Error(ErrorKind::kConfig, "unknown backend kind '" + kind + "'");
  }
  read_opt(j, "chat_template", d.chat_template);
  read_opt(j, "inflight_limit", d.inflight_limit);
  if (d.inflight_limit < 1) throw Error(ErrorKind::kConfig, "inflight_limit must be >= 1");
  read_opt(j, "remote", d.remote);
  read_opt(j, "synthetic", d.synthetic);
}

void to_json(Json& j, const LetterScores& s) {
  j = Json{{"log_scores", s.log_scores}, {"variant", std::string(to_string(s.variant))}};
}

void from_json(const Json& j, LetterScores& s) {
  j.at("log_scores").get_to(s.log_scores);
  s.variant = prompts::letter_variant_from_string(j.at("variant").get<std::string>());
}

}  // namespace backends

namespace datasets {

void to_json(Json& j, const DatasetManifest& m) {
  j = Json{{"name", m.name},
           {"format_kind", std::string(to_string(m.format_kind))},
           {"instruction_text", m.instruction_text},
           {"sample_cap", m.sample_cap},
           {"max_choices", m.max_choices},
           {"context_policy", std::string(to_string(m.context_policy))},
           {"context_budget", m.context_budget},
           {"default_field", m.default_field}};
}

void from_json(const Json& j, DatasetManifest& m) {
  m = DatasetManifest{};
  j.at("name").get_to(m.name);
  if (j.contains("format_kind")) {
    m.format_kind = format_kind_from_string(j["format_kind"].get<std::string>());
  }
  read_opt(j, "instruction_text", m.instruction_text);
  read_opt(j, "sample_cap", m.sample_cap);
  read_opt(j, "max_choices", m.max_choices);
  if (j.contains("context_policy")) {
    m.context_policy = context_policy_from_string(j["context_policy"].get<std::string>());
  }
  read_opt(j, "context_budget", m.context_budget);
  read_opt(j, "default_field", m.default_field);
  m.validate();
}

}  // namespace datasets

}  // namespace sway
