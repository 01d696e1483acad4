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

#include "sway/prompts.hpp"

#include <algorithm>

namespace sway::prompts {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void validate_turns(std::span<const Turn> turns) {
  if (turns.empty()) throw Error(ErrorKind::kRender, "empty turn list");
  std::size_t i = 0;
  if (turns[0].role == Role::kSystem) i = 1;
  if (i == turns.size()) throw Error(ErrorKind::kRender, "turn list has only a system turn");
  Role expected = Role::kUser;
  for (; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    if (t.role == Role::kSystem) {
      throw Error(ErrorKind::kRender, "system turn allowed only first and once");
    }
    if (t.role != expected) {
      throw Error(ErrorKind::kRender,
                  std::string("expected a ") + std::string(to_string(expected)) +
                      " turn at position " + std::to_string(i));
    }
    if (t.content.empty()) {
      throw Error(ErrorKind::kRender, "empty content in turn " + std::to_string(i));
    }
    expected = expected == Role::kUser ? Role::kAssistant : Role::kUser;
  }
}

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kNone: return "none";
    case SystemKind::kSuspicious: return "suspicious";
    case SystemKind::kCritical: return "critical";
    case SystemKind::kRejecting: return "rejecting";
  }
  return "none";
}

SystemKind system_kind_from_string(std::string_view text) {
  if (text == "none") return SystemKind::kNone;
  if (text == "suspicious") return SystemKind::kSuspicious;
  if (text == "critical") return SystemKind::kCritical;
  if (text == "rejecting") return SystemKind::kRejecting;
  throw Error(ErrorKind::kConfig, "unknown system prompt kind '" + std::string(text) + "'");
}

void MitigationConfig::validate() const {
  if (few_shot_k < 0) throw Error(ErrorKind::kConfig, "few_shot_k must be >= 0");
}

const PromptTexts& PromptTexts::defaults() {
  static const PromptTexts texts;
  return texts;
}

std::string fill(std::string_view tmpl,
                 const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      throw Error(ErrorKind::kRender, "unterminated placeholder in template");
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorKind::kRender,
                  "template placeholder {" + std::string(name) + "} has no value");
    }
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

std::string persona_phrase(const Persona& persona, const PromptTexts& texts) {
  const std::string& tmpl = texts.persona_phrases[static_cast<int>(persona.level)];
  if (!persona.needs_field()) return tmpl;
  if (!persona.field_tag || persona.field_tag->empty()) {
    throw Error(ErrorKind::kRender, "persona " + std::string(to_string(persona.level)) +
                                        " needs a field tag");
  }
  return fill(tmpl, {{"field", fill(texts.field_phrase, {{"tag", *persona.field_tag}})}});
}

std::string system_text(const Persona& judge, SystemKind kind,
                        const PromptTexts& texts) {
  std::string out = fill(texts.system, {{"persona", persona_phrase(judge, texts)}});
  switch (kind) {
    case SystemKind::kNone: break;
    case SystemKind::kSuspicious: out += " " + texts.suspicious; break;
    case SystemKind::kCritical: out += " " + texts.critical; break;
    case SystemKind::kRejecting: out += " " + texts.rejecting; break;
  }
  return out;
}

namespace {

std::string smoothed(std::string phrase, const PromptTexts& texts) {
  if (!texts.smooth_articles) return phrase;
  for (std::string_view article : {"a ", "an "}) {
    if (phrase.starts_with(article)) return phrase.substr(article.size());
  }
  return phrase;
}

void check_target(const ShuffledInstance& shuffled, const AdvocacyTarget& target) {
  const QuestionInstance& q = shuffled.base;
  if (target.instance_id != q.id) {
    throw Error(ErrorKind::kRender, "influence targets instance '" + target.instance_id +
                                        "' but the prompt is for '" + q.id + "'");
  }
  if (target.target_index < 0 || target.target_index >= q.num_choices()) {
    throw Error(ErrorKind::kRender, "influence target index out of range for '" +
                                        q.id + "'");
  }
  if (target.is_gold != (target.target_index == q.gold_index)) {
    throw Error(ErrorKind::kRender, "influence target gold flag inconsistent for '" +
                                        q.id + "'");
  }
}

}  // namespace

std::string render_confidence_suffix(const Persona& advocate,
                                     const std::optional<ConfidenceLevel>& confidence,
                                     const PromptTexts& texts) {
  if (!confidence) return "";
  return fill(texts.confidence,
              {{"advocate", smoothed(persona_phrase(advocate, texts), texts)},
               {"confidence", std::to_string(confidence->percent) + "%"}});
}

std::string render_influence(const ShuffledInstance& shuffled,
                             const InfluenceSpec& influence,
                             const PromptTexts& texts) {
  try {
    influence.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kRender, e.what());
  }
  if (influence.kind == InfluenceKind::kNone) return "";
  check_target(shuffled, *influence.target);

  const Persona advocate = influence.advocate_persona.resolved_for(shuffled.base);
  const std::string phrase = persona_phrase(advocate, texts);
  std::string block;
  if (influence.kind == InfluenceKind::kOpinion) {
    const char letter = letter_of(shuffled.permutation.presented(influence.target->target_index));
    block = fill(texts.opinion, {{"advocate", phrase}, {"answer", std::string(1, letter)}});
  } else {
    block = fill(texts.explanation,
                 {{"advocate", phrase}, {"explanation", influence.explanation->text}});
  }
  if (influence.confidence) {
    block += "\n" + render_confidence_suffix(advocate, influence.confidence, texts);
  }
  return block;
}

std::string render_question_body(const ShuffledInstance& shuffled,
                                 const PromptTexts& texts) {
  const QuestionInstance& q = shuffled.base;
  q.validate();
  std::string out = q.instructions + q.question + "\n" + texts.choose_line + "\n";
  const auto presented = shuffled.presented_choices();
  for (std::size_t i = 0; i < presented.size(); ++i) {
    out += letter_of(static_cast<int>(i));
    out += ") " + presented[i] + "\n";
  }
  out += texts.reply_line;
  return out;
}

namespace {

std::string user_turn_text(const ShuffledInstance& shuffled,
                           std::span<const InfluenceSpec> influences,
                           const PromptTexts& texts) {
  std::string out = render_question_body(shuffled, texts);
  std::vector<std::string> blocks;
  for (const InfluenceSpec& influence : influences) {
    std::string block = render_influence(shuffled, influence, texts);
    if (!block.empty()) blocks.push_back(std::move(block));
  }
  if (!blocks.empty()) {
    out += "\n\n";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) out += "\n";
      out += blocks[i];
    }
  }
  return out;
}

std::string forced_prefix(bool cot, const PromptTexts& texts) {
  return cot ? texts.cot_sentences + " " + texts.answer_prefix : texts.answer_prefix;
}

}  // namespace

MitigationRender render_mitigation(const MitigationConfig& config,
                                   std::span<const FewShotExample> exemplars,
                                   const Persona& judge, const PromptTexts& texts) {
  config.validate();
  if (static_cast<std::size_t>(config.few_shot_k) > exemplars.size()) {
    throw Error(ErrorKind::kConfig,
                "few_shot_k=" + std::to_string(config.few_shot_k) + " but only " +
                    std::to_string(exemplars.size()) + " held-out exemplars available");
  }
  MitigationRender out;
  out.system_text = system_text(judge, config.system_kind, texts);
  out.assistant_prefix = forced_prefix(config.cot_prefix, texts);
  for (int k = 0; k < config.few_shot_k; ++k) {
    const FewShotExample& ex = exemplars[k];
    out.exemplar_turns.push_back(
        {Role::kUser, user_turn_text(ex.shuffled, ex.influences, texts)});
    out.exemplar_turns.push_back(
        {Role::kAssistant,
         out.assistant_prefix + " " + std::string(1, ex.shuffled.gold_letter()) + "."});
  }
  return out;
}

JudgePrompt render_judge_prompt(const ShuffledInstance& shuffled,
                                std::span<const InfluenceSpec> influences,
                                const Persona& judge,
                                const MitigationConfig& mitigation,
                                std::span<const FewShotExample> few_shots,
                                const PromptTexts& texts) {
  const Persona judge_resolved = judge.resolved_for(shuffled.base);
  MitigationRender m = render_mitigation(mitigation, few_shots, judge_resolved, texts);
  JudgePrompt out;
  out.turns.push_back({Role::kSystem, std::move(m.system_text)});
  for (Turn& t : m.exemplar_turns) out.turns.push_back(std::move(t));
  out.turns.push_back({Role::kUser, user_turn_text(shuffled, influences, texts)});
  out.assistant_prefix = std::move(m.assistant_prefix);
  return out;
}

ExplanationRequest render_explanation_request(const QuestionInstance& instance,
                                              const AdvocacyTarget& target,
                                              const Persona& advocate,
                                              bool include_context,
                                              const PromptTexts& texts) {
  if (target.instance_id != instance.id || target.target_index < 0 ||
      target.target_index >= instance.num_choices()) {
    throw Error(ErrorKind::kRender, "advocacy target invalid for '" + instance.id + "'");
  }
  const std::string phrase = persona_phrase(advocate.resolved_for(instance), texts);
  ExplanationRequest out;
  std::string user = fill(texts.explanation_request,
                          {{"instructions", instance.instructions},
                           {"question", instance.question},
                           {"answer", instance.choices[target.target_index]},
                           {"persona", phrase}});
  if (include_context) {
    if (instance.extra_context && !instance.extra_context->empty()) {
      user += texts.context_separator + *instance.extra_context;
    } else {
      out.context_missing = true;
    }
  }
  out.turns.push_back({Role::kSystem, fill(texts.system, {{"persona", phrase}})});
  out.turns.push_back({Role::kUser, std::move(user)});
  return out;
}

std::vector<Turn> render_validation_promote(const QuestionInstance& instance,
                                            const Explanation& explanation,
                                            const PromptTexts& texts) {
  const int target = explanation.target.target_index;
  std::string others;
  for (int j = 0; j < instance.num_choices(); ++j) {
    if (j == target) continue;
    if (!others.empty()) others += texts.others_separator;
    others += instance.choices[j];
  }
  return {{Role::kSystem, texts.validator_system},
          {Role::kUser, fill(texts.validation_promote,
                             {{"explanation", explanation.text},
                              {"answer", instance.choices.at(target)},
                              {"others", others}})}};
}

std::vector<Turn> render_validation_reasoning(const QuestionInstance& instance,
                                              const Explanation& explanation,
                                              const PromptTexts& texts) {
  return {{Role::kSystem, texts.validator_system},
          {Role::kUser, fill(texts.validation_reasoning,
                             {{"explanation", explanation.text},
                              {"question", instance.question},
                              {"answer", instance.choices.at(explanation.target.target_index)}})}};
}

// ---------------------------------------------------------------------------
// Chat templates

std::string_view to_string(LetterVariant variant) {
  return variant == LetterVariant::kSpace ? "space" : "bare";
}

LetterVariant letter_variant_from_string(std::string_view text) {
  if (text == "space") return LetterVariant::kSpace;
  if (text == "bare") return LetterVariant::kBare;
  throw Error(ErrorKind::kConfig, "unknown letter variant '" + std::string(text) + "'");
}

ChatTemplate ChatTemplate::falcon() {
  ChatTemplate t;
  t.name = "falcon";
  t.user_prefix = "\n\nUser: ";
  t.assistant_prefix = "\n\nAssistant: ";
  t.generation_cue = "\n\nAssistant:";
  t.answer_lead = " ";
  t.strip_content = true;
  return t;
}

ChatTemplate ChatTemplate::mixtral() {
  ChatTemplate t;
  t.name = "mixtral";
  t.bos = "<s>";
  t.fold_system = true;
  t.fold_separator = "\n\n";
  t.user_prefix = "[INST] ";
  t.user_suffix = " [/INST]";
  t.assistant_suffix = "</s>";
  t.answer_lead = " ";
  return t;
}

ChatTemplate ChatTemplate::llama2() {
  ChatTemplate t;
  t.name = "llama2";
  t.fold_system = true;
  t.system_prefix = "<<SYS>>\n";
  t.system_suffix = "\n<</SYS>>\n\n";
  t.user_prefix = "<s>[INST] ";
  t.user_suffix = " [/INST]";
  t.assistant_prefix = " ";
  t.assistant_suffix = " </s>";
  t.answer_lead = " ";
  t.strip_content = true;
  return t;
}

ChatTemplate ChatTemplate::plain() {
  ChatTemplate t;
  t.name = "plain";
  t.system_prefix = "System: ";
  t.user_prefix = "\n\nUser: ";
  t.assistant_prefix = "\n\nAssistant: ";
  t.generation_cue = "\n\nAssistant:";
  t.answer_lead = " ";
  return t;
}

ChatTemplate ChatTemplate::builtin(std::string_view name) {
  if (name == "falcon") return falcon();
  if (name == "mixtral") return mixtral();
  if (name == "llama2") return llama2();
  if (name == "plain") return plain();
  throw Error(ErrorKind::kConfig, "unknown chat template '" + std::string(name) + "'");
}

namespace {

std::string_view trimmed(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string render_chat(std::span<const Turn> turns, const ChatTemplate& tmpl,
                        bool generation_cue) {
  validate_turns(turns);
  auto content = [&](const Turn& t) {
    return tmpl.strip_content ? std::string(trimmed(t.content)) : t.content;
  };
  std::string out = tmpl.bos;
  std::size_t i = 0;
  std::string folded;
  if (turns[0].role == Role::kSystem) {
    const std::string system = tmpl.system_prefix + content(turns[0]) + tmpl.system_suffix;
    if (tmpl.fold_system) {
      folded = system + tmpl.fold_separator;
    } else {
      out += system;
    }
    i = 1;
  }
  for (; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    if (t.role == Role::kUser) {
      out += tmpl.user_prefix + folded + content(t) + tmpl.user_suffix;
      folded.clear();
    } else {
      out += tmpl.assistant_prefix + content(t) + tmpl.assistant_suffix;
    }
  }
  if (generation_cue) out += tmpl.generation_cue;
  return out;
}

std::string render_scoring_prompt(const JudgePrompt& prompt, const ChatTemplate& tmpl) {
  std::string out = render_chat(prompt.turns, tmpl, true) + tmpl.answer_lead +
                    prompt.assistant_prefix;
  if (tmpl.letter_variant == LetterVariant::kBare) out += " ";
  return out;
}

std::vector<std::string> letter_candidates(int num_choices, LetterVariant variant) {
  std::vector<std::string> out;
  for (int i = 0; i < num_choices; ++i) {
    std::string c(1, letter_of(i));
    out.push_back(variant == LetterVariant::kSpace ? " " + c : c);
  }
  return out;
}

std::vector<Turn> parse_chat(std::string_view text, const ChatTemplate& tmpl,
                             bool has_system, bool generation_cue) {
  auto fail = [](const std::string& why) {
    return Error(ErrorKind::kRender, "cannot parse chat: " + why);
  };
  auto expect = [&](std::string_view& s, std::string_view marker) {
    if (!s.starts_with(marker)) throw fail("expected '" + std::string(marker) + "'");
    s.remove_prefix(marker.size());
  };

  std::string_view rest = text;
  if (generation_cue) {
    if (!rest.ends_with(tmpl.generation_cue)) throw fail("missing generation cue");
    rest.remove_suffix(tmpl.generation_cue.size());
  }
  expect(rest, tmpl.bos);

  std::vector<Turn> turns;
  if (has_system && !tmpl.fold_system) {
    expect(rest, tmpl.system_prefix);
    const std::string end = tmpl.system_suffix + tmpl.user_prefix;
    const auto at = rest.find(end);
    if (at == std::string_view::npos) throw fail("unterminated system turn");
    turns.push_back({Role::kSystem, std::string(rest.substr(0, at))});
    rest.remove_prefix(at + tmpl.system_suffix.size());
  }

  Role role = Role::kUser;
  while (!rest.empty()) {
    const bool user = role == Role::kUser;
    expect(rest, user ? tmpl.user_prefix : tmpl.assistant_prefix);
    const std::string& suffix = user ? tmpl.user_suffix : tmpl.assistant_suffix;
    const std::string end = suffix + (user ? tmpl.assistant_prefix : tmpl.user_prefix);
    auto at = rest.find(end);
    if (at != std::string_view::npos && at + end.size() == rest.size() && user &&
        generation_cue) {
      at = std::string_view::npos;  // the trailing marker closes the last turn
    }
    std::string_view body;
    if (at == std::string_view::npos) {
      if (!rest.ends_with(suffix)) throw fail("unterminated final turn");
      body = rest.substr(0, rest.size() - suffix.size());
      rest = {};
    } else {
      body = rest.substr(0, at);
      rest.remove_prefix(at + suffix.size());
    }
    turns.push_back({role, std::string(body)});
    role = user ? Role::kAssistant : Role::kUser;
  }

  if (has_system && tmpl.fold_system) {
    if (turns.empty()) throw fail("no user turn to unfold system text from");
    std::string_view first = turns[0].content;
    expect(first, tmpl.system_prefix);
    const std::string end = tmpl.system_suffix + tmpl.fold_separator;
    const auto at = first.find(end);
    if (at == std::string_view::npos) throw fail("folded system text not found");
    Turn system{Role::kSystem, std::string(first.substr(0, at))};
    turns[0].content = std::string(first.substr(at + end.size()));
    turns.insert(turns.begin(), std::move(system));
  }
  return turns;
}

}  // namespace sway::prompts
