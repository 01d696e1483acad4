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

#include "sway/report.hpp"

#include <fstream>
#include <map>
#include <set>

#include "sway/metrics.hpp"
#include "sway/serialize.hpp"

namespace sway::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kNames[] = {
    "unbiased_perf",  "influence_overview", "influence_by_correctness",
    "shift_scatter",  "calibration",        "persona_heatmap",
    "mitigation_table", "confidence_curve", "multi_influence_curve",
};

std::string persona_label(const Persona& p) {
  std::string out(to_string(p.level));
  if (p.field_tag) out += ":" + *p.field_tag;
  return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json confidence_of(const TrialRecord& r) {
  const auto& c = r.influence().confidence;
  return c ? json(c->percent) : json(nullptr);
}

std::vector<json> mitigation_cells(const prompts::MitigationConfig& m) {
  return {std::string(prompts::to_string(m.system_kind)), m.cot_prefix, m.few_shot_k};
}

// Condition of a single-influence record, without the dataset.
std::vector<json> condition_cells(const TrialRecord& r) {
  std::vector<json> cells = {std::string(to_string(r.kind())), persona_label(r.judge_persona),
                             persona_label(r.influence().advocate_persona)};
  for (json& c : mitigation_cells(r.mitigation)) cells.push_back(std::move(c));
  cells.push_back(confidence_of(r));
  return cells;
}

const std::vector<std::string> kConditionColumns = {
    "kind", "judge_persona", "advocate_persona", "system", "cot", "few_shot", "confidence"};

// Ordered grouping on a cell vector.
template <class V>
class Groups {
 public:
  V& at(const std::vector<json>& cells) {
    auto [it, inserted] = groups_.try_emplace(json(cells).dump());
    if (inserted) it->second.first = cells;
    return it->second.second;
  }
  template <class F>
  void each(F&& f) const {
    for (const auto& [key, g] : groups_) f(g.first, g.second);
  }
  bool empty() const { return groups_.empty(); }

 private:
  std::map<std::string, std::pair<std::vector<json>, V>> groups_;
};

std::vector<json> cells_of(std::vector<json> a, const std::vector<json>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::string> concat_names(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

[[noreturn]] void missing_axis(const std::string& report, const std::string& axis) {
  throw Error(ErrorKind::kInconsistentRecords,
              report + " needs records with a " + axis + " axis; none found");
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  std::string text = v.is_string() ? v.get<std::string>() : v.dump();
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

// ---------------------------------------------------------------------------

Table unbiased_perf(std::span<const TrialRecord> records) {
  Groups<metrics::Tally> groups;
  for (const TrialRecord& r : records) {
    if (!r.is_unbiased()) continue;
    std::vector<json> cells = {r.dataset, persona_label(r.judge_persona)};
    cells = cells_of(cells, mitigation_cells(r.mitigation));
    metrics::Tally& t = groups.at(cells);
    t.hits += r.correct();
    ++t.total;
  }
  if (groups.empty()) missing_axis("unbiased_perf", "unbiased (kind none)");
  Table t;
  t.columns = {"dataset", "judge_persona", "system", "cot", "few_shot", "n", "correct",
               "accuracy"};
  groups.each([&](const std::vector<json>& cells, const metrics::Tally& tally) {
    t.rows.push_back(cells_of(cells, {tally.total, tally.hits, tally.fraction()}));
  });
  return t;
}

Groups<metrics::InfluenceBreakdown> influence_groups(std::span<const TrialRecord> records,
                                                     const std::string& report) {
  Groups<metrics::InfluenceBreakdown> groups;
  for (const TrialRecord& r : records) {
    if (!r.is_single()) continue;
    groups.at(cells_of({r.dataset}, condition_cells(r))).add(r);
  }
  if (groups.empty()) missing_axis(report, "single-influence");
  return groups;
}

Table influence_overview(std::span<const TrialRecord> records) {
  Table t;
  t.columns = concat_names({"dataset"}, kConditionColumns);
  t.columns = concat_names(t.columns, {"n", "adherent", "influence"});
  influence_groups(records, "influence_overview")
      .each([&](const std::vector<json>& cells, const metrics::InfluenceBreakdown& b) {
        t.rows.push_back(cells_of(cells, {b.total(), b.adherent(), b.overall()}));
      });
  return t;
}

Table influence_by_correctness(std::span<const TrialRecord> records) {
  Table t;
  t.columns = concat_names({"dataset"}, kConditionColumns);
  t.columns = concat_names(t.columns, {"n_correct", "when_correct", "n_incorrect", "when_incorrect",
                                 "overall"});
  influence_groups(records, "influence_by_correctness")
      .each([&](const std::vector<json>& cells, const metrics::InfluenceBreakdown& b) {
        t.rows.push_back(cells_of(cells, {b.n_correct, opt(b.when_correct()), b.n_incorrect,
                                        opt(b.when_incorrect()), b.overall()}));
      });
  return t;
}

Table shift_scatter(std::span<const TrialRecord> records) {
  const auto pairs = metrics::pair_shifts(records);
  if (pairs.empty()) missing_axis("shift_scatter", "paired unbiased/influenced");
  Table t;
  t.columns = concat_names({"dataset", "instance_id"}, kConditionColumns);
  t.columns = concat_names(t.columns, {"target_index", "is_gold", "p_unbiased", "p_biased", "shift"});
  for (const auto& p : pairs) {
    const TrialRecord& r = *p.influenced;
    std::vector<json> row = cells_of({r.dataset, r.instance_id}, condition_cells(r));
    row = cells_of(row, {r.influence().target->target_index, p.point.is_gold_advocacy,
                       p.point.p_unbiased, p.point.p_biased, p.point.shift()});
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table calibration(std::span<const TrialRecord> records) {
  std::map<std::pair<std::string, std::string>, std::vector<TrialRecord>> groups;
  for (const TrialRecord& r : records) {
    if (r.multi_k) continue;
    const std::string kind(to_string(r.kind()));
    groups[{r.dataset, kind}].push_back(r);
    groups[{"*", kind}].push_back(r);
  }
  if (groups.empty()) missing_axis("calibration", "single-condition");
  Table t;
  t.columns = {"dataset", "kind", "bin", "lower", "upper", "mean_confidence", "accuracy",
               "count", "ece"};
  for (const auto& [key, rs] : groups) {
    const metrics::ReliabilityCurve curve = metrics::calibration_bins(rs, 10);
    t.summary["ece"][key.first][key.second] = curve.ece;
    for (std::size_t b = 0; b < curve.bins.size(); ++b) {
      const auto& bin = curve.bins[b];
      const bool empty = bin.count == 0;
      t.rows.push_back({key.first, key.second, static_cast<int>(b), bin.lower, bin.upper,
                        empty ? json(nullptr) : json(bin.mean_confidence),
                        empty ? json(nullptr) : json(bin.empirical_accuracy), bin.count,
                        curve.ece});
    }
  }
  return t;
}

Table persona_heatmap(std::span<const TrialRecord> records) {
  // One matrix per (kind, mitigation, confidence) condition.
  Groups<std::vector<TrialRecord>> conditions;
  std::set<std::string> datasets;
  for (const TrialRecord& r : records) {
    if (!r.is_single()) continue;
    std::vector<json> cells = {std::string(to_string(r.kind()))};
    cells = cells_of(cells, mitigation_cells(r.mitigation));
    cells.push_back(confidence_of(r));
    conditions.at(cells).push_back(r);
    datasets.insert(r.dataset);
  }
  if (conditions.empty()) missing_axis("persona_heatmap", "single-influence");
  Table t;
  t.columns = {"kind", "system", "cot", "few_shot", "confidence", "judge_persona",
               "advocate_persona", "dataset_mean", "pooled"};
  for (const std::string& d : datasets) t.columns.push_back("influence[" + d + "]");
  bool swept = false;
  t.summary["missing_cells"] = json::array();
  conditions.each([&](const std::vector<json>& cells, const std::vector<TrialRecord>& rs) {
    const metrics::PersonaMatrix m = metrics::persona_matrix(rs);
    swept = swept || m.judge_levels.size() > 1 || m.advocate_levels.size() > 1;
    for (PersonaLevel j : m.judge_levels) {
      for (PersonaLevel a : m.advocate_levels) {
        const metrics::Cell cell{j, a};
        std::vector<json> row = cells;
        row.push_back(std::string(to_string(j)));
        row.push_back(std::string(to_string(a)));
        auto mean = m.dataset_mean.find(cell);
        auto pooled = m.pooled.find(cell);
        row.push_back(mean == m.dataset_mean.end() ? json(nullptr) : json(mean->second));
        row.push_back(pooled == m.pooled.end() ? json(nullptr) : json(pooled->second));
        for (const std::string& d : datasets) {
          auto ds = m.per_dataset.find(d);
          const metrics::InfluenceBreakdown* b = nullptr;
          if (ds != m.per_dataset.end()) {
            auto it = ds->second.find(cell);
            if (it != ds->second.end()) b = &it->second;
          }
          row.push_back(b ? json(b->overall()) : json(nullptr));
        }
        t.rows.push_back(std::move(row));
      }
    }
    for (const auto& [d, cell] : m.missing) {
      t.summary["missing_cells"].push_back(
          {{"dataset", d}, {"judge", to_string(cell.first)}, {"advocate", to_string(cell.second)}});
    }
  });
  if (!swept) {
    throw Error(ErrorKind::kInconsistentRecords,
                "persona_heatmap needs a persona sweep: the judge persona and advocate "
                "persona axes each hold a single level");
  }
  return t;
}

Table mitigation_table(std::span<const TrialRecord> records) {
  const auto rows = metrics::mitigation_table(records);
  if (rows.empty()) missing_axis("mitigation_table", "single-influence");
  Table t;
  t.columns = {"system", "cot", "few_shot", "influence_with_explanation",
               "influence_without_explanation", "n_with_explanation", "n_without_explanation"};
  for (const auto& row : rows) {
    auto value = [](const metrics::InfluenceBreakdown& b) {
      return b.total() ? json(b.overall()) : json(nullptr);
    };
    t.rows.push_back(cells_of(mitigation_cells(row.mitigation),
                            {value(row.with_explanation), value(row.without_explanation),
                             row.with_explanation.total(), row.without_explanation.total()}));
  }
  return t;
}

Table confidence_curve(std::span<const TrialRecord> records) {
  Groups<metrics::InfluenceBreakdown> groups;
  for (const TrialRecord& r : records) {
    if (!r.is_single() || !r.influence().confidence) continue;
    groups.at({r.dataset, std::string(to_string(r.kind())), r.influence().confidence->percent})
        .add(r);
  }
  if (groups.empty()) missing_axis("confidence_curve", "confidence");
  Table t;
  t.columns = {"dataset", "kind", "confidence", "n", "influence", "when_correct",
               "when_incorrect"};
  groups.each([&](const std::vector<json>& cells, const metrics::InfluenceBreakdown& b) {
    t.rows.push_back(cells_of(cells, {b.total(), b.overall(), opt(b.when_correct()),
                                    opt(b.when_incorrect())}));
  });
  return t;
}

Table multi_influence_curve(std::span<const TrialRecord> records) {
  std::map<std::string, std::vector<TrialRecord>> by_dataset;
  bool any_multi = false;
  for (const TrialRecord& r : records) {
    if (r.multi_k) any_multi = true;
    if (r.multi_k || r.is_unbiased()) by_dataset[r.dataset].push_back(r);
  }
  if (!any_multi) missing_axis("multi_influence_curve", "multi-influence");
  Table t;
  t.columns = {"dataset", "k", "n", "correct", "accuracy"};
  for (const auto& [dataset, rs] : by_dataset) {
    for (const auto& [k, tally] : metrics::multi_influence_accuracy(rs)) {
      t.rows.push_back({dataset, k, tally.total, tally.hits, tally.fraction()});
    }
  }
  return t;
}

}  // namespace

std::string_view to_string(ReportKind kind) { return kNames[static_cast<int>(kind)]; }

ReportKind report_kind_from_string(std::string_view text) {
  for (ReportKind k : kAllReportKinds) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorKind::kConfig, "unknown report kind '" + std::string(text) + "'");
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += csv_cell(columns[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

json Table::to_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < columns.size() && i < row.size(); ++i) obj[columns[i]] = row[i];
    rows_json.push_back(std::move(obj));
  }
  return {{"kind", kind}, {"columns", columns}, {"rows", rows_json}, {"summary", summary}};
}

Table build(ReportKind kind, std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorKind::kUndefinedMetric, "no records to report on");
  Table t;
  switch (kind) {
    case ReportKind::kUnbiasedPerf: t = unbiased_perf(records); break;
    case ReportKind::kInfluenceOverview: t = influence_overview(records); break;
    case ReportKind::kInfluenceByCorrectness: t = influence_by_correctness(records); break;
    case ReportKind::kShiftScatter: t = shift_scatter(records); break;
    case ReportKind::kCalibration: t = calibration(records); break;
    case ReportKind::kPersonaHeatmap: t = persona_heatmap(records); break;
    case ReportKind::kMitigationTable: t = mitigation_table(records); break;
    case ReportKind::kConfidenceCurve: t = confidence_curve(records); break;
    case ReportKind::kMultiInfluenceCurve: t = multi_influence_curve(records); break;
  }
  t.kind = std::string(to_string(kind));
  return t;
}

std::vector<TrialRecord> load_run(const fs::path& dir) {
  const fs::path path = dir / "records.jsonl";
  if (!fs::exists(path)) {
    const bool partial = fs::exists(dir / "records.partial.jsonl");
    throw Error(ErrorKind::kInconsistentRecords,
                partial ? "run in " + dir.string() + " is unfinished; resume it first"
                        : "no records.jsonl in " + dir.string());
  }
  std::vector<TrialRecord> records = read_records(path);
  std::set<std::string> ids;
  for (const TrialRecord& r : records) {
    if (!ids.insert(r.trial_id).second) {
      throw Error(ErrorKind::kInconsistentRecords, "duplicate trial id " + r.trial_id);
    }
  }
  return records;
}

fs::path write(const Table& table, const fs::path& out) {
  fs::path json_path = out;
  json_path.replace_extension(".json");
  if (json_path == out) json_path += ".json";
  std::error_code ec;
  if (out.has_parent_path()) fs::create_directories(out.parent_path(), ec);
  auto put = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !f.flush()) throw Error(ErrorKind::kIo, "cannot write " + p.string());
  };
  put(out, table.to_csv());
  put(json_path, table.to_json().dump(2) + "\n");
  return json_path;
}

}  // namespace sway::report
