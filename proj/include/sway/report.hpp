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

// Tabular reports over a records directory, written as CSV plus a JSON twin.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sway/records.hpp"

namespace sway::report {

enum class ReportKind {
  kUnbiasedPerf,
  kInfluenceOverview,
  kInfluenceByCorrectness,
  kShiftScatter,
  kCalibration,
  kPersonaHeatmap,
  kMitigationTable,
  kConfidenceCurve,
  kMultiInfluenceCurve,
};

inline constexpr ReportKind kAllReportKinds[] = {
    ReportKind::kUnbiasedPerf,     ReportKind::kInfluenceOverview,
    ReportKind::kInfluenceByCorrectness, ReportKind::kShiftScatter,
    ReportKind::kCalibration,      ReportKind::kPersonaHeatmap,
    ReportKind::kMitigationTable,  ReportKind::kConfidenceCurve,
    ReportKind::kMultiInfluenceCurve,
};

std::string_view to_string(ReportKind kind);
/// Throws kConfig for unknown names.
ReportKind report_kind_from_string(std::string_view text);

struct Table {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;  // null cells render empty
  nlohmann::json summary = nlohmann::json::object();

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Raises kUndefinedMetric on empty input and kInconsistentRecords when the
/// records lack the axis a report needs (the message names it).
Table build(ReportKind kind, std::span<const TrialRecord> records);

/// Reads <dir>/records.jsonl, rejecting duplicate trial ids.
std::vector<TrialRecord> load_run(const std::filesystem::path& dir);

/// Writes the CSV to `out` and the JSON twin next to it (".json" extension).
/// Returns the JSON path.
std::filesystem::path write(const Table& table, const std::filesystem::path& out);

}  // namespace sway::report
