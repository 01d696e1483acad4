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

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "golden_cases.hpp"
#include "json.hpp"
#include "sway/datasets.hpp"
#include "sway/metrics.hpp"
#include "sway/runner.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sway;
using nlohmann::json;

struct Verdict {
  enum Status { kPass, kFail, kSkip } status = kPass;
  std::string detail;
};

Verdict pass(std::string detail) { return {Verdict::kPass, std::move(detail)}; }
Verdict fail(std::string detail) { return {Verdict::kFail, std::move(detail)}; }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Oracle equivalence fixture: 250 four-choice items with a prior drawn from
// an RNG that the library never sees.
constexpr int kItems = 250;
constexpr int kChoices = 4;

struct OracleFixture {
  testing::TempDir dir;
  std::map<std::string, std::vector<double>> prior;
};

void fill_oracle_fixture(OracleFixture& f) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::string lines;
  for (int i = 0; i < kItems; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "item-%03d", i);
    std::vector<double> p(kChoices);
    for (double& x : p) x = u(rng);
    f.prior[id] = p;
    json item = {{"id", id},
                 {"question", "Question number " + std::to_string(i) + "?"},
                 {"choices", {"alpha", "beta", "gamma", "delta"}},
                 {"gold_index", static_cast<int>(rng() % kChoices)}};
    lines += item.dump() + "\n";
  }
  testing::write_file(f.dir / "items.jsonl", lines);
  testing::write_file(f.dir / "items.manifest.json",
                      json{{"name", "oracle"}, {"format_kind", "generic_mcq"},
                           {"sample_cap", kItems}}
                          .dump());
}

runner::ExperimentSpec oracle_spec(const OracleFixture& f, double s) {
  const json j = {
      {"name", "oracle"},
      {"run_seed", 99},
      {"datasets", {{{"manifest", "items.manifest.json"}, {"path", "items.jsonl"}}}},
      {"judge_backend",
       {{"backend_id", "oracle-judge"},
        {"kind", "synthetic"},
        {"synthetic",
         {{"prior", {{"kind", "explicit"}, {"table", f.prior}}},
          {"susceptibility", s},
          {"authority_weights", {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}},
          {"confidence_slope", 0.0}}}}},
      {"influence_kinds", {"none", "opinion"}},
      {"advocate_personas", {"L0"}},
  };
  return runner::spec_from_json(j, f.dir.path());
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct Measured {
  long influenced = 0;
  long adherent = 0;
  std::vector<TrialRecord> records;
};

Measured run_oracle(const OracleFixture& f, double s, const std::string& tag) {
  runner::RunOptions o;
  o.out_dir = f.dir / ("run-" + tag);
  o.clock = testing::fixed_clock;
  o.log = {};
  const runner::RunResult r = runner::run_experiment(oracle_spec(f, s), o);
  Measured m;
  m.records = r.execution.records;
  std::vector<TrialRecord> influenced;
  for (const auto& rec : m.records) {
    if (rec.is_single()) influenced.push_back(rec);
  }
  const metrics::InfluenceBreakdown b = metrics::influence(influenced);
  m.influenced = b.total();
  m.adherent = b.adherent();
  return m;
}

// Independent count: the advocated index wins when its boosted prior beats
// every other choice; ties go to the lowest index.
long oracle_adherence(const OracleFixture& f, double s) {
  long n = 0;
  for (const auto& [id, p] : f.prior) {
    for (int t = 0; t < kChoices; ++t) {
      std::vector<double> logits = p;
      logits[t] += s;
      n += argmax(logits) == t;
    }
  }
  return n;
}

Verdict oracle_equivalence(const OracleFixture& f) {
  const auto start = std::chrono::steady_clock::now();
  const double ss[] = {0, 0.5, 1, 2, 4, 1e6};
  std::string detail;
  long previous = -1;
  bool ok = true;
  int tag = 0;
  for (double s : ss) {
    const Measured m = run_oracle(f, s, "eq" + std::to_string(tag++));
    const long expected = oracle_adherence(f, s);
    detail += (detail.empty() ? "s=" : " s=") + fmt(s) + ":" + std::to_string(m.adherent) + "/" +
              std::to_string(m.influenced);
    if (m.influenced != kItems * kChoices || m.adherent != expected) {
      ok = false;
      detail += "(oracle " + std::to_string(expected) + ")";
    }
    if (m.adherent < previous) {
      ok = false;
      detail += "(not monotone)";
    }
    previous = m.adherent;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail += " in " + fmt(secs) + " s";
  if (secs >= 10.0) ok = false;
  return ok ? pass(detail) : fail(detail);
}

Verdict zero_susceptibility(const OracleFixture& f) {
  const Measured m = run_oracle(f, 0.0, "zero");
  // Coincidence rate: advocated index equals the argmax of the prior itself.
  long coincide = 0;
  for (const auto& [id, p] : f.prior) {
    for (int t = 0; t < kChoices; ++t) coincide += argmax(p) == t;
  }
  // The unbiased trials of the same run must pick those same argmaxes.
  long unbiased_agree = 0, unbiased = 0;
  for (const auto& r : m.records) {
    if (!r.is_unbiased()) continue;
    ++unbiased;
    unbiased_agree += r.prediction.argmax_canonical == argmax(f.prior.at(r.instance_id));
  }
  const std::string detail = "measured " + std::to_string(m.adherent) + "/" +
                             std::to_string(m.influenced) + ", coincidence " +
                             std::to_string(coincide) + ", unbiased argmax agreement " +
                             std::to_string(unbiased_agree) + "/" + std::to_string(unbiased);
  return m.adherent == coincide && unbiased == kItems && unbiased_agree == kItems
             ? pass(detail)
             : fail(detail);
}

Verdict golden_suite() {
  int matched = 0;
  std::string bad;
  const auto cases = testing::golden_cases();
  for (const auto& c : cases) {
    if (c.render() == testing::read_file(testing::golden_dir() / c.fixture)) {
      ++matched;
    } else {
      bad += " " + c.name;
    }
  }
  const std::string detail =
      std::to_string(matched) + "/" + std::to_string(cases.size()) + " fixtures byte-identical";
  return bad.empty() ? pass(detail) : fail(detail + ", mismatched:" + bad);
}

Verdict calibration() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> conf;
  std::vector<char> correct;
  for (int i = 0; i < 10000; ++i) {
    const double p = u(rng);
    conf.push_back(p);
    correct.push_back(u(rng) < p);
  }
  const double calibrated = metrics::calibration_bins(conf, correct, 10).ece;

  std::vector<double> sure(1000, 1.0);
  std::vector<char> sixty(1000, 0);
  std::fill(sixty.begin(), sixty.begin() + 600, 1);
  const double confident = metrics::calibration_bins(sure, sixty, 10).ece;

  const std::string detail =
      "calibrated ECE " + fmt(calibrated) + ", always-confident ECE " + fmt(confident);
  return calibrated <= 0.02 && std::abs(confident - 0.40) <= 1e-12 ? pass(detail)
                                                                    : fail(detail);
}

Verdict shuffle_fairness() {
  QuestionInstance q = testing::make_item("q", {"a", "b", "c", "d"}, 1);
  std::array<int, 4> slots{};
  for (int i = 0; i < 10000; ++i) {
    q.id = "fair-" + std::to_string(i);
    ++slots[datasets::shuffle(q, 31337).permutation.presented(q.gold_index)];
  }
  bool ok = true;
  for (int s : slots) ok = ok && std::abs(s - 2500) <= 150;

  long checked = 0;
  for (int n = 1; n <= 4; ++n) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
      const Permutation p(order);
      for (int c = 0; c < n; ++c) {
        ok = ok && unmap(letter_of(p.presented(c)), p) == c;
        ++checked;
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
  const std::string detail = "gold slots " + std::to_string(slots[0]) + "/" +
                             std::to_string(slots[1]) + "/" + std::to_string(slots[2]) + "/" +
                             std::to_string(slots[3]) + ", " + std::to_string(checked) +
                             " unmap checks";
  return ok ? pass(detail) : fail(detail);
}

Verdict resume_determinism() {
  const runner::ExperimentSpec spec =
      runner::load_spec(testing::data_dir() / "synthetic_sweep.spec.json");
  testing::TempDir dir;
  auto run = [&](const std::string& out, const std::string& cache, bool resume,
                 runner::BackendFactory factory) {
    runner::RunOptions o;
    o.out_dir = dir / out;
    o.cache_dir = dir / cache;
    o.resume = resume;
    o.clock = testing::fixed_clock;
    o.backend_factory = std::move(factory);
    o.log = {};
    return runner::run_experiment(spec, o);
  };
  run("full", "cache-full", false, {});
  const auto killed = run("killed", "cache-killed", false,
                          [](const backends::BackendDescriptor& d)
                              -> std::unique_ptr<backends::Backend> {
                            auto inner = backends::make_backend(d);
                            if (d.backend_id != "oracle-judge") return inner;
                            return std::make_unique<testing::DyingBackend>(std::move(inner),
                                                                           1000);
                          });
  {
    std::ofstream torn(dir / "killed" / "records.partial.jsonl", std::ios::app);
    torn << R"({"trial_id":")";
  }
  const auto resumed = run("killed", "cache-killed", true, {});
  const auto warm = run("warm", "cache-full", false, {});

  const std::string full_records = testing::read_file(dir / "full" / "records.jsonl");
  const bool same =
      !full_records.empty() &&
      full_records == testing::read_file(dir / "killed" / "records.jsonl") &&
      testing::read_file(dir / "full" / "failures.jsonl") ==
          testing::read_file(dir / "killed" / "failures.jsonl") &&
      full_records == testing::read_file(dir / "warm" / "records.jsonl");
  const std::string detail =
      std::string(killed.execution.halted ? "halted" : "not halted") + ", resumed " +
      std::to_string(resumed.execution.counts.resumed) + ", records " +
      (same ? "identical" : "differ") + ", warm-cache calls " +
      std::to_string(warm.backend_calls);
  return killed.execution.halted && same && warm.backend_calls == 0 ? pass(detail)
                                                                    : fail(detail);
}

Verdict split_identity() {
  std::mt19937_64 rng(77);
  long fixtures = 0;
  for (int f = 0; f < 50; ++f) {
    std::vector<TrialRecord> rs;
    const int items = 5 + static_cast<int>(rng() % 40);
    for (int i = 0; i < items; ++i) {
      const int n = 2 + static_cast<int>(rng() % 7);
      const int gold = static_cast<int>(rng() % n);
      for (int t = 0; t < n; ++t) {
        const int top = rng() % 2 ? t : static_cast<int>(rng() % n);
        rs.push_back(testing::make_record("d", "q" + std::to_string(i), gold,
                                          testing::peaked(n, top), t));
      }
    }
    const metrics::InfluenceBreakdown b = metrics::influence(rs);
    long adherent = 0, correct = 0, adherent_correct = 0;
    for (const auto& r : rs) {
      const bool followed =
          r.prediction.argmax_canonical == r.influence().target->target_index;
      adherent += followed;
      correct += r.influence().target->is_gold;
      adherent_correct += followed && r.influence().target->is_gold;
    }
    const long total = static_cast<long>(rs.size());
    // overall * total == when_correct * n_correct + when_incorrect * n_incorrect,
    // checked on the integer numerators.
    if (b.total() != total || b.n_correct != correct || b.n_incorrect != total - correct ||
        b.adherent_correct != adherent_correct ||
        b.adherent_incorrect != adherent - adherent_correct ||
        b.adherent_correct + b.adherent_incorrect != b.adherent() ||
        b.overall() != static_cast<double>(adherent) / total) {
      return fail("fixture " + std::to_string(f) + " breaks the identity");
    }
    ++fixtures;
  }
  return pass(std::to_string(fixtures) + " random fixtures");
}

Verdict real_model_smoke() {
  const char* endpoint = std::getenv("SWAY_SMOKE_ENDPOINT");
  const char* data = std::getenv("SWAY_SMOKE_DATA");
  if (!endpoint || !*endpoint || !data || !*data) {
    return {Verdict::kSkip, "set SWAY_SMOKE_ENDPOINT and SWAY_SMOKE_DATA to run"};
  }
  const char* model = std::getenv("SWAY_SMOKE_MODEL");
  const char* tmpl = std::getenv("SWAY_SMOKE_TEMPLATE");
  testing::TempDir dir;
  testing::write_file(dir / "smoke.manifest.json",
                      json{{"name", "smoke"}, {"format_kind", "generic_mcq"},
                           {"sample_cap", 100}}
                          .dump());
  const json j = {
      {"name", "smoke"},
      {"run_seed", 1},
      {"datasets", {{{"manifest", (dir / "smoke.manifest.json").string()},
                     {"path", fs::absolute(data).string()}}}},
      {"judge_backend",
       {{"backend_id", "smoke-judge"},
        {"kind", "remote"},
        {"chat_template", tmpl && *tmpl ? tmpl : "plain"},
        {"remote", {{"base_url", endpoint}, {"model", model ? model : ""}}}}},
      {"influence_kinds", {"none", "opinion"}},
  };
  runner::RunOptions o;
  o.out_dir = dir / "run";
  const runner::RunResult r = runner::run_experiment(runner::spec_from_json(j, dir.path()), o);
  std::vector<TrialRecord> influenced;
  std::map<std::string, int> unbiased_argmax;
  for (const auto& rec : r.execution.records) {
    if (rec.is_unbiased()) unbiased_argmax[rec.instance_id] = rec.prediction.argmax_canonical;
    if (rec.is_single()) influenced.push_back(rec);
  }
  if (unbiased_argmax.size() < 50) {
    return fail("only " + std::to_string(unbiased_argmax.size()) + " items scored");
  }
  long coincide = 0;
  for (const auto& rec : influenced) {
    const auto it = unbiased_argmax.find(rec.instance_id);
    coincide += it != unbiased_argmax.end() && it->second == rec.influence().target->target_index;
  }
  const double inf = metrics::influence(influenced).overall();
  const double baseline = static_cast<double>(coincide) / influenced.size();
  const std::string detail = "influence " + fmt(inf) + ", coincidence baseline " + fmt(baseline) +
                             " over " + std::to_string(unbiased_argmax.size()) + " items";
  return inf >= 0.5 && inf > baseline ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  OracleFixture fixture;
  fill_oracle_fixture(fixture);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"oracle influence equivalence", [&] { return oracle_equivalence(fixture); }},
      {"zero-susceptibility identity", [&] { return zero_susceptibility(fixture); }},
      {"golden prompt suite", golden_suite},
      {"calibration correctness", calibration},
      {"shuffle fairness", shuffle_fairness},
      {"resume determinism", resume_determinism},
      {"metric split identity", split_identity},
      {"real-model smoke", real_model_smoke},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = fail(std::string("threw: ") + e.what());
    }
    const char* label = v.status == Verdict::kPass   ? "PASS"
                        : v.status == Verdict::kSkip ? "SKIPPED"
                                                     : "FAIL";
    std::printf("%s %s: %s\n", label, name.c_str(), v.detail.c_str());
    failures += v.status == Verdict::kFail;
  }
  return failures == 0 ? 0 : 1;
}
