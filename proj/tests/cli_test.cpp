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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <regex>
#include <string>

#include "test_support.hpp"

namespace sway {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome sway_cli(const std::string& args) {
  const std::string cmd = "SWAY_CLOCK=2026-01-31T12:00:00Z '" SWAY_CLI_PATH "' " + args + " 2>/dev/null";
  Outcome r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

long backend_calls(const std::string& out) {
  std::smatch m;
  if (!std::regex_search(out, m, std::regex(R"((\d+) backend calls)"))) return -1;
  return std::stol(m[1]);
}

const std::filesystem::path kSpec = testing::data_dir() / "synthetic_sweep.spec.json";

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(sway_cli("").code, 2);
  EXPECT_EQ(sway_cli("frobnicate").code, 2);
  EXPECT_EQ(sway_cli("run " + q(kSpec)).code, 2);
  EXPECT_EQ(sway_cli("run " + q(kSpec) + " /tmp/x --max-trials 0").code, 2);
  EXPECT_EQ(sway_cli("--help").code, 0);
  EXPECT_FALSE(sway_cli("--version").out.empty());
}

TEST(Cli, Ingest) {
  testing::TempDir dir;
  const auto data = testing::data_dir();
  const Outcome ok = sway_cli("ingest " + q(data / "commonsense_small.manifest.json") + " " +
                              q(data / "commonsense_small.jsonl") + " " + q(dir / "c.jsonl"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("\"skipped_too_many_choices\":1"), std::string::npos) << ok.out;
  EXPECT_EQ(testing::read_file(dir / "c.jsonl").size() > 0, true);

  testing::write_file(dir / "nogold.jsonl",
                      R"({"id": "x", "question": "q?", "choices": ["a", "b"]})" "\n");
  EXPECT_EQ(sway_cli("ingest " + q(data / "commonsense_small.manifest.json") + " " +
                     q(dir / "nogold.jsonl") + " " + q(dir / "o.jsonl"))
                .code,
            2);
}

TEST(Cli, RunResumeAndReport) {
  testing::TempDir dir;
  const std::string run = "run " + q(kSpec) + " " + q(dir / "run");
  const Outcome first = sway_cli(run + " --max-trials 10");
  ASSERT_EQ(first.code, 0) << first.out;
  EXPECT_GT(backend_calls(first.out), 0);
  const std::string records = testing::read_file(dir / "run" / "records.jsonl");
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 10);

  EXPECT_EQ(sway_cli(run + " --max-trials 10").code, 2);
  const Outcome again = sway_cli(run + " --max-trials 10 --resume");
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(backend_calls(again.out), 0);
  EXPECT_EQ(testing::read_file(dir / "run" / "records.jsonl"), records);

  EXPECT_EQ(sway_cli("report " + q(dir / "run") + " unbiased_perf " + q(dir / "u.csv")).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "u.json"));
  EXPECT_EQ(sway_cli("report " + q(dir / "run") + " nonsense " + q(dir / "n.csv")).code, 2);
  testing::write_file(dir / "empty" / "records.jsonl", "");
  EXPECT_EQ(sway_cli("report " + q(dir / "empty") + " calibration " + q(dir / "c.csv")).code, 4);
}

TEST(Cli, UnreachableBackendExitsThree) {
  testing::TempDir dir;
  testing::write_file(dir / "down.json", R"({"backend_id": "down", "kind": "remote",
    "remote": {"base_url": "http://127.0.0.1:9", "max_attempts": 1, "backoff_initial_ms": 1}})");
  EXPECT_EQ(sway_cli("run " + q(kSpec) + " " + q(dir / "run") + " --max-trials 3 " +
                     "--backend-override " + q(dir / "down.json"))
                .code,
            3);
}

TEST(Cli, MissingSpecIsConfigError) {
  testing::TempDir dir;
  testing::write_file(dir / "spec.json", R"({"name": "x"})");
  EXPECT_EQ(sway_cli("run " + q(dir / "spec.json") + " " + q(dir / "run")).code, 2);
}

}  // namespace
}  // namespace sway
