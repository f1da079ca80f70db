// Copyright 2026 The assignkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the assignkit binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "assignkit/datio.hpp"

namespace assignkit {
namespace {

namespace fs = std::filesystem;

const std::string kCli = ASSIGNKIT_CLI_PATH;
const std::string kSamples = ASSIGNKIT_SAMPLES_DIR;

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("assignkit_cli_" + std::string(::testing::UnitTest::GetInstance()
                                               ->current_test_info()
                                               ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kAnn = kSamples + "/tiny_coco.json";
const std::string kPred = kSamples + "/tiny_results.json";

TEST_F(CliTest, AssignAnchorsFirstStage) {
  const auto r = RunCli("assign --ann " + kAnn + " --anchors --strategy iou --tau 0.7 --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = Slurp(dir_ / "assign_report.csv");
  EXPECT_NE(csv.find("strategy,bucket,num_gts,positives,mean,unmatched"), std::string::npos);
  EXPECT_NE(csv.find("tau=0.7"), std::string::npos) << csv;
  EXPECT_NE(csv.find("predictions=anchors"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "hist_iou.svg"));
}

TEST_F(CliTest, AssignLoadedPredictionsSecondStage) {
  const auto r = RunCli("assign --ann " + kAnn + " --pred " + kPred +
                     " --strategy iou-balanced --tau 0.6 --balance-k 4 --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = Slurp(dir_ / "assign_report.csv");
  EXPECT_NE(csv.find("balance_k=4"), std::string::npos) << csv;
  EXPECT_NE(csv.find("gamma=0.25"), std::string::npos) << csv;
}

TEST_F(CliTest, AssignIsByteIdenticalForSameSeed) {
  const std::string args = "assign --ann " + kAnn +
                           " --strategy hungarian,iou,bmatch --b 2 --dup 3 --fp-rate 0.5"
                           " --seed 11 --out ";
  ASSERT_EQ(RunCli(args + Path("a")).code, 0);
  ASSERT_EQ(RunCli(args + Path("b")).code, 0);
  EXPECT_EQ(Slurp(dir_ / "a" / "assign_report.csv"), Slurp(dir_ / "b" / "assign_report.csv"));
  EXPECT_NE(Slurp(dir_ / "a" / "assign_report.csv").find("seed=11"), std::string::npos);
}

TEST_F(CliTest, AssignEnvironmentOverrides) {
  const auto r = RunCli("assign --ann " + kAnn + " --strategy iou",
                     "ASSIGNKIT_TAU=0.45 ASSIGNKIT_OUT=" + dir_.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(Slurp(dir_ / "assign_report.csv").find("tau=0.45"), std::string::npos);
}

TEST_F(CliTest, AssignSweep) {
  const auto r = RunCli("assign --ann " + kAnn + " --proposals --strategy iou --sweep-k 1,4,inf --out " +
                     dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = Slurp(dir_ / "assign_report.csv");
  for (const char* label : {"iou-balanced-k1,", "iou-balanced-k4,", "iou-balanced-kinf,"}) {
    EXPECT_NE(csv.find(label), std::string::npos) << label;
  }
}

TEST_F(CliTest, FlagErrorsExitTwo) {
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --strategy bmatch --b 0").code, 2);
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --tau 1.5").code, 2);
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --strategy magic").code, 2);
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --balance-k 0").code, 2);
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --anchors --pred " + kPred).code, 2);
  EXPECT_EQ(RunCli("assign").code, 2);
  EXPECT_EQ(RunCli("frobnicate").code, 2);
  EXPECT_EQ(RunCli("nms --pred " + kPred + " --out x.json --iou-thresh 0").code, 2);
  EXPECT_EQ(RunCli("bench --runs 3").code, 2);
  EXPECT_EQ(RunCli("synth --out x.json").code, 2);
}

TEST_F(CliTest, IoAndSchemaErrorsExitOne) {
  EXPECT_EQ(RunCli("assign --ann /nonexistent.json --out " + dir_.string()).code, 1);
  std::ofstream(Path("bad.json")) << "{\"images\": [";
  EXPECT_EQ(RunCli("assign --ann " + Path("bad.json") + " --out " + dir_.string()).code, 1);
  std::ofstream(Path("schema.json")) << "{\"images\": []}";
  EXPECT_EQ(RunCli("assign --ann " + Path("schema.json") + " --out " + dir_.string()).code, 1);
  EXPECT_EQ(RunCli("nms --pred /nonexistent.json --out " + Path("o.json")).code, 1);
  // Infeasible b-matching is a data error, not a flag error.
  EXPECT_EQ(RunCli("assign --ann " + kAnn + " --pred " + kPred + " --strategy bmatch --b 5 --out " +
                dir_.string())
                .code,
            1);
}

TEST_F(CliTest, NmsHalvesDuplicatedFixture) {
  std::vector<CocoResult> dup;
  for (int i = 0; i < 20; ++i) {
    const Box b = Box::FromXYWH(30.0 * i, 10, 20, 20);
    dup.push_back({1, 1, b, 0.9});
    dup.push_back({1, 1, b, 0.5});
  }
  WriteResults(Path("dup.json"), dup);
  const auto r = RunCli("nms --pred " + Path("dup.json") + " --out " + Path("out.json") +
                     " --iou-thresh 0.7");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("kept=20"), std::string::npos) << r.out;
  const auto kept = LoadResults(Path("out.json"));
  ASSERT_EQ(kept.size(), 20u);
  for (const auto& k : kept) EXPECT_EQ(k.score, 0.9);
}

TEST_F(CliTest, NmsEmptyInput) {
  std::ofstream(Path("empty.json")) << "[]";
  const auto r = RunCli("nms --pred " + Path("empty.json") + " --out " + Path("out.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(LoadResults(Path("out.json")).empty());
}

TEST_F(CliTest, NmsTopkCapsInput) {
  std::vector<CocoResult> many;
  for (int i = 0; i < 12000; ++i) {
    many.push_back({1, 1, Box::FromXYWH((i % 120) * 10.0, (i / 120) * 10.0, 5, 5),
                    (i % 997) / 997.0});
  }
  WriteResults(Path("many.json"), many);
  const auto r = RunCli("nms --pred " + Path("many.json") + " --out " + Path("out.json") +
                     " --class-agnostic --iou-thresh 0.7");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("prefiltered=2000"), std::string::npos) << r.out;
  EXPECT_EQ(LoadResults(Path("out.json")).size(), 10000u);
}

TEST_F(CliTest, MatchCsv) {
  std::ofstream(Path("cost.csv")) << "4,1,3\n2,0,5\n3,2,2\n";
  auto r = RunCli("match --cost " + Path("cost.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"labels\":[1,0,2]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"total_cost\":5.0"), std::string::npos) << r.out;
  std::ofstream(Path("col.csv")) << "3\n1\n2\n5\n";
  r = RunCli("match --cost " + Path("col.csv") + " --b 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"labels\":[-1,0,0,-1]"), std::string::npos) << r.out;
  std::ofstream(Path("ragged.csv")) << "1,2\n3\n";
  EXPECT_EQ(RunCli("match --cost " + Path("ragged.csv")).code, 1);
}

TEST_F(CliTest, BenchRows) {
  const auto r = RunCli("bench --sizes 100,300 --ops nms,hungarian --runs 20 --gts 10");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("op,", 0) != 0) ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(CliTest, SynthModes) {
  auto r = RunCli("synth --random-scenes 3 --gts-per-image 5 --seed 4 --out " + Path("scenes.json"));
  ASSERT_EQ(r.code, 0);
  const auto ds = LoadCocoAnnotations(Path("scenes.json"));
  EXPECT_EQ(ds.scenes.size(), 3u);
  r = RunCli("synth --ann " + kAnn + " --dup 2 --seed 4 --out " + Path("preds.json"));
  ASSERT_EQ(r.code, 0);
  // Two copies of each of the six non-crowd objects.
  EXPECT_EQ(LoadResults(Path("preds.json")).size(), 12u);
  ASSERT_EQ(RunCli("synth --ann " + kAnn + " --dup 2 --seed 4 --out " + Path("again.json")).code, 0);
  EXPECT_EQ(Slurp(dir_ / "preds.json"), Slurp(dir_ / "again.json"));
}

}  // namespace
}  // namespace assignkit
