// Copyright (c) 2026 The xvmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the installed command-line binary end to end.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>

#include "gtest/gtest.h"
#include "test_util.h"

namespace {

using xvmtl::testing::ReadFile;
using xvmtl::testing::TempDir;
using xvmtl::testing::WriteFile;

struct Result {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

Result RunCli(const std::string& args) {
  const std::string cmd = std::string(XVMTL_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), int(buf.size()), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// A corpus and model small enough for a few seconds of training.
const std::string kTiny =
    " -q --set feature_dim=6 --set frame_widths=16,16,16,16,32"
    " --set l6_width=12 --set l7_width=12 --set batch_size=8"
    " --set crop_length=40 --set epochs=2 --set num_speakers=4"
    " --set utterances_per_speaker=6 --set min_frames=60 --set max_frames=80"
    " --set eval_num_speakers=3 --set eval_utterances_per_speaker=4"
    " --set lda_dim=2";

TEST(CliTest, GradCheckPasses) {
  const Result r = RunCli("gradcheck");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("network_alpha_0.3"), std::string::npos) << r.output;
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos) << r.output;
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(RunCli("").exit_code, 1);
  EXPECT_EQ(RunCli("frobnicate").exit_code, 1);
  EXPECT_EQ(RunCli("gradcheck --bogus").exit_code, 1);
  EXPECT_EQ(RunCli("--help").exit_code, 0);
  const Result r = RunCli("gen-data --out /tmp/x --set nonsense=1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("ERROR ConfigError"), std::string::npos) << r.output;
}

TEST(CliTest, EvaluateWithoutTargetsIsANamedError) {
  TempDir dir;
  WriteFile(dir / "trials.txt", "a b nontarget\na c nontarget\n");
  WriteFile(dir / "scores.txt", "a b 0.1\na c 0.2\n");
  const Result r = RunCli("evaluate --trials " + (dir / "trials.txt").string() +
                       " --scores " + (dir / "scores.txt").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("ERROR DataError"), std::string::npos) << r.output;
}

TEST(CliTest, PipelineIsDeterministic) {
  TempDir a, b;
  for (const TempDir* d : {&a, &b}) {
    const std::string root = d->path().string();
    ASSERT_EQ(RunCli("gen-data --out " + root + "/data" + kTiny).exit_code, 0);
    const Result train = RunCli("train --data " + root + "/data/train/manifest.csv --out " +
                             root + "/sys --alpha 0.3" + kTiny);
    ASSERT_EQ(train.exit_code, 0) << train.output;
    ASSERT_EQ(RunCli("extract --model " + root + "/sys/model.ckpt --data " + root +
                  "/data/train/manifest.csv --out " + root + "/train_emb.txt")
                  .exit_code, 0);
    ASSERT_EQ(RunCli("extract --model " + root + "/sys/model.ckpt --data " + root +
                  "/data/eval/manifest.csv --out " + root + "/eval_emb.txt")
                  .exit_code, 0);
    ASSERT_EQ(RunCli("train-backend --embeddings " + root + "/train_emb.txt --out " + root +
                  "/backend.bin" + kTiny).exit_code, 0);
    ASSERT_EQ(RunCli("score --backend " + root + "/backend.bin --embeddings " + root +
                  "/eval_emb.txt --trials " + root + "/data/eval/trials.txt --out " +
                  root + "/scores.txt" + kTiny).exit_code, 0);
    const Result eval = RunCli("evaluate --scores " + root + "/scores.txt --trials " + root +
                            "/data/eval/trials.txt --out " + root + "/metrics.csv" + kTiny);
    ASSERT_EQ(eval.exit_code, 0) << eval.output;
    EXPECT_NE(eval.output.find("EER%"), std::string::npos);
  }
  for (const char* f : {"data/train/manifest.csv", "data/train/spk000-utt0000.xvf",
                        "data/eval/trials.txt", "data/config.txt", "sys/model.ckpt",
                        "sys/train_log.csv", "train_emb.txt", "backend.bin",
                        "scores.txt", "metrics.csv"}) {
    const std::string x = ReadFile(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, ReadFile(b / f)) << f;
  }
  // 12 evaluation utterances give 66 trials.
  const std::string trials = ReadFile(a / "data/eval/trials.txt");
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 66);
}

TEST(CliTest, ResumeFinishesAnInterruptedRun) {
  TempDir dir;
  const std::string root = dir.path().string();
  ASSERT_EQ(RunCli("gen-data --out " + root + "/data" + kTiny).exit_code, 0);
  const std::string train = "train --data " + root + "/data/train/manifest.csv --alpha 0.3";
  ASSERT_EQ(RunCli(train + " --out " + root + "/full" + kTiny).exit_code, 0);
  ASSERT_EQ(RunCli(train + " --out " + root + "/part" + kTiny + " --set epochs=1").exit_code, 0);
  // The checkpoint records epochs = 1, so resuming continues only when the
  // stored run is unfinished; a completed run stays as it is.
  const Result again = RunCli(train + " --out " + root + "/part --resume" + kTiny);
  ASSERT_EQ(again.exit_code, 0) << again.output;
  const std::string log = ReadFile(dir / "part/train_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
}

TEST(CliTest, SweepRowsAreNamed) {
  TempDir dir;
  const Result r = RunCli("sweep --out " + dir.path().string() + " --alphas 0,0.3 --orders 4 --scorer cosine" + kTiny);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string table = ReadFile(dir / "sweep.txt");
  EXPECT_EQ(table.substr(0, 6), "system");
  EXPECT_NE(table.find("\nbaseline "), std::string::npos) << table;
  EXPECT_NE(table.find("\nMT-o4-a3 "), std::string::npos) << table;
  EXPECT_EQ(r.output, table);
}

}  // namespace
