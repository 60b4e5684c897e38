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

#include "xvmtl/run_config.h"

#include <set>

#include "gtest/gtest.h"
#include "xvmtl/errors.h"

namespace xvmtl {
namespace {

std::string ErrorOf(const std::string& text) {
  try {
    ParseRunConfig(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfigTest, Defaults) {
  const RunConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.model.feature_dim, c.train_corpus.feature_dim);
  EXPECT_EQ(c.model.feature_dim, c.eval_corpus.feature_dim);
  EXPECT_EQ(c.eval_corpus.num_speakers, 20);
  EXPECT_NE(c.train_corpus.speaker_prefix, c.eval_corpus.speaker_prefix);
  EXPECT_EQ(c.backend.scorer, ScorerKind::kPlda);
  EXPECT_DOUBLE_EQ(c.model.optimizer.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c.dcf.p_target, 0.01);
}

TEST(RunConfigTest, SerializeParseIsAFixedPoint) {
  RunConfig c;
  SetRunConfigValue(&c, "task_weight", "0.1");
  SetRunConfigValue(&c, "learning_rate", "3.3e-4");
  SetRunConfigValue(&c, "frame_widths", "8, 9, 10, 11, 12");
  SetRunConfigValue(&c, "length_norm", "false");
  SetRunConfigValue(&c, "scorer", "cosine");
  SetRunConfigValue(&c, "seed", "18446744073709551615");
  const std::string text = SerializeRunConfig(c);
  const RunConfig back = ParseRunConfig(text);
  EXPECT_EQ(SerializeRunConfig(back), text);
  EXPECT_EQ(back.model.task_weight, 0.1);
  EXPECT_EQ(back.model.optimizer.learning_rate, 3.3e-4);
  EXPECT_EQ(back.model.frame_widths[4], 12);
  EXPECT_FALSE(back.backend.length_norm);
  EXPECT_EQ(back.backend.scorer, ScorerKind::kCosine);
  EXPECT_EQ(back.model.seed, 18446744073709551615ull);
  // Every key appears exactly once.
  std::set<std::string> keys;
  for (const auto& k : RunConfigKeys()) EXPECT_TRUE(keys.insert(k).second) << k;
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), std::ptrdiff_t(keys.size()));
}

TEST(RunConfigTest, CommentsAndMirroring) {
  const RunConfig c = ParseRunConfig(
      "# comment\n\n  feature_dim = 7  \nmin_frames=120\nspeaker_spread = 1.5\n");
  EXPECT_EQ(c.train_corpus.feature_dim, 7);
  EXPECT_EQ(c.eval_corpus.feature_dim, 7);
  EXPECT_EQ(c.eval_corpus.min_frames, 120);
  EXPECT_EQ(c.eval_corpus.speaker_spread, 1.5);
  EXPECT_EQ(c.eval_corpus.num_speakers, 20);
}

TEST(RunConfigTest, Errors) {
  EXPECT_NE(ErrorOf("a = 1\n").find("unknown configuration key 'a'"), std::string::npos);
  EXPECT_NE(ErrorOf("seed = 1\nseed = 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(ErrorOf("\nbatch_size\n").find("line 2"), std::string::npos);
  EXPECT_NE(ErrorOf("batch_size = 1.5\n").find("batch_size"), std::string::npos);
  EXPECT_NE(ErrorOf("task_weight = abc\n").find("task_weight"), std::string::npos);
  EXPECT_NE(ErrorOf("length_norm = yes\n").find("length_norm"), std::string::npos);
  EXPECT_NE(ErrorOf("scorer = svm\n").find("svm"), std::string::npos);
  EXPECT_NE(ErrorOf("dilations = 1,2,3,1\n").find("dilations"), std::string::npos);
  EXPECT_NE(ErrorOf("dilations = 1,2,3,1,1,1\n").find("dilations"), std::string::npos);
  EXPECT_NE(ErrorOf("seed = -1\n").find("seed"), std::string::npos);
  EXPECT_THROW(LoadRunConfig("/nonexistent/x.conf"), IoError);
}

TEST(RunConfigTest, ValidateListsEveryProblem) {
  RunConfig c;
  c.model.task_weight = 2.0;
  c.eval_corpus.speaker_prefix = c.train_corpus.speaker_prefix;
  c.dcf.c_fa = 0.0;
  try {
    c.Validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("task_weight"), std::string::npos) << msg;
    EXPECT_NE(msg.find("eval_speaker_prefix"), std::string::npos) << msg;
    EXPECT_NE(msg.find("c_fa"), std::string::npos) << msg;
  }
}

TEST(RunConfigTest, ShippedToyConfigIsValid) {
  const RunConfig c = LoadRunConfig(XVMTL_CONFIG_DIR "/toy.conf");
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.model.frame_widths[4], 384);
  EXPECT_EQ(c.backend.scorer, ScorerKind::kCosine);
}

}  // namespace
}  // namespace xvmtl
