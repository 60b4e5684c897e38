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

// Flat `key = value` run configuration covering the network, optimizer,
// both synthetic corpora, the backend and the detection-cost parameters.
// Blank lines and lines starting with '#' are ignored; unknown keys and
// repeated keys are rejected.

#ifndef XVMTL_RUN_CONFIG_H_
#define XVMTL_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xvmtl/backend.h"
#include "xvmtl/data.h"
#include "xvmtl/metrics.h"
#include "xvmtl/model.h"

namespace xvmtl {

struct BackendConfig {
  int lda_dim = 10;
  bool length_norm = true;
  int plda_iterations = 20;
  ScorerKind scorer = ScorerKind::kPlda;
};

struct RunConfig {
  // model.feature_dim is shared with both corpora; model.num_speakers is set
  // from the training data when a model is built.
  ModelConfig model;
  CorpusSpec train_corpus;
  CorpusSpec eval_corpus;
  BackendConfig backend;
  DcfParams dcf;

  RunConfig();

  // Throws ConfigError listing every violation.
  void Validate() const;
};

// Keys absent from the text keep their defaults.
RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::filesystem::path& path);
// Every key with its effective value, one per line, in a fixed order.
std::string SerializeRunConfig(const RunConfig& config);

// Applies one `key=value` assignment; the same keys as the file format.
void SetRunConfigValue(RunConfig* config, const std::string& key,
                       const std::string& value);
std::vector<std::string> RunConfigKeys();

std::string ScorerName(ScorerKind kind);
ScorerKind ParseScorer(const std::string& name);

}  // namespace xvmtl

#endif  // XVMTL_RUN_CONFIG_H_
