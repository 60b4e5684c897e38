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

// The `xvmtl` command line and the experiment pipeline it drives.
//
//   gen-data       training + held-out corpora and an all-pairs trial list
//   train          train a network (baseline when task_weight = 0)
//   extract        l6 embeddings for every utterance of a manifest
//   train-backend  centering + LDA + PLDA on training embeddings
//   score          score a trial list
//   evaluate       EER / minDCF / actDCF of a score file
//   gradcheck      finite-difference suite on the miniature network
//   sweep          the full pipeline over a grid of (order, alpha) systems
//
// Exit codes: 0 success, 1 usage / configuration / data errors, 2 anything
// else.

#ifndef XVMTL_CLI_H_
#define XVMTL_CLI_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xvmtl/backend.h"
#include "xvmtl/data.h"
#include "xvmtl/metrics.h"
#include "xvmtl/run_config.h"
#include "xvmtl/trainer.h"

namespace xvmtl {

int RunCli(int argc, const char* const* argv);

// "baseline" for alpha = 0, otherwise "MT-o<order>-a<round(10 alpha)>".
std::string SystemName(int order, double alpha);

struct SystemSpec {
  std::string name;
  int order = 4;
  double alpha = 0.0;
  std::uint64_t seed = 1;
};

// Every alpha = 0 entry collapses into one baseline row placed first; the
// rest follow in (order, alpha) list order. System i gets base_seed + i.
std::vector<SystemSpec> SweepSystems(const std::vector<double>& alphas,
                                     const std::vector<int>& orders,
                                     std::uint64_t base_seed);

struct CorpusPaths {
  std::filesystem::path train_manifest;
  std::filesystem::path eval_manifest;
  std::filesystem::path trials;
};

// <out>/train, <out>/eval and <out>/eval/trials.txt.
CorpusPaths GenerateData(const RunConfig& config,
                         const std::filesystem::path& out_dir);

// Loaded and voice-activity filtered corpora.
struct ExperimentData {
  LabeledSet train;
  std::vector<FeatureMatrix> eval;
  std::vector<Trial> trials;
};

ExperimentData LoadExperimentData(const CorpusPaths& paths, double vad_offset);

std::vector<Embedding> ExtractEmbeddings(Model<float>& model,
                                         const std::vector<FeatureMatrix>& utts);

struct SystemResult {
  std::string name;
  TrainResult training;
  MetricsReport metrics;
};

// Train, extract, fit the backend and score the trials, writing into
// `out_dir`: model.ckpt, train_log.csv, train_embeddings.txt,
// eval_embeddings.txt, backend.bin, scores.txt, metrics.csv.
SystemResult RunSystem(const RunConfig& config, const std::string& name,
                       const ExperimentData& data,
                       const std::filesystem::path& out_dir);

}  // namespace xvmtl

#endif  // XVMTL_CLI_H_
