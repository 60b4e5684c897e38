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

#include "xvmtl/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "xvmtl/errors.h"
#include "xvmtl/log.h"

namespace xvmtl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string FormatValue(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct Snapshot {
  Model<float> model;
  OptimizerState<float> optimizer;
  std::uint64_t epochs_completed;
};

Snapshot TakeSnapshot(const TrainState& state) {
  return {state.model.Clone(), state.optimizer, state.epochs_completed};
}

void Restore(TrainState& state, const Snapshot& snapshot) {
  state.model = snapshot.model.Clone();
  state.optimizer = snapshot.optimizer;
  state.epochs_completed = snapshot.epochs_completed;
}

}  // namespace

std::string FormatEpochRecord(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + std::to_string(r.step) + "," +
         FormatValue(r.loss) + "," + FormatValue(r.ce) + "," +
         FormatValue(r.mse);
}

EpochRecord TrainStep(TrainState& state, const Batch& batch) {
  const ModelConfig& config = state.model.config();
  const double alpha = config.task_weight;
  ForwardHeads heads{alpha < 1.0, alpha > 0.0};
  const std::size_t n = batch.batch_size;
  ad::Tensor<float> x({n, batch.crop_length, batch.dim}, batch.features);
  ad::Tensor<float> targets;
  if (heads.reconstruction) {
    if (batch.hos_targets.size() != n * std::size_t(config.reconstruction_dim())) {
      throw ConfigError("batch carries " +
                        std::to_string(batch.hos_targets.size()) +
                        " HOS target values, expected " +
                        std::to_string(n * config.reconstruction_dim()));
    }
    targets = ad::Tensor<float>({n, std::size_t(config.reconstruction_dim())},
                                batch.hos_targets);
  }
  auto params = state.model.Parameters();
  for (auto& p : params) p.tensor.ZeroGrad();

  ad::Tape<float> tape;
  auto out = Forward(state.model, x, ad::NormMode::kTrain, &tape, heads);
  auto terms = MultitaskLoss(&tape, out.logits, batch.labels,
                             out.reconstruction, targets, alpha);
  EpochRecord r;
  r.loss = terms.loss.item();
  r.ce = terms.ce.defined() ? terms.ce.item() : kNaN;
  r.mse = terms.mse.defined() ? terms.mse.item() : kNaN;
  if (!std::isfinite(r.loss)) {
    throw TrainingDivergedError("non-finite loss at step " +
                                std::to_string(state.optimizer.step + 1));
  }
  tape.Backward(terms.loss);
  OptimizerStep(params, state.optimizer);
  r.step = state.optimizer.step;
  return r;
}

TrainResult Train(TrainState& state, const LabeledSet& data,
                  const TrainOptions& options) {
  const ModelConfig& config = state.model.config();
  if (data.utterances.empty()) throw DataError("empty training corpus");
  if (data.speakers.size() < 2) {
    throw DataError("training needs at least 2 speakers, got " +
                    std::to_string(data.speakers.size()));
  }
  if (data.speakers.size() > std::size_t(config.num_speakers)) {
    throw ConfigError("corpus has " + std::to_string(data.speakers.size()) +
                      " speakers but the model was built for " +
                      std::to_string(config.num_speakers));
  }
  if (data.dim != std::size_t(config.feature_dim)) {
    throw ConfigError("corpus feature dim " + std::to_string(data.dim) +
                      " != model feature_dim " +
                      std::to_string(config.feature_dim));
  }
  std::optional<MomentOrder> order;
  if (config.task_weight > 0.0) order = MomentOrder(config.mtl_order);

  std::ofstream log;
  if (!options.log_path.empty()) {
    const bool resume = state.epochs_completed > 0;
    log.open(options.log_path, resume ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot open log " + options.log_path.string());
    if (!resume) log << "epoch,step,loss,ce,mse\n";
  }

  TrainResult result;
  result.initial_ce = kNaN;
  result.initial_mse = kNaN;
  bool first = state.optimizer.step == 0;
  while (state.epochs_completed < std::uint64_t(config.epochs)) {
    const std::uint64_t epoch = state.epochs_completed;
    const Snapshot good = TakeSnapshot(state);
    const auto batches = MakeBatches(data, config.crop_length,
                                     config.batch_size, config.seed, epoch,
                                     order);
    if (batches.empty()) {
      throw DataError("corpus yields no full batch of " +
                      std::to_string(config.batch_size));
    }
    double sum_loss = 0.0, sum_ce = 0.0, sum_mse = 0.0;
    try {
      for (const Batch& batch : batches) {
        const EpochRecord step = TrainStep(state, batch);
        if (first) {
          result.initial_ce = step.ce;
          result.initial_mse = step.mse;
          first = false;
        }
        sum_loss += step.loss;
        sum_ce += step.ce;
        sum_mse += step.mse;
      }
    } catch (const TrainingDivergedError& e) {
      Restore(state, good);
      if (!options.checkpoint_path.empty()) {
        SaveCheckpoint(options.checkpoint_path, state);
      }
      throw TrainingDivergedError(std::string(e.what()) + " in epoch " +
                                  std::to_string(epoch + 1) +
                                  "; restored state after epoch " +
                                  std::to_string(epoch));
    }
    const double count = double(batches.size());
    EpochRecord record{epoch + 1, state.optimizer.step, sum_loss / count,
                       sum_ce / count, sum_mse / count};
    state.epochs_completed = epoch + 1;
    result.log.push_back(record);
    if (log.is_open()) log << FormatEpochRecord(record) << '\n' << std::flush;
    if (!options.checkpoint_path.empty()) {
      SaveCheckpoint(options.checkpoint_path, state);
    }
    LogInfo("epoch " + FormatEpochRecord(record));
    if (options.on_epoch) options.on_epoch(record);
  }
  return result;
}

}  // namespace xvmtl
