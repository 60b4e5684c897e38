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

#ifndef XVMTL_TRAINER_H_
#define XVMTL_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "xvmtl/checkpoint.h"
#include "xvmtl/data.h"

namespace xvmtl {

// Epoch means of the three loss terms. A term whose branch is skipped
// (MSE at alpha = 0, CE at alpha = 1) is NaN and logged as "nan".
struct EpochRecord {
  std::uint64_t epoch = 0;  // 1-based
  std::uint64_t step = 0;   // optimizer steps taken so far
  double loss = 0.0;
  double ce = 0.0;
  double mse = 0.0;
};

struct TrainOptions {
  // Written after every epoch, and with the last good state on divergence.
  std::filesystem::path checkpoint_path;
  // CSV `epoch,step,loss,ce,mse`; appended to when resuming.
  std::filesystem::path log_path;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  // Loss terms of the very first batch, before any update (NaN when that
  // batch was not the first of the run or the branch is skipped).
  double initial_ce = 0.0;
  double initial_mse = 0.0;
};

// Runs epochs state.epochs_completed + 1 .. config.epochs. Batches are a
// pure function of (config.seed, epoch), so an interrupted run resumed from
// its checkpoint reproduces the uninterrupted trajectory.
TrainResult Train(TrainState& state, const LabeledSet& data,
                  const TrainOptions& options = {});

std::string FormatEpochRecord(const EpochRecord& record);

// One optimizer step on a batch; returns {loss, ce, mse}. Exposed for timing
// and tests.
EpochRecord TrainStep(TrainState& state, const Batch& batch);

}  // namespace xvmtl

#endif  // XVMTL_TRAINER_H_
