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

// Checkpoint file, little-endian:
//   "XVCK" | u32 version | string config (key=value lines)
//   | u64 optimizer step | u64 epochs completed | u64 corpus seed
//   | u32 tensor count | tensors
// Each tensor is u32 rank, rank x u32 dims, float32 payload. Tensors are the
// model parameters in declaration order, then the batch-norm running mean and
// variance per normalized layer, then the optimizer first and second moments.
// Strings are u32 length + bytes.

#ifndef XVMTL_CHECKPOINT_H_
#define XVMTL_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "xvmtl/model.h"
#include "xvmtl/optimizer.h"

namespace xvmtl {

constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainState {
  Model<float> model;
  OptimizerState<float> optimizer;
  std::uint64_t epochs_completed = 0;
  std::uint64_t corpus_seed = 0;

  static TrainState Fresh(const ModelConfig& config);
};

// Round-trippable key=value rendering of a ModelConfig (doubles printed with
// 17 significant digits).
std::string SerializeModelConfig(const ModelConfig& config);
ModelConfig ParseModelConfig(const std::string& text);

void SaveCheckpoint(const std::filesystem::path& path, const TrainState& state);
TrainState LoadCheckpoint(const std::filesystem::path& path);

}  // namespace xvmtl

#endif  // XVMTL_CHECKPOINT_H_
