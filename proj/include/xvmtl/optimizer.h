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

#ifndef XVMTL_OPTIMIZER_H_
#define XVMTL_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "xvmtl/autodiff.h"

namespace xvmtl {

template <typename T>
struct NamedParameter {
  std::string name;
  ad::Tensor<T> tensor;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled L2 decay: p -= lr * weight_decay * p, independent of the
  // gradient moments.
  double weight_decay = 1e-4;
};

// First/second moment accumulators, one pair per parameter, in the same
// order as the parameter list they were created for.
template <typename T>
struct OptimizerState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  static OptimizerState Create(const std::vector<NamedParameter<T>>& params,
                               const AdamOptions& options);
};

// One bias-corrected adaptive-moment update with decoupled weight decay.
// Reads the gradients stored on the parameters. Throws TrainingDivergedError
// naming the first parameter whose gradient is not finite; in that case no
// parameter is modified.
template <typename T>
void OptimizerStep(std::vector<NamedParameter<T>>& params,
                   OptimizerState<T>& state);

}  // namespace xvmtl

#endif  // XVMTL_OPTIMIZER_H_
