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

#include "xvmtl/optimizer.h"

#include <cmath>

#include "xvmtl/errors.h"

namespace xvmtl {

template <typename T>
OptimizerState<T> OptimizerState<T>::Create(
    const std::vector<NamedParameter<T>>& params, const AdamOptions& options) {
  OptimizerState state;
  state.options = options;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.numel(), T(0));
    state.second_moment.emplace_back(p.tensor.numel(), T(0));
  }
  return state;
}

template <typename T>
void OptimizerStep(std::vector<NamedParameter<T>>& params,
                   OptimizerState<T>& state) {
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ConfigError("optimizer state holds " +
                      std::to_string(state.first_moment.size()) +
                      " accumulators for " + std::to_string(params.size()) +
                      " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].tensor.numel() ||
        state.second_moment[i].size() != params[i].tensor.numel()) {
      throw ConfigError("optimizer state shape mismatch for " +
                        params[i].name);
    }
    for (T g : params[i].tensor.grad()) {
      if (!std::isfinite(g)) {
        throw TrainingDivergedError("non-finite gradient in parameter " +
                                    params[i].name);
      }
    }
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double correction1 = 1.0 - std::pow(o.beta1, double(state.step));
  const double correction2 = 1.0 - std::pow(o.beta2, double(state.step));
  const T lr = T(o.learning_rate);
  const T b1 = T(o.beta1), b2 = T(o.beta2);
  const T c1 = T(1.0 / correction1), c2 = T(1.0 / correction2);
  const T eps = T(o.epsilon);
  const T decay = T(o.learning_rate * o.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].tensor.values();
    auto g = params[i].tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] * c1;
      const T v_hat = v[j] * c2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + eps) + decay * w[j];
    }
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void OptimizerStep(std::vector<NamedParameter<float>>&,
                            OptimizerState<float>&);
template void OptimizerStep(std::vector<NamedParameter<double>>&,
                            OptimizerState<double>&);

}  // namespace xvmtl
