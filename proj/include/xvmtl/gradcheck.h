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

#ifndef XVMTL_GRADCHECK_H_
#define XVMTL_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "xvmtl/autodiff.h"
#include "xvmtl/optimizer.h"

namespace xvmtl {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor, so a parameter whose whole gradient is ~0 is judged on
  // an absolute scale.
  double floor = 1e-7;
};

struct GradCheckEntry {
  std::string parameter;
  double relative_error = 0.0;
  // Element with the largest absolute disagreement.
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  bool pass = false;
  std::vector<GradCheckEntry> entries;
};

// A fragment rebuilds its scalar output from the current parameter values,
// recording onto the given tape. It must be deterministic.
using Fragment = std::function<ad::Tensor<double>(ad::Tape<double>&)>;

// Compares analytic gradients with central differences, per parameter tensor:
//   err = ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
// in the Euclidean norm. Failures are reported in the result, never thrown.
GradCheckReport GradCheck(const Fragment& fragment,
                          std::vector<NamedParameter<double>> params,
                          const GradCheckOptions& options = {});

}  // namespace xvmtl

#endif  // XVMTL_GRADCHECK_H_
