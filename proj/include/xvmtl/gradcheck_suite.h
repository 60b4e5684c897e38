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

// The finite-difference suite: every differentiable primitive over a range
// of random shapes, then the full miniature network at several task weights.

#ifndef XVMTL_GRADCHECK_SUITE_H_
#define XVMTL_GRADCHECK_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "xvmtl/gradcheck.h"

namespace xvmtl {

struct SuiteCase {
  std::string name;
  GradCheckReport report;
};

struct GradCheckSuiteOptions {
  int primitive_seeds = 20;
  std::vector<double> task_weights = {0.0, 0.3, 1.0};
  std::uint64_t seed = 1;
  GradCheckOptions check;
};

std::vector<SuiteCase> RunGradCheckSuite(const GradCheckSuiteOptions& options = {});

}  // namespace xvmtl

#endif  // XVMTL_GRADCHECK_SUITE_H_
