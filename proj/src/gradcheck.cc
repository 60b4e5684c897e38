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

#include "xvmtl/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xvmtl {

GradCheckReport GradCheck(const Fragment& fragment,
                          std::vector<NamedParameter<double>> params,
                          const GradCheckOptions& options) {
  for (auto& p : params) p.tensor.ZeroGrad();
  {
    ad::Tape<double> tape;
    ad::Tensor<double> loss = fragment(tape);
    tape.Backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    auto g = p.tensor.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  auto evaluate = [&]() {
    ad::Tape<double> tape;
    return fragment(tape).item();
  };

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    GradCheckEntry entry{params[i].name, 0.0, 0};
    auto values = params[i].tensor.values();
    double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0, worst = -1.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + options.step;
      const double plus = evaluate();
      values[j] = saved - options.step;
      const double minus = evaluate();
      values[j] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[i][j];
      const double diff = std::abs(a - numeric);
      diff_sq += diff * diff;
      analytic_sq += a * a;
      numeric_sq += numeric * numeric;
      if (!(diff <= worst)) {
        worst = diff;
        entry.worst_index = j;
      }
    }
    const double denom = std::max(
        {std::sqrt(analytic_sq), std::sqrt(numeric_sq), options.floor});
    entry.relative_error = std::sqrt(diff_sq) / denom;
    if (!std::isfinite(entry.relative_error)) {
      entry.relative_error = std::numeric_limits<double>::infinity();
    }
    report.max_relative_error =
        std::max(report.max_relative_error, entry.relative_error);
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace xvmtl
