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

// Detection metrics over target / nontarget score lists.
//
// At threshold t a trial is accepted when score >= t, so
//   P_miss(t) = #{target < t} / N_tar,  P_fa(t) = #{nontarget >= t} / N_non.
// DCF(t) = c_miss p P_miss + c_fa (1 - p) P_fa, normalized by
// min(c_miss p, c_fa (1 - p)).

#ifndef XVMTL_METRICS_H_
#define XVMTL_METRICS_H_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xvmtl/backend.h"

namespace xvmtl {

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void Validate() const;
  // log(c_fa (1 - p) / (c_miss p)); the Bayes threshold for calibrated LLRs.
  double BayesThreshold() const;
};

struct MetricsReport {
  double eer = 0.0;      // fraction in [0, 1]
  double min_dcf = 0.0;  // normalized
  double act_dcf = 0.0;  // normalized, at BayesThreshold()
  // Interpolated between the two operating points around the crossing. Each
  // point is labeled by its threshold, so this value depends on the labeling.
  double threshold_at_eer = 0.0;
  std::size_t num_target = 0;
  std::size_t num_nontarget = 0;
};

// Sort-based sweep over every distinct score plus +infinity. EER is the
// linear interpolation of (P_miss, P_fa) at the crossing. Throws DataError
// when either class is empty or a score is not finite.
MetricsReport DetectionMetrics(std::span<const double> target,
                               std::span<const double> nontarget,
                               const DcfParams& params = {});

// Quadratic reference implementation: thresholds at midpoints of adjacent
// distinct scores plus +-infinity, each evaluated by direct counting. It
// visits the same operating points as DetectionMetrics, so every field except
// threshold_at_eer matches exactly.
MetricsReport MetricsOracle(std::span<const double> target,
                            std::span<const double> nontarget,
                            const DcfParams& params = {});

struct LabeledScores {
  std::vector<double> target;
  std::vector<double> nontarget;
};

// Matches scores to trials by (enroll, test). Throws DataError for a scored
// pair missing from the trial list or a trial without a score.
LabeledScores JoinScores(const std::vector<Trial>& trials,
                         const std::vector<ScoredTrial>& scores);

struct NamedReport {
  std::string system;
  MetricsReport report;
};

// Aligned table: system, EER%, minDCF, actDCF.
void WriteReportTable(std::ostream& os, const std::vector<NamedReport>& rows);
// `metric,value` lines.
void WriteReportCsv(std::ostream& os, const MetricsReport& report);

}  // namespace xvmtl

#endif  // XVMTL_METRICS_H_
