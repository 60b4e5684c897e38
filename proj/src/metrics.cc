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

#include "xvmtl/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>

#include "xvmtl/errors.h"

namespace xvmtl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckScores(std::span<const double> target,
                 std::span<const double> nontarget) {
  if (target.empty() || nontarget.empty()) {
    throw DataError("metrics need at least one target and one nontarget trial (got " +
                    std::to_string(target.size()) + " and " +
                    std::to_string(nontarget.size()) + ")");
  }
  for (auto list : {target, nontarget}) {
    for (double s : list) {
      if (!std::isfinite(s)) throw DataError("non-finite score");
    }
  }
}

// One operating point of the threshold sweep.
struct Point {
  double threshold;
  double p_miss;
  double p_fa;
};

double NormalizedDcf(double p_miss, double p_fa, const DcfParams& p) {
  const double dcf =
      p.c_miss * p.p_target * p_miss + p.c_fa * (1.0 - p.p_target) * p_fa;
  return dcf / std::min(p.c_miss * p.p_target, p.c_fa * (1.0 - p.p_target));
}

double ActualDcf(std::span<const double> target,
                 std::span<const double> nontarget, const DcfParams& params) {
  const double t = params.BayesThreshold();
  const auto misses = std::count_if(target.begin(), target.end(),
                                    [t](double s) { return s < t; });
  const auto fas = std::count_if(nontarget.begin(), nontarget.end(),
                                 [t](double s) { return s >= t; });
  return NormalizedDcf(double(misses) / double(target.size()),
                       double(fas) / double(nontarget.size()), params);
}

// Points are ordered by increasing threshold: p_miss rises, p_fa falls, the
// first point has p_miss = 0 and the last p_fa = 0.
MetricsReport Summarize(const std::vector<Point>& points,
                        std::span<const double> target,
                        std::span<const double> nontarget,
                        const DcfParams& params) {
  MetricsReport r;
  r.num_target = target.size();
  r.num_nontarget = nontarget.size();
  r.min_dcf = kInf;
  for (const auto& pt : points) {
    r.min_dcf = std::min(r.min_dcf, NormalizedDcf(pt.p_miss, pt.p_fa, params));
  }
  std::size_t i = 1;
  while (i + 1 < points.size() && points[i].p_miss < points[i].p_fa) ++i;
  const Point& a = points[i - 1];
  const Point& b = points[i];
  const double gap0 = a.p_fa - a.p_miss;
  const double gap1 = b.p_fa - b.p_miss;
  const double w = gap0 == gap1 ? 0.0 : gap0 / (gap0 - gap1);
  r.eer = a.p_miss + w * (b.p_miss - a.p_miss);
  if (!std::isfinite(a.threshold)) {
    r.threshold_at_eer = b.threshold;
  } else if (!std::isfinite(b.threshold)) {
    r.threshold_at_eer = a.threshold;
  } else {
    r.threshold_at_eer = a.threshold + w * (b.threshold - a.threshold);
  }
  r.act_dcf = ActualDcf(target, nontarget, params);
  return r;
}

}  // namespace

void DcfParams::Validate() const {
  if (!(p_target > 0.0 && p_target < 1.0)) {
    throw ConfigError("p_target must be in (0, 1)");
  }
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) {
    throw ConfigError("c_miss and c_fa must be positive");
  }
}

double DcfParams::BayesThreshold() const {
  return std::log(c_fa * (1.0 - p_target) / (c_miss * p_target));
}

MetricsReport DetectionMetrics(std::span<const double> target,
                               std::span<const double> nontarget,
                               const DcfParams& params) {
  params.Validate();
  CheckScores(target, nontarget);
  std::vector<std::pair<double, bool>> all;
  all.reserve(target.size() + nontarget.size());
  for (double s : target) all.emplace_back(s, true);
  for (double s : nontarget) all.emplace_back(s, false);
  std::sort(all.begin(), all.end());

  const double n_tar = double(target.size());
  const double n_non = double(nontarget.size());
  std::size_t misses = 0;
  std::size_t fas = nontarget.size();
  std::vector<Point> points;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].first;
    points.push_back({t, double(misses) / n_tar, double(fas) / n_non});
    for (; i < all.size() && all[i].first == t; ++i) {
      if (all[i].second) {
        ++misses;
      } else {
        --fas;
      }
    }
  }
  points.push_back({kInf, double(misses) / n_tar, double(fas) / n_non});
  return Summarize(points, target, nontarget, params);
}

MetricsReport MetricsOracle(std::span<const double> target,
                            std::span<const double> nontarget,
                            const DcfParams& params) {
  params.Validate();
  CheckScores(target, nontarget);
  std::vector<double> distinct(target.begin(), target.end());
  distinct.insert(distinct.end(), nontarget.begin(), nontarget.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> thresholds = {-kInf};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    thresholds.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  }
  thresholds.push_back(kInf);

  std::vector<Point> points;
  for (double t : thresholds) {
    std::size_t misses = 0, fas = 0;
    for (double s : target) misses += s < t;
    for (double s : nontarget) fas += s >= t;
    points.push_back({t, double(misses) / double(target.size()),
                      double(fas) / double(nontarget.size())});
  }
  return Summarize(points, target, nontarget, params);
}

LabeledScores JoinScores(const std::vector<Trial>& trials,
                         const std::vector<ScoredTrial>& scores) {
  std::map<std::pair<std::string, std::string>, bool> labels;
  for (const auto& t : trials) labels[{t.enroll, t.test}] = t.target;
  LabeledScores out;
  std::size_t matched = 0;
  for (const auto& s : scores) {
    auto it = labels.find({s.enroll, s.test});
    if (it == labels.end()) {
      throw DataError("scored pair '" + s.enroll + " " + s.test +
                      "' is not in the trial list");
    }
    (it->second ? out.target : out.nontarget).push_back(s.score);
    ++matched;
  }
  if (matched != trials.size()) {
    throw DataError(std::to_string(trials.size() - std::min(matched, trials.size())) +
                    " trials have no score");
  }
  return out;
}

void WriteReportTable(std::ostream& os, const std::vector<NamedReport>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.system.size());
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-*s %8s %8s %8s\n", int(width), "system",
                "EER%", "minDCF", "actDCF");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %8.2f %8.4f %8.4f\n", int(width),
                  r.system.c_str(), 100.0 * r.report.eer, r.report.min_dcf,
                  r.report.act_dcf);
    os << buf;
  }
}

void WriteReportCsv(std::ostream& os, const MetricsReport& report) {
  char buf[64];
  auto line = [&](const char* name, double v) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", name, v);
    os << buf;
  };
  os << "metric,value\n";
  line("eer", report.eer);
  line("min_dcf", report.min_dcf);
  line("act_dcf", report.act_dcf);
  line("threshold_at_eer", report.threshold_at_eer);
  os << "num_target," << report.num_target << '\n';
  os << "num_nontarget," << report.num_nontarget << '\n';
}

}  // namespace xvmtl
