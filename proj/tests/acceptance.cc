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

// Acceptance suite: one PASS/FAIL line per criterion, diagnostics indented
// below it. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "xvmtl/backend.h"
#include "xvmtl/cli.h"
#include "xvmtl/gradcheck_suite.h"
#include "xvmtl/log.h"
#include "xvmtl/metrics.h"
#include "xvmtl/run_config.h"
#include "xvmtl/stats.h"
#include "xvmtl/trainer.h"

namespace xvmtl {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void Note(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

struct Outcome {
  bool pass = true;
  std::string summary;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      summary += (summary.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
};

std::string Format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

std::string ReadBytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// 1. Finite-difference check of every primitive and the miniature network.
Outcome GradientIntegrity() {
  Outcome o;
  const auto start = Clock::now();
  const auto cases = RunGradCheckSuite();
  const double elapsed = Seconds(start);
  double worst = 0;
  std::set<double> alphas;
  for (const auto& c : cases) {
    worst = std::max(worst, c.report.max_relative_error);
    Note("%-28s max relative error %.3e", c.name.c_str(), c.report.max_relative_error);
    o.Require(c.report.pass && c.report.max_relative_error < 1e-4, c.name);
    if (c.name.rfind("network_alpha_", 0) == 0) alphas.insert(std::stod(c.name.substr(14)));
  }
  o.Require(alphas == std::set<double>{0.0, 0.3, 1.0}, "network cases for alpha 0, 0.3, 1");
  o.Require(elapsed < 60.0, "runtime < 60 s");
  o.summary = Format("%zu cases, worst %.2e, %.1f s", cases.size(), worst, elapsed) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

// 2. Moments against a long-double two-pass oracle.
Outcome HosCorrectness() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  double worst = 0;
  for (int u = 0; u < 100; ++u) {
    const std::size_t t = 20 + rng() % 300, d = 1 + rng() % 12;
    std::vector<double> x(t * d);
    std::gamma_distribution<double> g(1.0 + double(u % 5));
    for (auto& v : x) v = g(rng) * (u % 2 ? -1.0 : 1.0) + 3.0;
    const HosVector h = Moments<double>({x, t, d});
    for (std::size_t j = 0; j < d; ++j) {
      long double mean = 0;
      for (std::size_t i = 0; i < t; ++i) mean += x[i * d + j];
      mean /= t;
      long double m2 = 0, m3 = 0, m4 = 0;
      for (std::size_t i = 0; i < t; ++i) {
        const long double c = x[i * d + j] - mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
      }
      m2 /= t;
      m3 /= t;
      m4 /= t;
      const long double sd = std::sqrt(m2);
      const long double ref[4] = {mean, sd, m3 / (sd * sd * sd), m4 / (m2 * m2)};
      const double got[4] = {h.mu[j], h.sigma[j], h.skew[j], h.kurt[j]};
      for (int k = 0; k < 4; ++k) {
        const double err = double(std::abs(got[k] - ref[k]) / std::max<long double>(1, std::abs(ref[k])));
        worst = std::max(worst, err);
      }
    }
  }
  Note("oracle: worst error %.3e over 100 utterances", worst);
  o.Require(worst < 1e-10, "oracle agreement 1e-10");

  const std::vector<double> example = {0, 0, 0, 1};
  const HosVector e = Moments<double>({example, 4, 1});
  const double s_err = std::abs(e.skew[0] - 2.0 / std::sqrt(3.0));
  const double k_err = std::abs(e.kurt[0] - 7.0 / 3.0);
  Note("[0,0,0,1]: s = %.9f, k = %.9f", e.skew[0], e.kurt[0]);
  o.Require(s_err < 1e-9 && std::abs(e.skew[0] - 1.154701) < 1e-6 && k_err < 1e-9,
            "worked example");

  const std::size_t n = 100000, d = 4;
  std::vector<double> gauss(n * d);
  std::normal_distribution<double> normal;
  for (auto& v : gauss) v = normal(rng);
  const HosVector gh = Moments<double>({gauss, n, d});
  double max_s = 0, max_k = 0;
  for (std::size_t j = 0; j < d; ++j) {
    max_s = std::max(max_s, std::abs(gh.skew[j]));
    max_k = std::max(max_k, std::abs(gh.kurt[j] - 3.0));
  }
  Note("100k Gaussian samples: max |s| = %.4f, max |k-3| = %.4f", max_s, max_k);
  o.Require(max_s < 0.05 && max_k < 0.1, "Gaussian moments");
  const double elapsed = Seconds(start);
  o.Require(elapsed < 30.0, "runtime < 30 s");
  o.summary = Format("oracle %.1e, s %.6f, k %.6f, %.1f s", worst, e.skew[0], e.kurt[0], elapsed) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

struct ToyRun {
  SystemResult result;
  double seconds = 0;
};

RunConfig ToyConfig() { return LoadRunConfig(XVMTL_CONFIG_DIR "/toy.conf"); }

// One sweep of the toy experiment: fresh corpus, then each system in turn.
std::vector<ToyRun> RunToy(const fs::path& root, const std::vector<double>& alphas) {
  const RunConfig base = ToyConfig();
  base.Validate();
  const ExperimentData data = LoadExperimentData(GenerateData(base, root / "data"),
                                                 base.model.vad_offset);
  std::vector<ToyRun> runs;
  for (const auto& system : SweepSystems(alphas, {base.model.mtl_order}, base.model.seed)) {
    RunConfig config = base;
    config.model.task_weight = system.alpha;
    config.model.mtl_order = system.order;
    config.model.seed = system.seed;
    const auto start = Clock::now();
    ToyRun run{RunSystem(config, system.name, data, root / system.name), 0};
    run.seconds = Seconds(start);
    Note("%-9s EER %5.2f%%  minDCF %.4f  final CE %.4f  final MSE %.4g  %.0f s",
         system.name.c_str(), 100 * run.result.metrics.eer, run.result.metrics.min_dcf,
         run.result.training.log.back().ce, run.result.training.log.back().mse, run.seconds);
    runs.push_back(std::move(run));
  }
  return runs;
}

// 3. Baseline and MT-o4-a3 on the toy corpus.
Outcome ToyExperiment(const fs::path& root) {
  Outcome o;
  const auto runs = RunToy(root, {0.0, 0.3});
  const auto& base = runs.at(0);
  const auto& mt = runs.at(1);
  o.Require(base.result.name == "baseline" && mt.result.name == "MT-o4-a3", "system names");
  o.Require(base.result.metrics.eer <= 0.10, "baseline EER <= 10%");
  o.Require(mt.result.metrics.eer <= 0.10, "MT EER <= 10%");
  const double initial = mt.result.training.initial_mse;
  const double final_mse = mt.result.training.log.back().mse;
  const double drop = 1.0 - final_mse / initial;
  Note("MT reconstruction MSE %.4g -> %.4g (drop %.1f%%)", initial, final_mse, 100 * drop);
  o.Require(drop >= 0.5, "MSE drop >= 50%");
  o.Require(mt.result.metrics.eer <= base.result.metrics.eer + 0.02, "MT EER <= baseline + 2%");
  for (const auto& r : runs) o.Require(r.seconds < 15 * 60, r.result.name + " runtime < 15 min");
  o.summary = Format("EER baseline %.2f%%, MT-o4-a3 %.2f%%, MSE drop %.1f%%",
                     100 * base.result.metrics.eer, 100 * mt.result.metrics.eer, 100 * drop) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

// 4. Reconstruction loss only.
Outcome UnsupervisedOnly(const fs::path& root) {
  Outcome o;
  const auto runs = RunToy(root, {1.0});
  const auto& r = runs.at(0);
  o.Require(r.result.metrics.eer < 0.40, "EER < 40%");
  o.Require(r.seconds < 15 * 60, "runtime < 15 min");
  o.summary = Format("%s EER %.2f%%", r.result.name.c_str(), 100 * r.result.metrics.eer) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

// Seconds per step of `steps` training steps, including batch construction.
double StepSeconds(const ModelConfig& config, const LabeledSet& data, int steps) {
  TrainState state = TrainState::Fresh(config);
  std::optional<MomentOrder> order;
  if (config.task_weight > 0) order = MomentOrder(config.mtl_order);
  const auto start = Clock::now();
  int done = 0;
  for (std::uint64_t epoch = 0; done < steps; ++epoch) {
    for (const auto& b : MakeBatches(data, config.crop_length, config.batch_size,
                                     config.seed, epoch, order)) {
      if (done++ == steps) break;
      TrainStep(state, b);
    }
  }
  return Seconds(start) / steps;
}

// 5. Parameter and step-time overhead of the reconstruction head.
Outcome Overhead(const fs::path& root) {
  Outcome o;
  ModelConfig full;
  full.feature_dim = 30;
  full.num_speakers = 7001;
  full.mtl_order = 4;
  const ParameterCount count = ParameterOverhead(full);
  const std::size_t head = count.mtl_params - count.baseline_params;
  const double share = double(head) / double(count.mtl_params);
  Note("full-size: %zu baseline + %zu head parameters (%.3f%% of total)",
       count.baseline_params, head, 100 * share);
  o.Require(head == 512u * 120u + 120u && head == 61560u, "head parameters = 61,560");
  o.Require(share < 0.02, "head share < 2%");

  CorpusSpec spec;
  spec.num_speakers = 5;
  spec.utterances_per_speaker = 32;
  spec.feature_dim = 6;
  spec.min_frames = 60;
  spec.max_frames = 100;
  const LabeledSet data = MakeLabeledSet(LoadCorpus(GenerateCorpus(spec, root / "corpus"), 4.0));
  ModelConfig mini = MiniatureConfig();
  ModelConfig base = mini;
  base.task_weight = 0.0;
  ModelConfig mt = mini;
  mt.task_weight = 0.3;
  // Interleaved repetitions; the fastest of each absorbs scheduler noise.
  double t_base = 1e9, t_mt = 1e9;
  for (int rep = 0; rep < 3; ++rep) {
    t_base = std::min(t_base, StepSeconds(base, data, 200));
    t_mt = std::min(t_mt, StepSeconds(mt, data, 200));
  }
  const double step_overhead = t_mt / t_base - 1.0;
  Note("miniature step time: baseline %.3f ms, MT-o4 %.3f ms (%+.1f%%)",
       1e3 * t_base, 1e3 * t_mt, 100 * step_overhead);
  o.Require(step_overhead < 0.10, "step-time overhead < 10%");
  o.summary = Format("head %zu params (%.2f%%), step overhead %+.1f%%", head, 100 * share,
                     100 * step_overhead) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

// 6. Sweep metrics against the quadratic oracle.
Outcome MetricsCorrectness() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(6);
  double worst = 0;
  for (int set = 0; set < 1000; ++set) {
    const int nt = 1 + int(rng() % 200), nn = 1 + int(rng() % 400);
    std::normal_distribution<double> tar_d(1.0, 1.0), non_d(0.0, 1.0);
    const bool ties = set % 2 == 0;
    std::vector<double> tar(nt), non(nn);
    for (auto& s : tar) s = ties ? std::round(4 * tar_d(rng)) / 4 : tar_d(rng);
    for (auto& s : non) s = ties ? std::round(4 * non_d(rng)) / 4 : non_d(rng);
    const MetricsReport a = DetectionMetrics(tar, non, {});
    const MetricsReport b = MetricsOracle(tar, non, {});
    worst = std::max({worst, std::abs(a.eer - b.eer), std::abs(a.min_dcf - b.min_dcf),
                      std::abs(a.act_dcf - b.act_dcf)});
  }
  Note("1000 sets: worst |fast - oracle| = %.3e", worst);
  o.Require(worst <= 1e-12, "oracle agreement 1e-12");

  const MetricsReport perfect = DetectionMetrics(std::vector<double>{2, 3, 4}, std::vector<double>{-1, 0, 1}, {});
  o.Require(perfect.eer == 0.0, "perfect separation EER 0");
  std::normal_distribution<double> normal;
  std::vector<double> t(10000), n(10000);
  for (auto& s : t) s = normal(rng);
  for (auto& s : n) s = normal(rng);
  const MetricsReport same = DetectionMetrics(t, n, {});
  Note("identical distributions: EER %.4f", same.eer);
  o.Require(std::abs(same.eer - 0.5) <= 0.02, "identical distributions EER 0.5 +- 0.02");
  const double elapsed = Seconds(start);
  o.Require(elapsed < 60.0, "runtime < 60 s");
  o.summary = Format("worst diff %.1e, EER %.1f / %.4f, %.1f s", worst, perfect.eer, same.eer, elapsed) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

Eigen::VectorXd SampleGaussian(const Eigen::MatrixXd& cov, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::VectorXd z(cov.rows());
  for (int i = 0; i < z.size(); ++i) z[i] = n(rng);
  return cov.llt().matrixL() * z;
}

// 7. Two-covariance model recovery.
Outcome PldaRecovery() {
  Outcome o;
  const auto start = Clock::now();
  const int dim = 10, speakers = 200, per = 20;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  auto random_spd = [&](double lo, double hi) {
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    Eigen::VectorXd eig(dim);
    for (int i = 0; i < dim; ++i) eig[i] = lo * std::pow(hi / lo, double(i) / (dim - 1));
    return Eigen::MatrixXd(q * eig.asDiagonal() * q.transpose());
  };
  const Eigen::MatrixXd b = random_spd(0.5, 5.0);
  const Eigen::MatrixXd w = random_spd(0.2, 1.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(dim, -1, 1);
  std::vector<Eigen::VectorXd> x;
  std::vector<int> labels;
  std::vector<Eigen::VectorXd> latent;
  Eigen::MatrixXd within_noise = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < speakers; ++s) {
    const Eigen::VectorXd y = SampleGaussian(b, rng);
    latent.push_back(y);
    for (int i = 0; i < per; ++i) {
      const Eigen::VectorXd e = SampleGaussian(w, rng);
      within_noise += e * e.transpose();
      x.push_back(mu + y + e);
      labels.push_back(s);
    }
  }
  within_noise /= double(x.size());
  Eigen::VectorXd ybar = Eigen::VectorXd::Zero(dim);
  for (const auto& y : latent) ybar += y / speakers;
  Eigen::MatrixXd realized_b = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& y : latent) realized_b += (y - ybar) * (y - ybar).transpose() / speakers;

  const PldaModel m = FitPlda(x, labels, {20, false});
  auto rel = [](const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
    return (est - ref).norm() / ref.norm();
  };
  const double err_b = rel(m.between, b), err_w = rel(m.within, w);
  bool monotone = true;
  for (std::size_t i = 1; i < m.log_likelihood.size(); ++i) {
    monotone = monotone && m.log_likelihood[i] >= m.log_likelihood[i - 1] - 1e-8 * std::abs(m.log_likelihood[i - 1]);
  }
  const double elapsed = Seconds(start);
  Note("relative Frobenius error vs generating model: B %.4f, W %.4f", err_b, err_w);
  Note("vs realized sample covariances of the draws: B %.4f, W %.4f",
       rel(m.between, realized_b), rel(m.within, within_noise));
  Note("realized latent covariance vs generating B: %.4f (sampling floor with %d speakers)",
       rel(realized_b, b), speakers);
  Note("log-likelihood %.3f -> %.3f over %zu iterations", m.log_likelihood.front(),
       m.log_likelihood.back(), m.log_likelihood.size() - 1);
  o.Require(err_b < 0.10, "B within 10%");
  o.Require(err_w < 0.10, "W within 10%");
  o.Require(monotone, "non-decreasing log-likelihood");
  o.Require(elapsed < 120.0, "runtime < 2 min");
  o.summary = Format("B err %.3f, W err %.3f, %.1f s", err_b, err_w, elapsed) +
              (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

// 8. The toy experiment again in a second directory, compared byte for byte.
Outcome Determinism(const fs::path& first, const fs::path& second) {
  Outcome o;
  if (!fs::exists(first / "MT-o4-a3" / "scores.txt")) RunToy(first, {0.0, 0.3});
  RunToy(second, {0.0, 0.3});
  int compared = 0;
  for (const char* system : {"baseline", "MT-o4-a3"}) {
    for (const char* file : {"train_log.csv", "model.ckpt", "scores.txt", "metrics.csv",
                             "eval_embeddings.txt", "backend.bin"}) {
      const fs::path a = first / system / file, b = second / system / file;
      const std::string x = ReadBytes(a);
      o.Require(!x.empty() && x == ReadBytes(b), std::string(system) + "/" + file);
      ++compared;
    }
  }
  o.summary = Format("%d files compared", compared) + (o.summary.empty() ? "" : "; " + o.summary);
  return o;
}

}  // namespace
}  // namespace xvmtl

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"Acceptance criteria"};
  std::string work_dir = (fs::temp_directory_path() / "xvmtl_acceptance").string();
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory (cleared first)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  xvmtl::LogThreshold() = xvmtl::LogLevel::kWarning;

  const fs::path root(work_dir);
  fs::remove_all(root);
  fs::create_directories(root);
  auto selected = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  const std::vector<std::pair<const char*, std::function<xvmtl::Outcome()>>> criteria = {
      {"gradient integrity", xvmtl::GradientIntegrity},
      {"HOS correctness", xvmtl::HosCorrectness},
      {"toy multitask experiment", [&] { return xvmtl::ToyExperiment(root / "toy"); }},
      {"reconstruction-only sanity", [&] { return xvmtl::UnsupervisedOnly(root / "alpha1"); }},
      {"overhead", [&] { return xvmtl::Overhead(root / "overhead"); }},
      {"metrics correctness", xvmtl::MetricsCorrectness},
      {"PLDA recovery", xvmtl::PldaRecovery},
      {"determinism", [&] { return xvmtl::Determinism(root / "toy", root / "toy_repeat"); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected(int(i + 1))) continue;
    xvmtl::Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.summary = std::string("exception: ") + e.what();
    }
    failures += !outcome.pass;
    std::printf("%s criterion %zu (%s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, outcome.summary.c_str());
    std::fflush(stdout);
  }
  return failures;
}
