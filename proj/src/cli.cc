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

#include "xvmtl/cli.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "xvmtl/errors.h"
#include "xvmtl/gradcheck_suite.h"
#include "xvmtl/log.h"

namespace xvmtl {

namespace fs = std::filesystem;

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<Trial> TrialsForManifest(const Manifest& manifest) {
  std::vector<Embedding> ids;
  for (const auto& e : manifest.entries) ids.push_back({e.utt_id, e.speaker_id, {}});
  return AllPairTrials(ids);
}

MetricsReport EvaluateScores(const std::vector<Trial>& trials,
                             const std::vector<ScoredTrial>& scores,
                             const DcfParams& params) {
  const LabeledScores joined = JoinScores(trials, scores);
  return DetectionMetrics(joined.target, joined.nontarget, params);
}

void WriteMetricsCsv(const fs::path& path, const MetricsReport& report) {
  std::ostringstream os;
  WriteReportCsv(os, report);
  WriteText(path, os.str());
}

// Options shared by the subcommands that read a run configuration.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> order;
  std::optional<int> lda_dim;
  std::optional<std::string> scorer;
};

RunConfig ResolveConfig(const CommonOptions& o) {
  RunConfig config = o.config_path.empty() ? RunConfig() : LoadRunConfig(o.config_path);
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + a + "'");
    SetRunConfigValue(&config, a.substr(0, eq), a.substr(eq + 1));
  }
  if (o.seed) config.model.seed = *o.seed;
  if (o.alpha) config.model.task_weight = *o.alpha;
  if (o.order) config.model.mtl_order = *o.order;
  if (o.lda_dim) config.backend.lda_dim = *o.lda_dim;
  if (o.scorer) config.backend.scorer = ParseScorer(*o.scorer);
  config.Validate();
  LogInfo("effective configuration:\n" + SerializeRunConfig(config));
  return config;
}

void AddConfigOptions(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("--config", o->config_path, "Run configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o->assignments, "Override one key (key=value)");
}

int RunGenData(const CommonOptions& o, const std::string& out) {
  RunConfig config = ResolveConfig(o);
  if (o.seed) config.train_corpus.seed = *o.seed;
  GenerateData(config, out);
  WriteText(fs::path(out) / "config.txt", SerializeRunConfig(config));
  return 0;
}

int RunTrain(const CommonOptions& o, const std::string& manifest_path,
             const std::string& out, bool resume) {
  const RunConfig config = ResolveConfig(o);
  EnsureDirectory(out);
  const Manifest manifest = ReadManifest(manifest_path);
  const LabeledSet data =
      MakeLabeledSet(LoadCorpus(manifest, config.model.vad_offset));
  const fs::path checkpoint = fs::path(out) / "model.ckpt";
  std::optional<TrainState> state;
  if (resume && fs::exists(checkpoint)) {
    state.emplace(LoadCheckpoint(checkpoint));
    LogInfo("resuming from epoch " + std::to_string(state->epochs_completed));
  } else {
    ModelConfig model = config.model;
    model.num_speakers = int(data.speakers.size());
    state.emplace(TrainState::Fresh(model));
    state->corpus_seed = config.train_corpus.seed;
    fs::remove(fs::path(out) / "train_log.csv");
  }
  Train(*state, data, {checkpoint, fs::path(out) / "train_log.csv", nullptr});
  return 0;
}

int RunExtract(const std::string& model_path, const std::string& manifest_path,
               const std::string& out) {
  TrainState state = LoadCheckpoint(model_path);
  const Manifest manifest = ReadManifest(manifest_path);
  const auto utts = LoadCorpus(manifest, state.model.config().vad_offset);
  WriteEmbeddings(out, ExtractEmbeddings(state.model, utts));
  return 0;
}

int RunTrainBackend(const CommonOptions& o, const std::string& embeddings,
                    const std::string& out) {
  const RunConfig config = ResolveConfig(o);
  const Backend backend =
      FitBackend(ReadEmbeddings(embeddings), config.backend.lda_dim,
                 config.backend.length_norm, {config.backend.plda_iterations});
  SaveBackend(out, backend);
  return 0;
}

int RunScore(const CommonOptions& o, const std::string& backend_path,
             const std::string& embeddings, const std::string& trials,
             const std::string& out) {
  const RunConfig config = ResolveConfig(o);
  const Backend backend = LoadBackend(backend_path);
  const PldaModel* plda = backend.plda ? &*backend.plda : nullptr;
  WriteScores(out, ScoreTrials(ReadTrials(trials), ReadEmbeddings(embeddings),
                               backend.preprocessor, config.backend.scorer, plda));
  return 0;
}

int RunEvaluate(const CommonOptions& o, const std::string& scores,
                const std::string& trials, const std::string& out) {
  const RunConfig config = ResolveConfig(o);
  const MetricsReport report =
      EvaluateScores(ReadTrials(trials), ReadScores(scores), config.dcf);
  WriteReportTable(std::cout, {{fs::path(scores).stem().string(), report}});
  if (!out.empty()) WriteMetricsCsv(out, report);
  return 0;
}

int RunGradCheck(std::uint64_t seed) {
  GradCheckSuiteOptions options;
  options.seed = seed;
  bool pass = true;
  for (const auto& c : RunGradCheckSuite(options)) {
    std::printf("%-28s %s  max relative error %.3e\n", c.name.c_str(),
                c.report.pass ? "pass" : "FAIL", c.report.max_relative_error);
    pass = pass && c.report.pass;
  }
  return pass ? 0 : 1;
}

int RunSweep(const CommonOptions& o, const std::string& out,
             const std::vector<double>& alphas, const std::vector<int>& orders) {
  const RunConfig base = ResolveConfig(o);
  const fs::path root(out);
  const CorpusPaths paths = GenerateData(base, root / "data");
  const ExperimentData data = LoadExperimentData(paths, base.model.vad_offset);
  std::vector<NamedReport> rows;
  for (const auto& system : SweepSystems(alphas, orders, base.model.seed)) {
    RunConfig config = base;
    config.model.task_weight = system.alpha;
    config.model.mtl_order = system.order;
    config.model.seed = system.seed;
    LogInfo("system " + system.name);
    rows.push_back(
        {system.name, RunSystem(config, system.name, data, root / system.name).metrics});
  }
  std::ostringstream table;
  WriteReportTable(table, rows);
  std::cout << table.str();
  WriteText(root / "sweep.txt", table.str());
  return 0;
}

}  // namespace

std::string SystemName(int order, double alpha) {
  if (alpha == 0.0) return "baseline";
  return "MT-o" + std::to_string(order) + "-a" +
         std::to_string(std::lround(10.0 * alpha));
}

std::vector<SystemSpec> SweepSystems(const std::vector<double>& alphas,
                                     const std::vector<int>& orders,
                                     std::uint64_t base_seed) {
  std::vector<SystemSpec> systems;
  bool baseline = false;
  for (double a : alphas) baseline = baseline || a == 0.0;
  if (baseline) systems.push_back({"baseline", orders.empty() ? 4 : orders[0], 0.0, 0});
  for (int order : orders) {
    for (double a : alphas) {
      if (a != 0.0) systems.push_back({SystemName(order, a), order, a, 0});
    }
  }
  for (std::size_t i = 0; i < systems.size(); ++i) systems[i].seed = base_seed + i;
  return systems;
}

CorpusPaths GenerateData(const RunConfig& config, const fs::path& out_dir) {
  CorpusPaths paths;
  const Manifest train = GenerateCorpus(config.train_corpus, out_dir / "train");
  const Manifest eval = GenerateCorpus(config.eval_corpus, out_dir / "eval");
  paths.train_manifest = out_dir / "train" / "manifest.csv";
  paths.eval_manifest = out_dir / "eval" / "manifest.csv";
  paths.trials = out_dir / "eval" / "trials.txt";
  WriteTrials(paths.trials, TrialsForManifest(eval));
  LogInfo("wrote " + std::to_string(train.entries.size()) + " training and " +
          std::to_string(eval.entries.size()) + " evaluation utterances to " +
          out_dir.string());
  return paths;
}

ExperimentData LoadExperimentData(const CorpusPaths& paths, double vad_offset) {
  ExperimentData data;
  data.train = MakeLabeledSet(LoadCorpus(ReadManifest(paths.train_manifest), vad_offset));
  data.eval = LoadCorpus(ReadManifest(paths.eval_manifest), vad_offset);
  data.trials = ReadTrials(paths.trials);
  return data;
}

std::vector<Embedding> ExtractEmbeddings(Model<float>& model,
                                         const std::vector<FeatureMatrix>& utts) {
  std::vector<Embedding> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(ExtractEmbedding(model, u));
  return out;
}

SystemResult RunSystem(const RunConfig& config, const std::string& name,
                       const ExperimentData& data, const fs::path& out_dir) {
  EnsureDirectory(out_dir);
  ModelConfig model_config = config.model;
  model_config.num_speakers = int(data.train.speakers.size());
  TrainState state = TrainState::Fresh(model_config);
  state.corpus_seed = config.train_corpus.seed;
  const fs::path log_path = out_dir / "train_log.csv";
  fs::remove(log_path);

  SystemResult result;
  result.name = name;
  result.training = Train(state, data.train, {out_dir / "model.ckpt", log_path, nullptr});

  const auto train_embeddings = ExtractEmbeddings(state.model, data.train.utterances);
  const auto eval_embeddings = ExtractEmbeddings(state.model, data.eval);
  WriteEmbeddings(out_dir / "train_embeddings.txt", train_embeddings);
  WriteEmbeddings(out_dir / "eval_embeddings.txt", eval_embeddings);

  const Backend backend =
      FitBackend(train_embeddings, config.backend.lda_dim,
                 config.backend.length_norm, {config.backend.plda_iterations});
  SaveBackend(out_dir / "backend.bin", backend);
  const auto scores =
      ScoreTrials(data.trials, eval_embeddings, backend.preprocessor,
                  config.backend.scorer, backend.plda ? &*backend.plda : nullptr);
  WriteScores(out_dir / "scores.txt", scores);
  result.metrics = EvaluateScores(data.trials, scores, config.dcf);
  WriteMetricsCsv(out_dir / "metrics.csv", result.metrics);
  return result;
}

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"x-vector training with a statistics-reconstruction auxiliary task",
               "xvmtl"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings");

  CommonOptions common;
  std::string out, data_path, model_path, embeddings, backend_path, trials, scores;
  bool resume = false;
  std::vector<double> alphas = {0.0, 0.3};
  std::vector<int> orders = {4};
  std::uint64_t gradcheck_seed = 1;
  auto add_common = [&](CLI::App* cmd) {
    AddConfigOptions(cmd, &common);
    cmd->add_option("--seed", common.seed, "Training seed (gen-data: corpus seed)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpora");
  add_common(gen);
  gen->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a network");
  add_common(train);
  train->add_option("--data", data_path, "Training manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--alpha", common.alpha, "Task weight")->check(CLI::Range(0.0, 1.0));
  train->add_option("--order", common.order, "Reconstruction order n (1-4)");
  train->add_flag("--resume", resume, "Continue from <out>/model.ckpt if present");

  auto* extract = app.add_subcommand("extract", "Extract embeddings");
  extract->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  extract->add_option("--data", data_path, "Manifest")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", out, "Embedding file")->required();

  auto* fit = app.add_subcommand("train-backend", "Fit centering, LDA and PLDA");
  add_common(fit);
  fit->add_option("--embeddings", embeddings, "Training embeddings")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Backend file")->required();
  fit->add_option("--lda-dim", common.lda_dim, "LDA dimension");

  auto* score = app.add_subcommand("score", "Score a trial list");
  add_common(score);
  score->add_option("--backend", backend_path, "Backend file")->required()->check(CLI::ExistingFile);
  score->add_option("--embeddings", embeddings, "Embeddings")->required()->check(CLI::ExistingFile);
  score->add_option("--trials", trials, "Trial list")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out, "Score file")->required();
  score->add_option("--scorer", common.scorer, "plda or cosine")
      ->check(CLI::IsMember({"plda", "cosine"}));

  auto* evaluate = app.add_subcommand("evaluate", "Detection metrics of a score file");
  add_common(evaluate);
  evaluate->add_option("--scores", scores, "Score file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--trials", trials, "Trial list")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out, "Metrics CSV");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_option("--seed", gradcheck_seed, "Seed for the random cases");

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate a grid of systems");
  add_common(sweep);
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--alphas", alphas, "Task weights")->delimiter(',');
  sweep->add_option("--orders", orders, "Reconstruction orders")->delimiter(',');
  sweep->add_option("--lda-dim", common.lda_dim, "LDA dimension");
  sweep->add_option("--scorer", common.scorer, "plda or cosine")
      ->check(CLI::IsMember({"plda", "cosine"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (quiet) LogThreshold() = LogLevel::kWarning;

  try {
    if (*gen) return RunGenData(common, out);
    if (*train) return RunTrain(common, data_path, out, resume);
    if (*extract) return RunExtract(model_path, data_path, out);
    if (*fit) return RunTrainBackend(common, embeddings, out);
    if (*score) return RunScore(common, backend_path, embeddings, trials, out);
    if (*evaluate) return RunEvaluate(common, scores, trials, out);
    if (*gradcheck) return RunGradCheck(gradcheck_seed);
    if (*sweep) {
      for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw UsageError("--alphas entries must be in [0, 1]");
      }
      return RunSweep(common, out, alphas, orders);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "ERROR %s: %s\n", ErrorKind(e), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "INTERNAL ERROR: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace xvmtl
