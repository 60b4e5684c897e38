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

#include "xvmtl/run_config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "xvmtl/errors.h"

namespace xvmtl {

namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

template <typename T>
std::string FormatNumber(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

bool ParseBool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("invalid value '" + text + "' for " + key +
                    " (expected true or false)");
}

std::array<int, kNumFrameLayers> ParseLayerList(const std::string& key,
                                                const std::string& text) {
  std::array<int, kNumFrameLayers> out{};
  std::istringstream is(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(is, item, ',')) {
    if (i < out.size()) out[i] = ParseNumber<int>(key, Trim(item));
    ++i;
  }
  if (i != out.size()) {
    throw ConfigError(key + " needs exactly " + std::to_string(kNumFrameLayers) +
                      " comma-separated integers");
  }
  return out;
}

std::string FormatLayerList(const std::array<int, kNumFrameLayers>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// Binds a key to one field reached through `field`; `mirror` copies the value
// into fields that must stay equal to it.
template <typename T>
Key NumberKey(std::string name, T& (*field)(RunConfig&),
              void (*mirror)(RunConfig&) = nullptr) {
  return {name,
          [field](const RunConfig& c) {
            return FormatNumber(field(const_cast<RunConfig&>(c)));
          },
          [name, field, mirror](RunConfig& c, const std::string& v) {
            field(c) = ParseNumber<T>(name, v);
            if (mirror) mirror(c);
          }};
}

const std::vector<Key>& Keys() {
  static const std::vector<Key> keys = [] {
    using R = RunConfig;
    std::vector<Key> k;
    auto sync_corpora = +[](R& c) {
      c.train_corpus.feature_dim = c.model.feature_dim;
      c.eval_corpus.feature_dim = c.model.feature_dim;
    };
    k.push_back(NumberKey<int>(
        "feature_dim", +[](R& c) -> int& { return c.model.feature_dim; },
        sync_corpora));
    for (auto [name, field] :
         {std::pair{"frame_widths",
                    +[](R& c) -> std::array<int, kNumFrameLayers>& {
                      return c.model.frame_widths;
                    }},
          std::pair{"kernel_sizes",
                    +[](R& c) -> std::array<int, kNumFrameLayers>& {
                      return c.model.kernel_sizes;
                    }},
          std::pair{"dilations",
                    +[](R& c) -> std::array<int, kNumFrameLayers>& {
                      return c.model.dilations;
                    }}}) {
      k.push_back({name,
                   [field](const R& c) {
                     return FormatLayerList(field(const_cast<R&>(c)));
                   },
                   [name, field](R& c, const std::string& v) {
                     field(c) = ParseLayerList(name, v);
                   }});
    }
    k.push_back(NumberKey<int>("l6_width", +[](R& c) -> int& { return c.model.l6_width; }));
    k.push_back(NumberKey<int>("l7_width", +[](R& c) -> int& { return c.model.l7_width; }));
    k.push_back(NumberKey<int>("mtl_order", +[](R& c) -> int& { return c.model.mtl_order; }));
    k.push_back(NumberKey<double>("task_weight", +[](R& c) -> double& { return c.model.task_weight; }));
    k.push_back(NumberKey<double>("learning_rate", +[](R& c) -> double& { return c.model.optimizer.learning_rate; }));
    k.push_back(NumberKey<double>("beta1", +[](R& c) -> double& { return c.model.optimizer.beta1; }));
    k.push_back(NumberKey<double>("beta2", +[](R& c) -> double& { return c.model.optimizer.beta2; }));
    k.push_back(NumberKey<double>("adam_epsilon", +[](R& c) -> double& { return c.model.optimizer.epsilon; }));
    k.push_back(NumberKey<double>("weight_decay", +[](R& c) -> double& { return c.model.optimizer.weight_decay; }));
    k.push_back(NumberKey<int>("batch_size", +[](R& c) -> int& { return c.model.batch_size; }));
    k.push_back(NumberKey<int>("crop_length", +[](R& c) -> int& { return c.model.crop_length; }));
    k.push_back(NumberKey<int>("epochs", +[](R& c) -> int& { return c.model.epochs; }));
    k.push_back(NumberKey<double>("vad_offset", +[](R& c) -> double& { return c.model.vad_offset; }));
    k.push_back(NumberKey<std::uint64_t>("seed", +[](R& c) -> std::uint64_t& { return c.model.seed; }));

    // Utterance shape is shared by the training and evaluation corpora.
    k.push_back(NumberKey<int>(
        "min_frames", +[](R& c) -> int& { return c.train_corpus.min_frames; },
        +[](R& c) { c.eval_corpus.min_frames = c.train_corpus.min_frames; }));
    k.push_back(NumberKey<int>(
        "max_frames", +[](R& c) -> int& { return c.train_corpus.max_frames; },
        +[](R& c) { c.eval_corpus.max_frames = c.train_corpus.max_frames; }));
    k.push_back(NumberKey<double>(
        "temporal_correlation",
        +[](R& c) -> double& { return c.train_corpus.temporal_correlation; },
        +[](R& c) {
          c.eval_corpus.temporal_correlation = c.train_corpus.temporal_correlation;
        }));
    k.push_back(NumberKey<double>(
        "speaker_spread", +[](R& c) -> double& { return c.train_corpus.speaker_spread; },
        +[](R& c) { c.eval_corpus.speaker_spread = c.train_corpus.speaker_spread; }));
    k.push_back(NumberKey<double>(
        "silence_fraction",
        +[](R& c) -> double& { return c.train_corpus.silence_fraction; },
        +[](R& c) {
          c.eval_corpus.silence_fraction = c.train_corpus.silence_fraction;
        }));

    k.push_back(NumberKey<int>("num_speakers", +[](R& c) -> int& { return c.train_corpus.num_speakers; }));
    k.push_back(NumberKey<int>("utterances_per_speaker", +[](R& c) -> int& { return c.train_corpus.utterances_per_speaker; }));
    k.push_back(NumberKey<std::uint64_t>("corpus_seed", +[](R& c) -> std::uint64_t& { return c.train_corpus.seed; }));
    k.push_back({"speaker_prefix",
                 [](const R& c) { return c.train_corpus.speaker_prefix; },
                 [](R& c, const std::string& v) { c.train_corpus.speaker_prefix = v; }});
    k.push_back(NumberKey<int>("eval_num_speakers", +[](R& c) -> int& { return c.eval_corpus.num_speakers; }));
    k.push_back(NumberKey<int>("eval_utterances_per_speaker", +[](R& c) -> int& { return c.eval_corpus.utterances_per_speaker; }));
    k.push_back(NumberKey<std::uint64_t>("eval_corpus_seed", +[](R& c) -> std::uint64_t& { return c.eval_corpus.seed; }));
    k.push_back({"eval_speaker_prefix",
                 [](const R& c) { return c.eval_corpus.speaker_prefix; },
                 [](R& c, const std::string& v) { c.eval_corpus.speaker_prefix = v; }});

    k.push_back(NumberKey<int>("lda_dim", +[](R& c) -> int& { return c.backend.lda_dim; }));
    k.push_back({"length_norm",
                 [](const R& c) {
                   return std::string(c.backend.length_norm ? "true" : "false");
                 },
                 [](R& c, const std::string& v) {
                   c.backend.length_norm = ParseBool("length_norm", v);
                 }});
    k.push_back(NumberKey<int>("plda_iterations", +[](R& c) -> int& { return c.backend.plda_iterations; }));
    k.push_back({"scorer", [](const R& c) { return ScorerName(c.backend.scorer); },
                 [](R& c, const std::string& v) { c.backend.scorer = ParseScorer(v); }});
    k.push_back(NumberKey<double>("p_target", +[](R& c) -> double& { return c.dcf.p_target; }));
    k.push_back(NumberKey<double>("c_miss", +[](R& c) -> double& { return c.dcf.c_miss; }));
    k.push_back(NumberKey<double>("c_fa", +[](R& c) -> double& { return c.dcf.c_fa; }));
    return k;
  }();
  return keys;
}

}  // namespace

RunConfig::RunConfig() {
  model.feature_dim = train_corpus.feature_dim;
  eval_corpus.num_speakers = 20;
  eval_corpus.utterances_per_speaker = 10;
  eval_corpus.seed = 2;
  eval_corpus.speaker_prefix = "eval";
}

void RunConfig::Validate() const {
  std::vector<std::string> problems;
  for (auto& v : model.Violations()) problems.push_back(v);
  for (const CorpusSpec* corpus : {&train_corpus, &eval_corpus}) {
    try {
      corpus->Validate();
    } catch (const ConfigError& e) {
      problems.push_back(std::string(corpus == &train_corpus ? "training" : "evaluation") +
                         " corpus: " + e.what());
    }
  }
  if (train_corpus.speaker_prefix == eval_corpus.speaker_prefix) {
    problems.push_back("speaker_prefix and eval_speaker_prefix must differ");
  }
  if (backend.lda_dim < 1) problems.push_back("lda_dim must be >= 1");
  if (backend.plda_iterations < 0) problems.push_back("plda_iterations must be >= 0");
  try {
    dcf.Validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid run configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::vector<std::string> RunConfigKeys() {
  std::vector<std::string> names;
  for (const auto& k : Keys()) names.push_back(k.name);
  return names;
}

void SetRunConfigValue(RunConfig* config, const std::string& key,
                       const std::string& value) {
  for (const auto& k : Keys()) {
    if (k.name == key) {
      k.set(*config, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig ParseRunConfig(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' given twice");
    }
    try {
      SetRunConfigValue(&config, key, Trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << is.rdbuf();
  return ParseRunConfig(text.str());
}

std::string SerializeRunConfig(const RunConfig& config) {
  std::string out;
  for (const auto& k : Keys()) out += k.name + " = " + k.get(config) + '\n';
  return out;
}

std::string ScorerName(ScorerKind kind) {
  return kind == ScorerKind::kPlda ? "plda" : "cosine";
}

ScorerKind ParseScorer(const std::string& name) {
  if (name == "plda") return ScorerKind::kPlda;
  if (name == "cosine") return ScorerKind::kCosine;
  throw ConfigError("unknown scorer '" + name + "' (expected plda or cosine)");
}

}  // namespace xvmtl
