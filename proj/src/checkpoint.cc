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

#include "xvmtl/checkpoint.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "xvmtl/binary_io.h"
#include "xvmtl/errors.h"

namespace xvmtl {

namespace {

constexpr char kCheckpointMagic[] = "XVCK";

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <std::size_t N>
std::string JoinInts(const std::array<int, N>& values) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ',';
    s += std::to_string(values[i]);
  }
  return s;
}

template <std::size_t N>
std::array<int, N> ParseInts(const std::string& key, const std::string& text) {
  std::array<int, N> out{};
  std::istringstream is(text);
  std::string field;
  std::size_t i = 0;
  while (std::getline(is, field, ',')) {
    if (i >= N) break;
    out[i++] = std::stoi(field);
  }
  if (i != N) throw ParseError(key + ": expected " + std::to_string(N) + " values");
  return out;
}

}  // namespace

TrainState TrainState::Fresh(const ModelConfig& config) {
  Model<float> model(config);
  auto optimizer = OptimizerState<float>::Create(model.Parameters(),
                                                 config.optimizer);
  return TrainState{std::move(model), std::move(optimizer), 0, 0};
}

std::string SerializeModelConfig(const ModelConfig& c) {
  std::ostringstream os;
  os << "feature_dim=" << c.feature_dim << '\n'
     << "frame_widths=" << JoinInts(c.frame_widths) << '\n'
     << "kernel_sizes=" << JoinInts(c.kernel_sizes) << '\n'
     << "dilations=" << JoinInts(c.dilations) << '\n'
     << "l6_width=" << c.l6_width << '\n'
     << "l7_width=" << c.l7_width << '\n'
     << "num_speakers=" << c.num_speakers << '\n'
     << "mtl_order=" << c.mtl_order << '\n'
     << "task_weight=" << FormatDouble(c.task_weight) << '\n'
     << "learning_rate=" << FormatDouble(c.optimizer.learning_rate) << '\n'
     << "beta1=" << FormatDouble(c.optimizer.beta1) << '\n'
     << "beta2=" << FormatDouble(c.optimizer.beta2) << '\n'
     << "adam_epsilon=" << FormatDouble(c.optimizer.epsilon) << '\n'
     << "weight_decay=" << FormatDouble(c.optimizer.weight_decay) << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "crop_length=" << c.crop_length << '\n'
     << "epochs=" << c.epochs << '\n'
     << "vad_offset=" << FormatDouble(c.vad_offset) << '\n'
     << "seed=" << c.seed << '\n';
  return os.str();
}

ModelConfig ParseModelConfig(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("bad config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("checkpoint config lacks " + key);
    return it->second;
  };
  ModelConfig c;
  try {
    c.feature_dim = std::stoi(get("feature_dim"));
    c.frame_widths = ParseInts<kNumFrameLayers>("frame_widths", get("frame_widths"));
    c.kernel_sizes = ParseInts<kNumFrameLayers>("kernel_sizes", get("kernel_sizes"));
    c.dilations = ParseInts<kNumFrameLayers>("dilations", get("dilations"));
    c.l6_width = std::stoi(get("l6_width"));
    c.l7_width = std::stoi(get("l7_width"));
    c.num_speakers = std::stoi(get("num_speakers"));
    c.mtl_order = std::stoi(get("mtl_order"));
    c.task_weight = std::stod(get("task_weight"));
    c.optimizer.learning_rate = std::stod(get("learning_rate"));
    c.optimizer.beta1 = std::stod(get("beta1"));
    c.optimizer.beta2 = std::stod(get("beta2"));
    c.optimizer.epsilon = std::stod(get("adam_epsilon"));
    c.optimizer.weight_decay = std::stod(get("weight_decay"));
    c.batch_size = std::stoi(get("batch_size"));
    c.crop_length = std::stoi(get("crop_length"));
    c.epochs = std::stoi(get("epochs"));
    c.vad_offset = std::stod(get("vad_offset"));
    c.seed = std::stoull(get("seed"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed checkpoint config value: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw ParseError(std::string("checkpoint config value out of range: ") +
                     e.what());
  }
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const TrainState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const auto params = state.model.Parameters();
  const auto norms = state.model.NormStats();
  binary::WriteMagic(os, kCheckpointMagic);
  binary::WritePod<std::uint32_t>(os, kCheckpointVersion);
  binary::WriteString(os, SerializeModelConfig(state.model.config()));
  binary::WritePod<std::uint64_t>(os, state.optimizer.step);
  binary::WritePod<std::uint64_t>(os, state.epochs_completed);
  binary::WritePod<std::uint64_t>(os, state.corpus_seed);
  const std::size_t count = params.size() * 3 + norms.size() * 2;
  binary::WritePod<std::uint32_t>(os, std::uint32_t(count));
  for (const auto& p : params) {
    binary::WriteFloatTensor(os, p.tensor.shape(), p.tensor.values());
  }
  for (const auto* n : norms) {
    binary::WriteFloatTensor(os, {n->mean.size()}, n->mean);
    binary::WriteFloatTensor(os, {n->var.size()}, n->var);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    binary::WriteFloatTensor(os, params[i].tensor.shape(),
                             state.optimizer.first_moment[i]);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    binary::WriteFloatTensor(os, params[i].tensor.shape(),
                             state.optimizer.second_moment[i]);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

TrainState LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  binary::ExpectMagic(is, kCheckpointMagic, path.string());
  const auto version = binary::ReadPod<std::uint32_t>(is, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version " +
                     std::to_string(version));
  }
  const ModelConfig config = ParseModelConfig(binary::ReadString(is, "config"));
  TrainState state = TrainState::Fresh(config);
  state.optimizer.step = binary::ReadPod<std::uint64_t>(is, "optimizer step");
  state.epochs_completed = binary::ReadPod<std::uint64_t>(is, "epoch counter");
  state.corpus_seed = binary::ReadPod<std::uint64_t>(is, "corpus seed");
  auto params = state.model.Parameters();
  auto norms = state.model.NormStats();
  const auto count = binary::ReadPod<std::uint32_t>(is, "tensor count");
  if (count != params.size() * 3 + norms.size() * 2) {
    throw DimMismatchError(path.string() + ": tensor count " +
                           std::to_string(count) + " does not match config");
  }
  auto load_into = [&](std::span<float> dst, const ad::Shape& shape,
                       const std::string& name) {
    const auto values = binary::ReadFloatTensor(is, shape, name);
    std::copy(values.begin(), values.end(), dst.begin());
  };
  for (auto& p : params) load_into(p.tensor.values(), p.tensor.shape(), p.name);
  for (auto* n : norms) {
    load_into(n->mean, {n->mean.size()}, "running mean");
    load_into(n->var, {n->var.size()}, "running var");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    load_into(state.optimizer.first_moment[i], params[i].tensor.shape(),
              params[i].name + " first moment");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    load_into(state.optimizer.second_moment[i], params[i].tensor.shape(),
              params[i].name + " second moment");
  }
  return state;
}

}  // namespace xvmtl
