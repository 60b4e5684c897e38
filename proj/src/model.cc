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

#include "xvmtl/model.h"

#include <cmath>
#include <random>

#include "xvmtl/errors.h"

namespace xvmtl {

namespace {

constexpr double kHeadGain = 0.1;

template <typename T>
ad::Tensor<T> UniformTensor(ad::Shape shape, double bound,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> values(ad::NumElements(shape));
  for (T& v : values) v = T(dist(rng));
  return ad::Tensor<T>(std::move(shape), std::move(values), true);
}

template <typename T>
ad::Tensor<T> FilledTensor(std::size_t n, T value) {
  return ad::Tensor<T>({n}, std::vector<T>(n, value), true);
}

std::size_t AffineCount(std::size_t in, std::size_t out) {
  return in * out + out;
}

}  // namespace

std::vector<std::string> ModelConfig::Violations() const {
  std::vector<std::string> v;
  if (feature_dim < 1) v.push_back("feature_dim must be >= 1");
  for (int i = 0; i < kNumFrameLayers; ++i) {
    const std::string layer = "frame layer " + std::to_string(i + 1);
    if (frame_widths[i] < 1) v.push_back(layer + ": width must be >= 1");
    if (kernel_sizes[i] < 1) v.push_back(layer + ": kernel size must be >= 1");
    if (dilations[i] < 1) v.push_back(layer + ": dilation must be >= 1");
  }
  if (l6_width < 1) v.push_back("l6_width must be >= 1");
  if (l7_width < 1) v.push_back("l7_width must be >= 1");
  if (num_speakers < 2) v.push_back("num_speakers must be >= 2");
  if (mtl_order < 1 || mtl_order > 4) v.push_back("mtl_order must be in 1..4");
  if (!(task_weight >= 0.0 && task_weight <= 1.0)) {
    v.push_back("task_weight must be in [0, 1]");
  }
  if (!(optimizer.learning_rate > 0.0)) v.push_back("learning_rate must be > 0");
  if (!(optimizer.weight_decay >= 0.0)) v.push_back("weight_decay must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) {
    v.push_back("beta1 must be in [0, 1)");
  }
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    v.push_back("beta2 must be in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) v.push_back("adam_epsilon must be > 0");
  if (batch_size < 2) v.push_back("batch_size must be >= 2");
  if (epochs < 0) v.push_back("epochs must be >= 0");
  if (crop_length < MinimumFrames()) {
    v.push_back("crop_length must be >= " + std::to_string(MinimumFrames()));
  }
  return v;
}

void ModelConfig::Validate() const {
  const auto v = Violations();
  if (v.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ConfigError(msg);
}

int ModelConfig::ReceptiveField() const {
  int context = 0;
  for (int i = 0; i < kNumFrameLayers; ++i) {
    context += (kernel_sizes[i] - 1) * dilations[i];
  }
  return context + 1;
}

ModelConfig MiniatureConfig() {
  ModelConfig c;
  c.feature_dim = 6;
  c.frame_widths = {16, 16, 16, 16, 32};
  c.l6_width = 12;
  c.l7_width = 12;
  c.num_speakers = 5;
  c.mtl_order = 4;
  c.batch_size = 8;
  c.crop_length = 40;
  return c;
}

template <typename T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  std::size_t in = config_.feature_dim;
  for (int i = 0; i < kNumFrameLayers; ++i) {
    FrameLayer<T>& layer = frame_layers[i];
    const std::size_t out = config_.frame_widths[i];
    const std::size_t k = config_.kernel_sizes[i];
    layer.weight = UniformTensor<T>({out, in, k}, std::sqrt(6.0 / double(in * k)),
                                    rng);
    layer.bias = FilledTensor<T>(out, T(0));
    layer.gamma = FilledTensor<T>(out, T(1));
    layer.beta = FilledTensor<T>(out, T(0));
    layer.norm = ad::BatchNormStats<T>::Initial(out);
    layer.dilation = config_.dilations[i];
    in = out;
  }
  auto init_segment = [&](SegmentLayer<T>& layer, std::size_t fan_in,
                          std::size_t out) {
    layer.weight =
        UniformTensor<T>({out, fan_in}, std::sqrt(6.0 / double(fan_in)), rng);
    layer.bias = FilledTensor<T>(out, T(0));
    layer.gamma = FilledTensor<T>(out, T(1));
    layer.beta = FilledTensor<T>(out, T(0));
    layer.norm = ad::BatchNormStats<T>::Initial(out);
  };
  init_segment(l6, 2 * in, config_.l6_width);
  init_segment(l7, config_.l6_width, config_.l7_width);
  auto init_head = [&](LinearHead<T>& head, std::size_t fan_in,
                       std::size_t out) {
    head.weight = UniformTensor<T>(
        {out, fan_in}, kHeadGain * std::sqrt(3.0 / double(fan_in)), rng);
    head.bias = FilledTensor<T>(out, T(0));
  };
  init_head(speaker_head, config_.l7_width, config_.num_speakers);
  init_head(reconstruction_head, config_.l7_width,
            config_.reconstruction_dim());
}

template <typename T>
Model<T> Model<T>::Clone() const {
  Model copy = *this;
  for (auto& layer : copy.frame_layers) {
    for (auto* t : {&layer.weight, &layer.bias, &layer.gamma, &layer.beta}) {
      *t = t->Clone();
    }
  }
  for (auto* layer : {&copy.l6, &copy.l7}) {
    for (auto* t : {&layer->weight, &layer->bias, &layer->gamma, &layer->beta}) {
      *t = t->Clone();
    }
  }
  for (auto* head : {&copy.speaker_head, &copy.reconstruction_head}) {
    head->weight = head->weight.Clone();
    head->bias = head->bias.Clone();
  }
  return copy;
}

template <typename T>
std::vector<NamedParameter<T>> Model<T>::Parameters() const {
  std::vector<NamedParameter<T>> p;
  for (int i = 0; i < kNumFrameLayers; ++i) {
    const std::string prefix = "l" + std::to_string(i + 1) + ".";
    const FrameLayer<T>& layer = frame_layers[i];
    p.push_back({prefix + "weight", layer.weight});
    p.push_back({prefix + "bias", layer.bias});
    p.push_back({prefix + "gamma", layer.gamma});
    p.push_back({prefix + "beta", layer.beta});
  }
  for (const auto* layer : {&l6, &l7}) {
    const std::string prefix = layer == &l6 ? "l6." : "l7.";
    p.push_back({prefix + "weight", layer->weight});
    p.push_back({prefix + "bias", layer->bias});
    p.push_back({prefix + "gamma", layer->gamma});
    p.push_back({prefix + "beta", layer->beta});
  }
  p.push_back({"speaker_head.weight", speaker_head.weight});
  p.push_back({"speaker_head.bias", speaker_head.bias});
  p.push_back({"reconstruction_head.weight", reconstruction_head.weight});
  p.push_back({"reconstruction_head.bias", reconstruction_head.bias});
  return p;
}

template <typename T>
std::vector<ad::BatchNormStats<T>*> Model<T>::NormStats() {
  std::vector<ad::BatchNormStats<T>*> out;
  for (auto& layer : frame_layers) out.push_back(&layer.norm);
  out.push_back(&l6.norm);
  out.push_back(&l7.norm);
  return out;
}

template <typename T>
std::vector<const ad::BatchNormStats<T>*> Model<T>::NormStats() const {
  std::vector<const ad::BatchNormStats<T>*> out;
  for (const auto& layer : frame_layers) out.push_back(&layer.norm);
  out.push_back(&l6.norm);
  out.push_back(&l7.norm);
  return out;
}

template <typename T>
std::size_t Model<T>::NumParameters() const {
  std::size_t n = 0;
  for (const auto& p : Parameters()) n += p.tensor.numel();
  return n;
}

template <typename T>
ForwardOutput<T> Forward(Model<T>& model, const ad::Tensor<T>& batch,
                         ad::NormMode mode, ad::Tape<T>* tape,
                         ForwardHeads heads) {
  const ModelConfig& config = model.config();
  if (batch.rank() != 3) {
    throw ConfigError("forward expects [N x L x D], got " +
                      ad::ShapeToString(batch.shape()));
  }
  if (batch.dim(2) != std::size_t(config.feature_dim)) {
    throw ConfigError("feature dim " + std::to_string(batch.dim(2)) +
                      " does not match model feature_dim " +
                      std::to_string(config.feature_dim));
  }
  const std::size_t min_frames = config.MinimumFrames();
  if (batch.dim(1) < min_frames) {
    throw InputTooShortError("forward", min_frames, batch.dim(1));
  }

  ad::Tensor<T> x = batch;
  for (auto& layer : model.frame_layers) {
    x = ad::Conv1dDilated(tape, x, layer.weight, layer.bias, layer.dilation);
    x = ad::Relu(tape, x);
    x = ad::BatchNorm1d(tape, x, layer.gamma, layer.beta, mode, &layer.norm);
  }
  x = ad::StatsPool(tape, x);

  ForwardOutput<T> out;
  out.embedding = ad::Dense(tape, x, model.l6.weight, model.l6.bias,
                            ad::Activation::kNone);
  x = ad::Relu(tape, out.embedding);
  x = ad::BatchNorm1d(tape, x, model.l6.gamma, model.l6.beta, mode,
                      &model.l6.norm);
  x = ad::Dense(tape, x, model.l7.weight, model.l7.bias, ad::Activation::kRelu);
  x = ad::BatchNorm1d(tape, x, model.l7.gamma, model.l7.beta, mode,
                      &model.l7.norm);
  if (heads.speaker) {
    out.logits = ad::Dense(tape, x, model.speaker_head.weight,
                           model.speaker_head.bias, ad::Activation::kNone);
  }
  if (heads.reconstruction) {
    out.reconstruction =
        ad::Dense(tape, x, model.reconstruction_head.weight,
                  model.reconstruction_head.bias, ad::Activation::kNone);
  }
  return out;
}

template <typename T>
LossTerms<T> MultitaskLoss(ad::Tape<T>* tape, const ad::Tensor<T>& logits,
                           std::span<const int> labels,
                           const ad::Tensor<T>& reconstruction,
                           const ad::Tensor<T>& targets, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("task weight must be in [0, 1], got " +
                      std::to_string(alpha));
  }
  LossTerms<T> out;
  if (logits.defined()) out.ce = ad::SoftmaxCrossEntropy(tape, logits, labels);
  if (reconstruction.defined()) {
    if (!targets.defined()) {
      throw ConfigError("reconstruction given without targets");
    }
    out.mse = ad::MseLoss(tape, reconstruction, targets);
  }
  if (!out.ce.defined() && alpha < 1.0) {
    throw ConfigError("cross-entropy branch required when task weight < 1");
  }
  if (!out.mse.defined() && alpha > 0.0) {
    throw ConfigError("reconstruction branch required when task weight > 0");
  }
  if (out.ce.defined() && out.mse.defined()) {
    out.loss = ad::WeightedSum(tape, out.mse, T(alpha), out.ce, T(1.0 - alpha));
  } else if (out.ce.defined()) {
    out.loss = out.ce;
  } else {
    out.loss = out.mse;
  }
  return out;
}

template <typename T>
Embedding ExtractEmbedding(Model<T>& model, const FeatureMatrix& utterance) {
  const ModelConfig& config = model.config();
  const std::size_t min_frames = config.MinimumFrames();
  if (utterance.num_frames < min_frames) {
    throw InputTooShortError("extract " + utterance.utt_id, min_frames,
                             utterance.num_frames);
  }
  if (utterance.dim != std::size_t(config.feature_dim)) {
    throw DataError(utterance.utt_id + ": feature dim " +
                    std::to_string(utterance.dim) + " != model feature_dim " +
                    std::to_string(config.feature_dim));
  }
  std::vector<T> values(utterance.frames.begin(), utterance.frames.end());
  ad::Tensor<T> x({1, utterance.num_frames, utterance.dim}, std::move(values));
  for (auto& layer : model.frame_layers) {
    x = ad::Conv1dDilated<T>(nullptr, x, layer.weight, layer.bias,
                             layer.dilation);
    x = ad::Relu<T>(nullptr, x);
    x = ad::BatchNorm1d<T>(nullptr, x, layer.gamma, layer.beta,
                           ad::NormMode::kInfer, &layer.norm);
  }
  x = ad::StatsPool<T>(nullptr, x);
  x = ad::Dense<T>(nullptr, x, model.l6.weight, model.l6.bias,
                   ad::Activation::kNone);
  Embedding e{utterance.utt_id, utterance.speaker_id, {}};
  e.values.assign(x.values().begin(), x.values().end());
  return e;
}

std::size_t CountParameters(const ModelConfig& config,
                            bool with_reconstruction_head) {
  std::size_t n = 0;
  std::size_t in = config.feature_dim;
  for (int i = 0; i < kNumFrameLayers; ++i) {
    const std::size_t out = config.frame_widths[i];
    n += out * in * config.kernel_sizes[i] + out;  // conv
    n += 2 * out;                                  // batch norm
    in = out;
  }
  n += AffineCount(2 * in, config.l6_width) + 2 * config.l6_width;
  n += AffineCount(config.l6_width, config.l7_width) + 2 * config.l7_width;
  n += AffineCount(config.l7_width, config.num_speakers);
  if (with_reconstruction_head && config.mtl_order > 0) {
    n += AffineCount(config.l7_width,
                     std::size_t(config.mtl_order) * config.feature_dim);
  }
  return n;
}

ParameterCount ParameterOverhead(const ModelConfig& config) {
  ParameterCount c;
  c.baseline_params = CountParameters(config, false);
  c.mtl_params = CountParameters(config, true);
  c.ratio = double(c.mtl_params - c.baseline_params) / double(c.baseline_params);
  return c;
}

template class Model<float>;
template class Model<double>;
template ForwardOutput<float> Forward(Model<float>&, const ad::Tensor<float>&,
                                      ad::NormMode, ad::Tape<float>*,
                                      ForwardHeads);
template ForwardOutput<double> Forward(Model<double>&,
                                       const ad::Tensor<double>&, ad::NormMode,
                                       ad::Tape<double>*, ForwardHeads);
template LossTerms<float> MultitaskLoss(ad::Tape<float>*,
                                        const ad::Tensor<float>&,
                                        std::span<const int>,
                                        const ad::Tensor<float>&,
                                        const ad::Tensor<float>&, double);
template LossTerms<double> MultitaskLoss(ad::Tape<double>*,
                                         const ad::Tensor<double>&,
                                         std::span<const int>,
                                         const ad::Tensor<double>&,
                                         const ad::Tensor<double>&, double);
template Embedding ExtractEmbedding(Model<float>&, const FeatureMatrix&);
template Embedding ExtractEmbedding(Model<double>&, const FeatureMatrix&);

}  // namespace xvmtl
