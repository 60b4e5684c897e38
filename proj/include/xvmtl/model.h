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

// The x-vector network with an auxiliary statistics-reconstruction head.
//
//   input [N x L x D]
//   5 frame layers: dilated conv -> ReLU -> batch norm
//   statistics pooling: [mean; std] over time
//   l6: affine (embedding tap) -> ReLU -> batch norm
//   l7: affine -> ReLU -> batch norm
//   speaker head: affine -> logits [N x C]
//   reconstruction head: affine -> h [N x order*D]
//
// Training minimizes alpha * MSE(h, z) + (1 - alpha) * CE(logits, labels).

#ifndef XVMTL_MODEL_H_
#define XVMTL_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xvmtl/autodiff.h"
#include "xvmtl/data.h"
#include "xvmtl/optimizer.h"

namespace xvmtl {

constexpr int kNumFrameLayers = 5;

struct ModelConfig {
  int feature_dim = 23;
  std::array<int, kNumFrameLayers> frame_widths = {512, 512, 512, 512, 1536};
  std::array<int, kNumFrameLayers> kernel_sizes = {5, 3, 3, 1, 1};
  std::array<int, kNumFrameLayers> dilations = {1, 2, 3, 1, 1};
  int l6_width = 512;
  int l7_width = 512;
  int num_speakers = 2;
  int mtl_order = 4;
  double task_weight = 0.3;

  AdamOptions optimizer;
  int batch_size = 64;
  int crop_length = 200;
  int epochs = 20;
  double vad_offset = 4.0;
  std::uint64_t seed = 1;

  // Every violated constraint, empty when valid.
  std::vector<std::string> Violations() const;
  // Throws ConfigError listing all violations.
  void Validate() const;

  // Input frames seen by one frame-level output (15 for the standard stack).
  int ReceptiveField() const;
  // Statistics pooling needs two frame-level outputs.
  int MinimumFrames() const { return ReceptiveField() + 1; }
  int embedding_dim() const { return l6_width; }
  int reconstruction_dim() const { return mtl_order * feature_dim; }
};

// Layer sizes of the desk-scale test network.
ModelConfig MiniatureConfig();

template <typename T>
struct FrameLayer {
  ad::Tensor<T> weight;  // [C_out x C_in x k]
  ad::Tensor<T> bias;
  ad::Tensor<T> gamma;
  ad::Tensor<T> beta;
  ad::BatchNormStats<T> norm;
  std::size_t dilation = 1;
};

template <typename T>
struct SegmentLayer {
  ad::Tensor<T> weight;  // [F_out x F_in]
  ad::Tensor<T> bias;
  ad::Tensor<T> gamma;
  ad::Tensor<T> beta;
  ad::BatchNormStats<T> norm;
};

template <typename T>
struct LinearHead {
  ad::Tensor<T> weight;
  ad::Tensor<T> bias;
};

template <typename T>
class Model {
 public:
  // Validates the config and initializes every parameter from config.seed:
  // fan-in scaled uniform weights (He bound for ReLU layers, a 0.1 gain for
  // the two output heads), zero biases, unit gamma, zero beta.
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Copies share parameter storage (tensors are handles); Clone() does not.
  Model Clone() const;

  // All trainable tensors in declaration order: frame layers 1-5 (weight,
  // bias, gamma, beta), l6, l7, speaker head, reconstruction head.
  std::vector<NamedParameter<T>> Parameters() const;
  std::vector<ad::BatchNormStats<T>*> NormStats();
  std::vector<const ad::BatchNormStats<T>*> NormStats() const;
  std::size_t NumParameters() const;

  std::array<FrameLayer<T>, kNumFrameLayers> frame_layers;
  SegmentLayer<T> l6;
  SegmentLayer<T> l7;
  LinearHead<T> speaker_head;
  LinearHead<T> reconstruction_head;

 private:
  ModelConfig config_;
};

struct ForwardHeads {
  bool speaker = true;
  bool reconstruction = true;
};

template <typename T>
struct ForwardOutput {
  ad::Tensor<T> embedding;       // l6 affine output [N x l6]
  ad::Tensor<T> logits;          // [N x C], undefined if not requested
  ad::Tensor<T> reconstruction;  // [N x order*D], undefined if not requested
};

// batch: [N x L x D]. Throws InputTooShortError when L < MinimumFrames().
template <typename T>
ForwardOutput<T> Forward(Model<T>& model, const ad::Tensor<T>& batch,
                         ad::NormMode mode, ad::Tape<T>* tape,
                         ForwardHeads heads = {});

template <typename T>
struct LossTerms {
  ad::Tensor<T> loss;
  ad::Tensor<T> ce;   // undefined when the speaker branch is skipped
  ad::Tensor<T> mse;  // undefined when the reconstruction branch is skipped
};

// loss = alpha * MSE + (1 - alpha) * CE. Either branch may be left undefined
// when its weight is zero (alpha == 0 drops MSE, alpha == 1 drops CE).
template <typename T>
LossTerms<T> MultitaskLoss(ad::Tape<T>* tape, const ad::Tensor<T>& logits,
                           std::span<const int> labels,
                           const ad::Tensor<T>& reconstruction,
                           const ad::Tensor<T>& targets, double alpha);

struct Embedding {
  std::string utt_id;
  std::string speaker_id;
  std::vector<double> values;
};

// Full-utterance infer-mode pass up to the l6 affine output.
template <typename T>
Embedding ExtractEmbedding(Model<T>& model, const FeatureMatrix& utterance);

struct ParameterCount {
  std::size_t baseline_params = 0;
  std::size_t mtl_params = 0;
  double ratio = 0.0;  // (mtl - baseline) / baseline
};

// Pure arithmetic on the config; mtl_order 0 describes a model without the
// reconstruction head.
std::size_t CountParameters(const ModelConfig& config,
                            bool with_reconstruction_head);
ParameterCount ParameterOverhead(const ModelConfig& config);

}  // namespace xvmtl

#endif  // XVMTL_MODEL_H_
