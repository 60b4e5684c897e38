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

// Feature matrices, the synthetic speaker corpus that stands in for real
// recordings, the binary feature format, energy VAD and training batches.
//
// Feature file layout (little-endian):
//   "XVF1" | u32 D | u32 T | T*D float32, frame-major
// Manifest: CSV `utt_id,speaker_id,path,num_frames`, paths relative to the
// manifest's directory.

#ifndef XVMTL_DATA_H_
#define XVMTL_DATA_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xvmtl/stats.h"

namespace xvmtl {

struct FeatureMatrix {
  std::string utt_id;
  std::string speaker_id;
  std::size_t num_frames = 0;
  std::size_t dim = 0;
  std::vector<float> frames;  // num_frames x dim, row-major

  FramesView<float> view() const { return {frames, num_frames, dim}; }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(frames).subspan(t * dim, dim);
  }
};

struct CorpusSpec {
  int num_speakers = 30;
  int utterances_per_speaker = 40;
  int feature_dim = 10;
  int min_frames = 250;
  int max_frames = 400;
  double temporal_correlation = 0.5;  // AR(1) coefficient rho
  double speaker_spread = 3.0;        // std of speaker mean vectors
  // Leading/trailing low-energy frames, as a fraction of each utterance.
  double silence_fraction = 0.1;
  std::uint64_t seed = 1;
  std::string speaker_prefix = "spk";

  // Throws ConfigError listing every violated constraint.
  void Validate() const;
};

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_id;
  std::string path;  // relative to the manifest directory
  std::size_t num_frames = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path Resolve(const ManifestEntry& entry) const {
    return base_dir / entry.path;
  }
};

void WriteFeatures(const std::filesystem::path& path,
                   const FeatureMatrix& features);
// Throws BadMagicError, TruncatedError or IoError. Ids are left empty.
FeatureMatrix ReadFeatures(const std::filesystem::path& path);

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest ReadManifest(const std::filesystem::path& path);

// Writes `<out_dir>/<utt_id>.xvf` per utterance and `<out_dir>/manifest.csv`.
// Output is a pure function of `spec`.
Manifest GenerateCorpus(const CorpusSpec& spec,
                        const std::filesystem::path& out_dir);

// Keeps frames whose coefficient 0 is >= mean(coefficient 0) - offset, in
// order. Throws DataError if nothing survives.
FeatureMatrix EnergyVad(const FeatureMatrix& utterance,
                        double threshold_offset);

// Reads every manifest entry, checking num_frames against the file header
// (DimMismatchError on disagreement) and a constant feature dimension.
// Applies VAD when an offset is given.
std::vector<FeatureMatrix> LoadCorpus(const Manifest& manifest,
                                      std::optional<double> vad_offset);

// Utterances with integer speaker labels; speakers are numbered in sorted id
// order.
struct LabeledSet {
  std::vector<FeatureMatrix> utterances;
  std::vector<int> labels;
  std::vector<std::string> speakers;
  std::size_t dim = 0;
};

LabeledSet MakeLabeledSet(std::vector<FeatureMatrix> utterances);

struct Batch {
  std::size_t batch_size = 0;
  std::size_t crop_length = 0;
  std::size_t dim = 0;
  std::vector<float> features;     // batch_size x crop_length x dim
  std::vector<int> labels;         // batch_size
  std::vector<float> hos_targets;  // batch_size x (order * dim), or empty
  std::vector<std::size_t> utterance_index;  // into LabeledSet::utterances
  std::vector<std::size_t> crop_start;
};

// One epoch of batches: utterances shuffled by (seed, epoch), one random
// crop of `crop_length` frames each, final short batch dropped. HOS targets
// are computed on each crop when `order` is given. Utterances shorter than
// the crop are skipped with a warning; DataError if none remain.
std::vector<Batch> MakeBatches(const LabeledSet& set, std::size_t crop_length,
                               std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch,
                               std::optional<MomentOrder> order);

}  // namespace xvmtl

#endif  // XVMTL_DATA_H_
