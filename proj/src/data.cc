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

#include "xvmtl/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "xvmtl/binary_io.h"
#include "xvmtl/errors.h"
#include "xvmtl/log.h"

namespace xvmtl {

namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[] = "XVF1";
// Coefficient-0 drop of silence frames relative to the speaker's mean.
constexpr double kSilenceDepth = 10.0;
constexpr double kSilenceNoise = 0.3;

struct SpeakerProfile {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> mix_weight;  // probability of the minor component
  std::vector<double> mix_offset;  // signed separation of the components
};

SpeakerProfile DrawSpeaker(const CorpusSpec& spec, int speaker) {
  std::seed_seq seq{spec.seed, std::uint64_t(0x5eed), std::uint64_t(speaker)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  std::uniform_real_distribution<double> weight(0.1, 0.4);
  std::uniform_real_distribution<double> offset(1.5, 3.5);
  std::bernoulli_distribution sign(0.5);
  const std::size_t dim = spec.feature_dim;
  SpeakerProfile p;
  p.mean.resize(dim);
  p.scale.resize(dim);
  p.mix_weight.resize(dim);
  p.mix_offset.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) p.mean[d] = spec.speaker_spread * normal(rng);
  for (std::size_t d = 0; d < dim; ++d) p.scale[d] = scale(rng);
  for (std::size_t d = 0; d < dim; ++d) p.mix_weight[d] = weight(rng);
  for (std::size_t d = 0; d < dim; ++d) {
    p.mix_offset[d] = (sign(rng) ? 1.0 : -1.0) * offset(rng);
  }
  return p;
}

FeatureMatrix DrawUtterance(const CorpusSpec& spec, const SpeakerProfile& p,
                            int speaker, int index) {
  std::seed_seq seq{spec.seed, std::uint64_t(0x077e), std::uint64_t(speaker),
                    std::uint64_t(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> length(spec.min_frames, spec.max_frames);

  const std::size_t dim = spec.feature_dim;
  const std::size_t frames = length(rng);
  const std::size_t silence =
      std::size_t(std::lround(spec.silence_fraction * double(frames)));
  const std::size_t lead =
      silence ? std::uniform_int_distribution<std::size_t>(0, silence)(rng) : 0;
  const std::size_t speech_begin = lead;
  const std::size_t speech_end = frames - (silence - lead);
  const double rho = spec.temporal_correlation;
  const double innovation_gain = std::sqrt(1.0 - rho * rho);

  FeatureMatrix out;
  out.dim = dim;
  out.num_frames = frames;
  out.frames.resize(frames * dim);
  std::vector<double> state(dim, 0.0);
  bool started = false;
  for (std::size_t t = 0; t < frames; ++t) {
    float* x = out.frames.data() + t * dim;
    if (t < speech_begin || t >= speech_end) {
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = float(kSilenceNoise * normal(rng));
      }
      x[0] = float(p.mean[0] - kSilenceDepth + kSilenceNoise * normal(rng));
      continue;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      // Zero-mean, unit-variance asymmetric two-component mixture.
      const double w = p.mix_weight[d];
      const double delta = p.mix_offset[d];
      const double shift = unit(rng) < w ? delta * (1.0 - w) : -delta * w;
      const double e =
          (shift + normal(rng)) / std::sqrt(1.0 + delta * delta * w * (1.0 - w));
      state[d] = started ? rho * state[d] + innovation_gain * e : e;
      x[d] = float(p.mean[d] + p.scale[d] * state[d]);
    }
    started = true;
  }
  return out;
}

std::string PaddedIndex(int value, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << value;
  return os.str();
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void CorpusSpec::Validate() const {
  std::vector<std::string> problems;
  if (num_speakers < 2) problems.push_back("num_speakers must be >= 2");
  if (utterances_per_speaker < 1) {
    problems.push_back("utterances_per_speaker must be >= 1");
  }
  if (feature_dim < 1) problems.push_back("feature_dim must be >= 1");
  if (min_frames < 15) problems.push_back("min_frames must be >= 15");
  if (max_frames < min_frames) problems.push_back("max_frames < min_frames");
  if (!(temporal_correlation >= 0.0 && temporal_correlation < 1.0)) {
    problems.push_back("temporal_correlation must be in [0, 1)");
  }
  if (!(speaker_spread >= 0.0)) problems.push_back("speaker_spread must be >= 0");
  if (!(silence_fraction >= 0.0 && silence_fraction < 0.5)) {
    problems.push_back("silence_fraction must be in [0, 0.5)");
  }
  if (speaker_prefix.empty()) problems.push_back("speaker_prefix is empty");
  if (!problems.empty()) {
    std::string msg = "invalid corpus settings:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

void WriteFeatures(const fs::path& path, const FeatureMatrix& features) {
  if (features.frames.size() != features.num_frames * features.dim) {
    throw ConfigError("feature matrix " + features.utt_id +
                      " has inconsistent size");
  }
  for (float v : features.frames) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite feature value in " + features.utt_id);
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binary::WriteMagic(os, kFeatureMagic);
  binary::WritePod<std::uint32_t>(os, std::uint32_t(features.dim));
  binary::WritePod<std::uint32_t>(os, std::uint32_t(features.num_frames));
  binary::WriteArray<float>(os, features.frames);
  if (!os) throw IoError("write failed for " + path.string());
}

FeatureMatrix ReadFeatures(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string source = path.string();
  binary::ExpectMagic(is, kFeatureMagic, source);
  FeatureMatrix out;
  out.dim = binary::ReadPod<std::uint32_t>(is, "feature dim");
  out.num_frames = binary::ReadPod<std::uint32_t>(is, "frame count");
  if (out.dim == 0 || out.num_frames == 0) {
    throw ParseError(source + ": empty feature matrix");
  }
  is.seekg(0, std::ios::end);
  const auto remaining = std::uint64_t(is.tellg()) - 12;
  is.seekg(12);
  const std::uint64_t needed = std::uint64_t(out.dim) * out.num_frames * 4;
  if (remaining < needed) {
    throw TruncatedError(source + ": header declares " +
                         std::to_string(out.num_frames) + "x" +
                         std::to_string(out.dim) + " floats but payload has " +
                         std::to_string(remaining) + " bytes");
  }
  out.frames.resize(out.num_frames * out.dim);
  binary::ReadArray<float>(is, out.frames, "feature payload");
  return out;
}

void WriteManifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "utt_id,speaker_id,path,num_frames\n";
  for (const auto& e : manifest.entries) {
    os << e.utt_id << ',' << e.speaker_id << ',' << e.path << ','
       << e.num_frames << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Manifest ReadManifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "utt_id,speaker_id,path,num_frames") {
    throw ParseError(path.string() + ": missing manifest header");
  }
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitCsv(line);
    if (fields.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 4 fields");
    }
    ManifestEntry e{fields[0], fields[1], fields[2], 0};
    try {
      e.num_frames = std::stoul(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad num_frames '" + fields[3] + "'");
    }
    if (!seen.insert(e.utt_id).second) {
      throw ParseError(path.string() + ": duplicate utt_id " + e.utt_id);
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

Manifest GenerateCorpus(const CorpusSpec& spec, const fs::path& out_dir) {
  spec.Validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create corpus directory " + out_dir.string());
  }
  Manifest manifest;
  manifest.base_dir = out_dir;
  for (int s = 0; s < spec.num_speakers; ++s) {
    const SpeakerProfile profile = DrawSpeaker(spec, s);
    const std::string speaker_id = spec.speaker_prefix + PaddedIndex(s, 3);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      FeatureMatrix utt = DrawUtterance(spec, profile, s, u);
      utt.speaker_id = speaker_id;
      utt.utt_id = speaker_id + "-utt" + PaddedIndex(u, 4);
      const std::string file = utt.utt_id + ".xvf";
      WriteFeatures(out_dir / file, utt);
      manifest.entries.push_back(
          {utt.utt_id, utt.speaker_id, file, utt.num_frames});
    }
  }
  WriteManifest(out_dir / "manifest.csv", manifest);
  return manifest;
}

FeatureMatrix EnergyVad(const FeatureMatrix& utterance,
                        double threshold_offset) {
  if (utterance.dim < 1 || utterance.num_frames < 1) {
    throw DataError("VAD on empty utterance " + utterance.utt_id);
  }
  double mean = 0.0;
  for (std::size_t t = 0; t < utterance.num_frames; ++t) {
    mean += utterance.frames[t * utterance.dim];
  }
  mean /= double(utterance.num_frames);
  const double cutoff = mean - threshold_offset;
  FeatureMatrix out;
  out.utt_id = utterance.utt_id;
  out.speaker_id = utterance.speaker_id;
  out.dim = utterance.dim;
  for (std::size_t t = 0; t < utterance.num_frames; ++t) {
    if (double(utterance.frames[t * utterance.dim]) >= cutoff) {
      auto f = utterance.frame(t);
      out.frames.insert(out.frames.end(), f.begin(), f.end());
      ++out.num_frames;
    }
  }
  if (out.num_frames == 0) {
    throw DataError("VAD removed every frame of " + utterance.utt_id);
  }
  return out;
}

std::vector<FeatureMatrix> LoadCorpus(const Manifest& manifest,
                                      std::optional<double> vad_offset) {
  std::vector<FeatureMatrix> out;
  out.reserve(manifest.entries.size());
  std::size_t dim = 0;
  for (const auto& e : manifest.entries) {
    FeatureMatrix m = ReadFeatures(manifest.Resolve(e));
    if (m.num_frames != e.num_frames) {
      throw DimMismatchError(e.utt_id + ": manifest lists " +
                             std::to_string(e.num_frames) +
                             " frames, file header has " +
                             std::to_string(m.num_frames));
    }
    if (dim == 0) dim = m.dim;
    if (m.dim != dim) {
      throw DimMismatchError(e.utt_id + ": feature dim " +
                             std::to_string(m.dim) + " differs from corpus dim " +
                             std::to_string(dim));
    }
    m.utt_id = e.utt_id;
    m.speaker_id = e.speaker_id;
    out.push_back(vad_offset ? EnergyVad(m, *vad_offset) : std::move(m));
  }
  return out;
}

LabeledSet MakeLabeledSet(std::vector<FeatureMatrix> utterances) {
  LabeledSet set;
  std::map<std::string, int> index;
  for (const auto& u : utterances) index.emplace(u.speaker_id, 0);
  int next = 0;
  for (auto& [id, label] : index) {
    label = next++;
    set.speakers.push_back(id);
  }
  for (const auto& u : utterances) {
    if (set.dim == 0) set.dim = u.dim;
    if (u.dim != set.dim) throw DataError("mixed feature dimensions in corpus");
    set.labels.push_back(index.at(u.speaker_id));
  }
  set.utterances = std::move(utterances);
  return set;
}

std::vector<Batch> MakeBatches(const LabeledSet& set, std::size_t crop_length,
                               std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch,
                               std::optional<MomentOrder> order) {
  if (crop_length < 15) {
    throw ConfigError("crop length must be >= 15, got " +
                      std::to_string(crop_length));
  }
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> eligible;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < set.utterances.size(); ++i) {
    if (set.utterances[i].num_frames >= crop_length) {
      eligible.push_back(i);
    } else {
      ++skipped;
    }
  }
  if (eligible.empty()) {
    throw DataError("no utterance has at least " + std::to_string(crop_length) +
                    " frames");
  }
  if (skipped && epoch == 0) {
    LogWarning("skipping " + std::to_string(skipped) +
               " utterances shorter than the crop length " +
               std::to_string(crop_length));
  }

  std::seed_seq seq{seed, std::uint64_t(0xba7c), epoch};
  std::mt19937_64 rng(seq);
  std::shuffle(eligible.begin(), eligible.end(), rng);

  const std::size_t dim = set.dim;
  const std::size_t num_batches = eligible.size() / batch_size;
  std::vector<Batch> batches(num_batches);
  for (std::size_t b = 0; b < num_batches; ++b) {
    Batch& batch = batches[b];
    batch.batch_size = batch_size;
    batch.crop_length = crop_length;
    batch.dim = dim;
    batch.features.resize(batch_size * crop_length * dim);
    for (std::size_t n = 0; n < batch_size; ++n) {
      const std::size_t idx = eligible[b * batch_size + n];
      const FeatureMatrix& utt = set.utterances[idx];
      std::uniform_int_distribution<std::size_t> start_dist(
          0, utt.num_frames - crop_length);
      const std::size_t start = start_dist(rng);
      auto src = std::span<const float>(utt.frames)
                     .subspan(start * dim, crop_length * dim);
      std::copy(src.begin(), src.end(),
                batch.features.begin() + n * crop_length * dim);
      batch.labels.push_back(set.labels[idx]);
      batch.utterance_index.push_back(idx);
      batch.crop_start.push_back(start);
      if (order) {
        const auto z = HosTargets(FramesView<float>{src, crop_length, dim}, *order);
        batch.hos_targets.insert(batch.hos_targets.end(), z.begin(), z.end());
      }
    }
  }
  return batches;
}

}  // namespace xvmtl
