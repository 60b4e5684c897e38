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

// Per-dimension statistics of an utterance's frames: mean, standard deviation,
// skewness and (non-excess) kurtosis, concatenated into the reconstruction
// target z = [mu, sigma, skew, kurt] of length 4*D.
//
// All moments are population moments (divide by T). Dimensions whose standard
// deviation is below kDegenerateSigma get skew = kurt = 0.

#ifndef XVMTL_STATS_H_
#define XVMTL_STATS_H_

#include <cstddef>
#include <span>
#include <vector>

namespace xvmtl {

constexpr double kDegenerateSigma = 1e-6;

// Row-major T x D frames.
template <typename T>
struct FramesView {
  std::span<const T> values;
  std::size_t num_frames = 0;
  std::size_t dim = 0;
};

// Number of leading statistics kept in z: 1 -> [mu], 2 -> [mu, sigma],
// 3 -> [mu, sigma, skew], 4 -> [mu, sigma, skew, kurt].
class MomentOrder {
 public:
  explicit MomentOrder(int order);
  int value() const { return order_; }

 private:
  int order_;
};

struct HosVector {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> skew;
  std::vector<double> kurt;

  std::size_t dim() const { return mu.size(); }
  // [mu, sigma, skew, kurt] truncated to `order` blocks.
  std::vector<double> Concat(MomentOrder order) const;
};

// Two-pass reference computation. Throws DataError on an empty utterance or
// non-finite values.
template <typename T>
HosVector Moments(FramesView<T> frames);

template <typename T>
std::vector<double> HosTargets(FramesView<T> frames, MomentOrder order);

// One-pass accumulator (pairwise-update central moments), for inputs too long
// to traverse twice.
class StreamingMoments {
 public:
  explicit StreamingMoments(std::size_t dim);

  void Add(std::span<const double> frame);
  std::size_t count() const { return count_; }
  HosVector Finish() const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_, m3_, m4_;
};

}  // namespace xvmtl

#endif  // XVMTL_STATS_H_
