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

#include "xvmtl/stats.h"

#include <cmath>
#include <string>

#include "xvmtl/errors.h"

namespace xvmtl {

namespace {

void Standardize(const std::vector<double>& m2, const std::vector<double>& m3,
                 const std::vector<double>& m4, double count, HosVector* out) {
  const std::size_t dim = m2.size();
  out->sigma.resize(dim);
  out->skew.resize(dim);
  out->kurt.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double var = m2[d] / count;
    const double sigma = std::sqrt(var);
    out->sigma[d] = sigma;
    if (sigma < kDegenerateSigma) {
      out->skew[d] = 0.0;
      out->kurt[d] = 0.0;
    } else {
      out->skew[d] = (m3[d] / count) / (var * sigma);
      out->kurt[d] = (m4[d] / count) / (var * var);
    }
  }
}

}  // namespace

MomentOrder::MomentOrder(int order) : order_(order) {
  if (order < 1 || order > 4) {
    throw ConfigError("moment order must be in 1..4, got " +
                      std::to_string(order));
  }
}

std::vector<double> HosVector::Concat(MomentOrder order) const {
  const std::vector<double>* blocks[] = {&mu, &sigma, &skew, &kurt};
  std::vector<double> z;
  z.reserve(order.value() * dim());
  for (int i = 0; i < order.value(); ++i) {
    z.insert(z.end(), blocks[i]->begin(), blocks[i]->end());
  }
  return z;
}

template <typename T>
HosVector Moments(FramesView<T> frames) {
  const std::size_t n = frames.num_frames;
  const std::size_t dim = frames.dim;
  if (n == 0 || dim == 0) throw DataError("moments of an empty utterance");
  if (frames.values.size() != n * dim) {
    throw ConfigError("frame buffer holds " +
                      std::to_string(frames.values.size()) + " values, expected " +
                      std::to_string(n * dim));
  }
  HosVector out;
  out.mu.assign(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = frames.values[t * dim + d];
      if (!std::isfinite(x)) {
        throw DataError("non-finite feature at frame " + std::to_string(t));
      }
      out.mu[d] += x;
    }
  }
  for (double& m : out.mu) m /= double(n);

  std::vector<double> m2(dim, 0.0), m3(dim, 0.0), m4(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = frames.values[t * dim + d] - out.mu[d];
      const double c2 = c * c;
      m2[d] += c2;
      m3[d] += c2 * c;
      m4[d] += c2 * c2;
    }
  }
  Standardize(m2, m3, m4, double(n), &out);
  return out;
}

template <typename T>
std::vector<double> HosTargets(FramesView<T> frames, MomentOrder order) {
  return Moments(frames).Concat(order);
}

StreamingMoments::StreamingMoments(std::size_t dim)
    : mean_(dim, 0.0), m2_(dim, 0.0), m3_(dim, 0.0), m4_(dim, 0.0) {}

void StreamingMoments::Add(std::span<const double> frame) {
  if (frame.size() != mean_.size()) {
    throw ConfigError("frame of dimension " + std::to_string(frame.size()) +
                      " added to accumulator of dimension " +
                      std::to_string(mean_.size()));
  }
  const double n1 = double(count_);
  ++count_;
  const double n = double(count_);
  for (std::size_t d = 0; d < mean_.size(); ++d) {
    const double delta = frame[d] - mean_[d];
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_[d] += delta_n;
    m4_[d] += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_[d] -
              4 * delta_n * m3_[d];
    m3_[d] += term1 * delta_n * (n - 2) - 3 * delta_n * m2_[d];
    m2_[d] += term1;
  }
}

HosVector StreamingMoments::Finish() const {
  if (count_ == 0) throw DataError("moments of an empty utterance");
  HosVector out;
  out.mu = mean_;
  Standardize(m2_, m3_, m4_, double(count_), &out);
  return out;
}

template HosVector Moments(FramesView<float>);
template HosVector Moments(FramesView<double>);
template std::vector<double> HosTargets(FramesView<float>, MomentOrder);
template std::vector<double> HosTargets(FramesView<double>, MomentOrder);

}  // namespace xvmtl
