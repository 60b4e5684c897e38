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

#include "xvmtl/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "xvmtl/errors.h"

namespace xvmtl::ad {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
bool AnyRequiresGrad(std::initializer_list<const Tensor<T>*> tensors) {
  for (const Tensor<T>* t : tensors) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void Expect(bool ok, const std::string& op, const std::string& message) {
  if (!ok) throw ConfigError(op + ": " + message);
}

}  // namespace

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T>::Tensor(Shape shape)
    : storage_(std::make_shared<Storage>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ConfigError("tensor dimensions must be positive");
  }
  storage_->values.assign(NumElements(shape), T(0));
  shape_ = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ConfigError("tensor dimensions must be positive");
  }
  if (NumElements(shape) != values.size()) {
    throw ConfigError("tensor of shape " + ShapeToString(shape) + " given " +
                      std::to_string(values.size()) + " values");
  }
  shape_ = std::move(shape);
  storage_->values.assign(values.begin(), values.end());
  storage_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::Scalar(T value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!storage_) throw UsageError("undefined tensor");
  return shape_;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw UsageError("axis out of range");
  return s[axis];
}

template <typename T>
std::size_t Tensor<T>::numel() const {
  return defined() ? storage_->values.size() : 0;
}

template <typename T>
std::span<T> Tensor<T>::values() const {
  if (!storage_) throw UsageError("undefined tensor");
  return storage_->values;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw UsageError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return storage_->values[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return storage_ && storage_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool requires_grad) {
  if (!storage_) throw UsageError("undefined tensor");
  storage_->requires_grad = requires_grad;
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (!storage_) throw UsageError("undefined tensor");
  if (storage_->grad.size() != storage_->values.size()) {
    storage_->grad.assign(storage_->values.size(), T(0));
  }
  return storage_->grad;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return storage_ && storage_->grad.size() == storage_->values.size();
}

template <typename T>
void Tensor<T>::ZeroGrad() const {
  auto g = grad();
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::Clone() const {
  if (!storage_) return Tensor();
  Tensor copy;
  copy.storage_ = std::make_shared<Storage>();
  copy.storage_->values = storage_->values;
  copy.storage_->requires_grad = storage_->requires_grad;
  copy.shape_ = shape_;
  return copy;
}

template <typename T>
Tensor<T> Tensor<T>::Reshaped(Shape shape) const {
  if (NumElements(shape) != numel()) {
    throw ConfigError("cannot reshape " + ShapeToString(this->shape()) +
                      " to " + ShapeToString(shape));
  }
  Tensor view = *this;
  view.shape_ = std::move(shape);
  return view;
}

// ---------------------------------------------------------------------------
// Tape

template <typename T>
void Tape<T>::Record(std::string op_name, BackwardFn fn) {
  if (consumed_) throw UsageError("recording onto a consumed tape");
  names_.push_back(std::move(op_name));
  ops_.push_back(std::move(fn));
}

template <typename T>
void Tape<T>::Backward(Tensor<T>& loss) {
  if (consumed_) throw UsageError("tape already consumed by a backward pass");
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " +
                     (loss.defined() ? ShapeToString(loss.shape())
                                     : std::string("<undefined>")));
  }
  consumed_ = true;
  if (!loss.requires_grad()) return;
  loss.grad()[0] += T(1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  ops_.clear();
}

// ---------------------------------------------------------------------------
// Ops

template <typename T>
Tensor<T> Conv1dDilated(Tape<T>* tape, const Tensor<T>& input,
                        const Tensor<T>& weight, const Tensor<T>& bias,
                        std::size_t dilation) {
  const std::string op = "conv1d_dilated";
  Expect(input.rank() == 2 || input.rank() == 3, op,
         "input must be [T x C] or [N x T x C], got " +
             ShapeToString(input.shape()));
  Expect(weight.rank() == 3, op, "weight must be [C_out x C_in x k]");
  Expect(dilation >= 1, op, "dilation must be positive");
  const bool batched = input.rank() == 3;
  const std::size_t batch = batched ? input.dim(0) : 1;
  const std::size_t t_in = input.dim(batched ? 1 : 0);
  const std::size_t c_in = input.dim(batched ? 2 : 1);
  const std::size_t c_out = weight.dim(0);
  const std::size_t k = weight.dim(2);
  Expect(weight.dim(1) == c_in, op,
         "weight " + ShapeToString(weight.shape()) + " does not match input " +
             "channels " + std::to_string(c_in));
  Expect(bias.numel() == c_out, op, "bias length must equal C_out");
  const std::size_t span = (k - 1) * dilation + 1;
  if (t_in < span) throw InputTooShortError(op, span, t_in);
  const std::size_t t_out = t_in - (k - 1) * dilation;

  // Per-tap weights W_j[c, o] = weight[o, c, j], so Y += X_shifted * W_j.
  auto taps = std::make_shared<std::vector<RowMatrix<T>>>(k);
  auto w = weight.values();
  for (std::size_t j = 0; j < k; ++j) {
    RowMatrix<T>& wj = (*taps)[j];
    wj.resize(c_in, c_out);
    for (std::size_t o = 0; o < c_out; ++o) {
      for (std::size_t c = 0; c < c_in; ++c) {
        wj(c, o) = w[(o * c_in + c) * k + j];
      }
    }
  }

  Shape out_shape = batched ? Shape{batch, t_out, c_out} : Shape{t_out, c_out};
  Tensor<T> out(out_shape);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.values().data(),
                                                          c_out);
  for (std::size_t n = 0; n < batch; ++n) {
    ConstMatrixMap<T> x(input.values().data() + n * t_in * c_in, t_in, c_in);
    MatrixMap<T> y(out.values().data() + n * t_out * c_out, t_out, c_out);
    y.rowwise() = b;
    for (std::size_t j = 0; j < k; ++j) {
      y.noalias() += x.middleRows(j * dilation, t_out) * (*taps)[j];
    }
  }

  if (tape && AnyRequiresGrad({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      std::vector<RowMatrix<T>> dtaps;
      if (weight.requires_grad()) {
        dtaps.assign(k, RowMatrix<T>::Zero(c_in, c_out));
      }
      for (std::size_t n = 0; n < batch; ++n) {
        ConstMatrixMap<T> dy(out.grad().data() + n * t_out * c_out, t_out,
                             c_out);
        ConstMatrixMap<T> x(input.values().data() + n * t_in * c_in, t_in,
                            c_in);
        if (input.requires_grad()) {
          MatrixMap<T> dx(input.grad().data() + n * t_in * c_in, t_in, c_in);
          for (std::size_t j = 0; j < k; ++j) {
            dx.middleRows(j * dilation, t_out).noalias() +=
                dy * (*taps)[j].transpose();
          }
        }
        if (weight.requires_grad()) {
          for (std::size_t j = 0; j < k; ++j) {
            dtaps[j].noalias() +=
                x.middleRows(j * dilation, t_out).transpose() * dy;
          }
        }
        if (bias.requires_grad()) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(
              bias.grad().data(), c_out);
          db += dy.colwise().sum();
        }
      }
      if (weight.requires_grad()) {
        auto dw = weight.grad();
        for (std::size_t j = 0; j < k; ++j) {
          for (std::size_t o = 0; o < c_out; ++o) {
            for (std::size_t c = 0; c < c_in; ++c) {
              dw[(o * c_in + c) * k + j] += dtaps[j](c, o);
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Dense(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                const Tensor<T>& bias, Activation activation) {
  const std::string op = "dense";
  Expect(input.rank() == 2, op,
         "input must be [N x F], got " + ShapeToString(input.shape()));
  Expect(weight.rank() == 2, op, "weight must be [F_out x F_in]");
  const std::size_t rows = input.dim(0);
  const std::size_t f_in = input.dim(1);
  const std::size_t f_out = weight.dim(0);
  Expect(weight.dim(1) == f_in, op,
         "weight " + ShapeToString(weight.shape()) + " does not match input " +
             ShapeToString(input.shape()));
  Expect(bias.numel() == f_out, op, "bias length must equal F_out");

  Tensor<T> out({rows, f_out});
  ConstMatrixMap<T> x(input.values().data(), rows, f_in);
  ConstMatrixMap<T> w(weight.values().data(), f_out, f_in);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.values().data(),
                                                          f_out);
  MatrixMap<T> y(out.values().data(), rows, f_out);
  y.noalias() = x * w.transpose();
  y.rowwise() += b;
  if (activation == Activation::kRelu) y = y.cwiseMax(T(0));

  if (tape && AnyRequiresGrad({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      RowMatrix<T> dy = ConstMatrixMap<T>(out.grad().data(), rows, f_out);
      if (activation == Activation::kRelu) {
        ConstMatrixMap<T> yv(out.values().data(), rows, f_out);
        dy = (yv.array() > T(0)).select(dy, T(0));
      }
      ConstMatrixMap<T> xv(input.values().data(), rows, f_in);
      ConstMatrixMap<T> wv(weight.values().data(), f_out, f_in);
      if (input.requires_grad()) {
        MatrixMap<T>(input.grad().data(), rows, f_in).noalias() += dy * wv;
      }
      if (weight.requires_grad()) {
        MatrixMap<T>(weight.grad().data(), f_out, f_in).noalias() +=
            dy.transpose() * xv;
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.grad().data(),
                                                        f_out) +=
            dy.colwise().sum();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Relu(Tape<T>* tape, const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    tape->Record("relu", [=]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto xv = input.values();
      auto dx = input.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (xv[i] > T(0)) dx[i] += dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> BatchNorm1d(Tape<T>* tape, const Tensor<T>& input,
                      const Tensor<T>& gamma, const Tensor<T>& beta,
                      NormMode mode, BatchNormStats<T>* stats,
                      const BatchNormOptions& options) {
  const std::string op = "batchnorm1d";
  Expect(input.rank() >= 1, op, "input must have a feature axis");
  const std::size_t features = input.shape().back();
  const std::size_t rows = input.numel() / features;
  Expect(gamma.numel() == features && beta.numel() == features, op,
         "gamma/beta length must equal feature count " +
             std::to_string(features));
  Expect(stats != nullptr || mode == NormMode::kTrain, op,
         "infer mode needs running statistics");
  if (stats) {
    Expect(stats->mean.size() == features && stats->var.size() == features, op,
           "running statistics have the wrong length");
  }
  if (mode == NormMode::kTrain && rows < 2) {
    throw BatchTooSmallError(op + ": train mode needs at least 2 rows, got " +
                             std::to_string(rows));
  }

  auto x = input.values();
  std::vector<T> mean(features), inv_std(features);
  if (mode == NormMode::kTrain) {
    std::vector<double> sum(features, 0.0), sq(features, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = x.data() + r * features;
      for (std::size_t f = 0; f < features; ++f) sum[f] += row[f];
    }
    for (std::size_t f = 0; f < features; ++f) sum[f] /= double(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = x.data() + r * features;
      for (std::size_t f = 0; f < features; ++f) {
        const double d = row[f] - sum[f];
        sq[f] += d * d;
      }
    }
    for (std::size_t f = 0; f < features; ++f) {
      const double var = sq[f] / double(rows);
      mean[f] = T(sum[f]);
      inv_std[f] = T(1.0 / std::sqrt(var + options.epsilon));
      if (stats) {
        const double m = options.momentum;
        stats->mean[f] = T(m * stats->mean[f] + (1.0 - m) * sum[f]);
        stats->var[f] = T(m * stats->var[f] + (1.0 - m) * var);
      }
    }
  } else {
    for (std::size_t f = 0; f < features; ++f) {
      mean[f] = stats->mean[f];
      inv_std[f] = T(1.0 / std::sqrt(double(stats->var[f]) + options.epsilon));
    }
  }

  Tensor<T> out(input.shape());
  auto y = out.values();
  auto g = gamma.values();
  auto b = beta.values();
  // x_hat is kept for the backward pass.
  auto x_hat = std::make_shared<std::vector<T>>(input.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      const std::size_t i = r * features + f;
      const T xh = (x[i] - mean[f]) * inv_std[f];
      (*x_hat)[i] = xh;
      y[i] = g[f] * xh + b[f];
    }
  }

  if (tape && AnyRequiresGrad({&input, &gamma, &beta})) {
    out.set_requires_grad(true);
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      const auto& xh = *x_hat;
      std::vector<double> sum_dy(features, 0.0), sum_dy_xh(features, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t f = 0; f < features; ++f) {
          const std::size_t i = r * features + f;
          sum_dy[f] += dy[i];
          sum_dy_xh[f] += double(dy[i]) * xh[i];
        }
      }
      if (gamma.requires_grad()) {
        auto dg = gamma.grad();
        for (std::size_t f = 0; f < features; ++f) dg[f] += T(sum_dy_xh[f]);
      }
      if (beta.requires_grad()) {
        auto db = beta.grad();
        for (std::size_t f = 0; f < features; ++f) db[f] += T(sum_dy[f]);
      }
      if (!input.requires_grad()) return;
      auto dx = input.grad();
      auto gv = gamma.values();
      const double inv_rows = 1.0 / double(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t f = 0; f < features; ++f) {
          const std::size_t i = r * features + f;
          const double scale = double(gv[f]) * inv_std[f];
          if (mode == NormMode::kTrain) {
            dx[i] += T(scale * (dy[i] - inv_rows * sum_dy[f] -
                                xh[i] * inv_rows * sum_dy_xh[f]));
          } else {
            dx[i] += T(scale * dy[i]);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> StatsPool(Tape<T>* tape, const Tensor<T>& frames, double epsilon) {
  const std::string op = "stats_pool";
  Expect(frames.rank() == 2 || frames.rank() == 3, op,
         "frames must be [T x F] or [N x T x F], got " +
             ShapeToString(frames.shape()));
  const bool batched = frames.rank() == 3;
  const std::size_t batch = batched ? frames.dim(0) : 1;
  const std::size_t steps = frames.dim(batched ? 1 : 0);
  const std::size_t features = frames.dim(batched ? 2 : 1);
  if (steps < 2) {
    throw PoolingError(op + ": need at least 2 frames, got " +
                       std::to_string(steps));
  }
  Tensor<T> out(batched ? Shape{batch, 2 * features} : Shape{2 * features});
  auto x = frames.values();
  auto y = out.values();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* xs = x.data() + n * steps * features;
    T* ys = y.data() + n * 2 * features;
    for (std::size_t f = 0; f < features; ++f) {
      double sum = 0.0;
      for (std::size_t t = 0; t < steps; ++t) sum += xs[t * features + f];
      const double mean = sum / double(steps);
      double sq = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        const double d = xs[t * features + f] - mean;
        sq += d * d;
      }
      ys[f] = T(mean);
      ys[features + f] = T(std::sqrt(sq / double(steps) + epsilon));
    }
  }
  if (tape && frames.requires_grad()) {
    out.set_requires_grad(true);
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      auto yv = out.values();
      auto xv = frames.values();
      auto dx = frames.grad();
      const double inv_steps = 1.0 / double(steps);
      for (std::size_t n = 0; n < batch; ++n) {
        const T* xs = xv.data() + n * steps * features;
        T* dxs = dx.data() + n * steps * features;
        const T* ys = yv.data() + n * 2 * features;
        const T* dys = dy.data() + n * 2 * features;
        for (std::size_t f = 0; f < features; ++f) {
          const double mean = ys[f];
          const double dmean = dys[f] * inv_steps;
          const double dstd = dys[features + f] * inv_steps / ys[features + f];
          for (std::size_t t = 0; t < steps; ++t) {
            const std::size_t i = t * features + f;
            dxs[i] += T(dmean + dstd * (xs[i] - mean));
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy(Tape<T>* tape, const Tensor<T>& logits,
                              std::span<const int> labels) {
  const std::string op = "softmax_cross_entropy";
  Expect(logits.rank() == 2, op,
         "logits must be [N x C], got " + ShapeToString(logits.shape()));
  const std::size_t rows = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  Expect(labels.size() == rows, op,
         "expected " + std::to_string(rows) + " labels, got " +
             std::to_string(labels.size()));
  for (std::size_t n = 0; n < rows; ++n) {
    if (labels[n] < 0 || std::size_t(labels[n]) >= classes) {
      throw DataError(op + ": label " + std::to_string(labels[n]) +
                      " at row " + std::to_string(n) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
  }
  auto z = logits.values();
  auto probs = std::make_shared<std::vector<T>>(logits.numel());
  double total = 0.0;
  for (std::size_t n = 0; n < rows; ++n) {
    const T* zr = z.data() + n * classes;
    const double max = *std::max_element(zr, zr + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(zr[c] - max);
    const double log_denom = std::log(denom);
    for (std::size_t c = 0; c < classes; ++c) {
      (*probs)[n * classes + c] = T(std::exp(zr[c] - max - log_denom));
    }
    total += log_denom + max - zr[labels[n]];
  }
  Tensor<T> out = Tensor<T>::Scalar(T(total / double(rows)));
  if (tape && logits.requires_grad()) {
    out.set_requires_grad(true);
    std::vector<int> label_copy(labels.begin(), labels.end());
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      const double scale = double(out.grad()[0]) / double(rows);
      auto dz = logits.grad();
      for (std::size_t n = 0; n < rows; ++n) {
        for (std::size_t c = 0; c < classes; ++c) {
          const std::size_t i = n * classes + c;
          const double onehot = int(c) == label_copy[n] ? 1.0 : 0.0;
          dz[i] += T(scale * ((*probs)[i] - onehot));
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> MseLoss(Tape<T>* tape, const Tensor<T>& predictions,
                  const Tensor<T>& targets) {
  const std::string op = "mse_loss";
  Expect(predictions.shape() == targets.shape(), op,
         "prediction shape " + ShapeToString(predictions.shape()) +
             " differs from target shape " + ShapeToString(targets.shape()));
  const std::size_t rows = predictions.rank() >= 2 ? predictions.dim(0) : 1;
  auto p = predictions.values();
  auto t = targets.values();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = double(p[i]) - double(t[i]);
    total += d * d;
  }
  Tensor<T> out = Tensor<T>::Scalar(T(total / double(rows)));
  if (tape && AnyRequiresGrad({&predictions, &targets})) {
    out.set_requires_grad(true);
    tape->Record(op, [=]() mutable {
      if (!out.has_grad()) return;
      const double scale = 2.0 * double(out.grad()[0]) / double(rows);
      auto pv = predictions.values();
      auto tv = targets.values();
      if (predictions.requires_grad()) {
        auto dp = predictions.grad();
        for (std::size_t i = 0; i < dp.size(); ++i) {
          dp[i] += T(scale * (double(pv[i]) - double(tv[i])));
        }
      }
      if (targets.requires_grad()) {
        auto dt = targets.grad();
        for (std::size_t i = 0; i < dt.size(); ++i) {
          dt[i] -= T(scale * (double(pv[i]) - double(tv[i])));
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> WeightedSum(Tape<T>* tape, const Tensor<T>& a, T wa,
                      const Tensor<T>& b, T wb) {
  Expect(a.shape() == b.shape(), "weighted_sum",
         "shapes " + ShapeToString(a.shape()) + " and " +
             ShapeToString(b.shape()) + " differ");
  Tensor<T> out(a.shape());
  auto av = a.values();
  auto bv = b.values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = wa * av[i] + wb * bv[i];
  if (tape && AnyRequiresGrad({&a, &b})) {
    out.set_requires_grad(true);
    tape->Record("weighted_sum", [=]() mutable {
      if (!out.has_grad()) return;
      auto dy = out.grad();
      if (a.requires_grad()) {
        auto da = a.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += wa * dy[i];
      }
      if (b.requires_grad()) {
        auto db = b.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += wb * dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> SumOfSquares(Tape<T>* tape, const Tensor<T>& input) {
  double total = 0.0;
  for (T v : input.values()) total += double(v) * double(v);
  Tensor<T> out = Tensor<T>::Scalar(T(total));
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    tape->Record("sum_of_squares", [=]() mutable {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      auto x = input.values();
      auto dx = input.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += T(2) * g * x[i];
    });
  }
  return out;
}

#define XVMTL_INSTANTIATE(T)                                                 \
  template class Tensor<T>;                                                  \
  template class Tape<T>;                                                    \
  template Tensor<T> Conv1dDilated(Tape<T>*, const Tensor<T>&,               \
                                   const Tensor<T>&, const Tensor<T>&,       \
                                   std::size_t);                             \
  template Tensor<T> Dense(Tape<T>*, const Tensor<T>&, const Tensor<T>&,     \
                           const Tensor<T>&, Activation);                    \
  template Tensor<T> Relu(Tape<T>*, const Tensor<T>&);                       \
  template Tensor<T> BatchNorm1d(Tape<T>*, const Tensor<T>&,                 \
                                 const Tensor<T>&, const Tensor<T>&,         \
                                 NormMode, BatchNormStats<T>*,               \
                                 const BatchNormOptions&);                   \
  template Tensor<T> StatsPool(Tape<T>*, const Tensor<T>&, double);          \
  template Tensor<T> SoftmaxCrossEntropy(Tape<T>*, const Tensor<T>&,         \
                                         std::span<const int>);              \
  template Tensor<T> MseLoss(Tape<T>*, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> WeightedSum(Tape<T>*, const Tensor<T>&, T,              \
                                 const Tensor<T>&, T);                       \
  template Tensor<T> SumOfSquares(Tape<T>*, const Tensor<T>&);

XVMTL_INSTANTIATE(float)
XVMTL_INSTANTIATE(double)

#undef XVMTL_INSTANTIATE

}  // namespace xvmtl::ad
