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

// Minimal reverse-mode automatic differentiation covering the primitives of
// a TDNN speaker-embedding network: dilated 1-D convolution, dense layers,
// ReLU, batch normalization, mean+std statistics pooling and the two training
// losses (softmax cross-entropy and per-sample squared error).
//
// Tensors are reference-counted handles: copying a Tensor shares storage,
// Clone() makes a deep copy. Every op takes an optional Tape; when the tape is
// non-null and some input requires a gradient, the op appends its backward
// closure to the tape. Tape::Backward replays the closures in reverse order.
//
// All ops are templated on the scalar type and instantiated for float
// (training) and double (gradient checks and test oracles).

#ifndef XVMTL_AUTODIFF_H_
#define XVMTL_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace xvmtl::ad {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);
std::size_t NumElements(const Shape& shape);

// Buffers start on a 64-byte boundary, so vectorized kernels split every
// reduction the same way and results do not depend on where the heap put them.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zeros
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor Scalar(T value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  // Handle semantics: a const Tensor still exposes mutable storage, like a
  // const shared_ptr.
  std::span<T> values() const;
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool requires_grad);

  // The gradient buffer is allocated (zero-filled) on first access.
  std::span<T> grad() const;
  bool has_grad() const;
  void ZeroGrad() const;

  Tensor Clone() const;
  // Same storage, new shape with the same element count.
  Tensor Reshaped(Shape shape) const;

  bool SharesStorageWith(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    AlignedVector<T> values;
    AlignedVector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
  Shape shape_;
};

// Ordered record of executed ops. Single use: once Backward has run the tape
// is consumed and further Backward calls are rejected.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void Record(std::string op_name, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded closure once, newest
  // first. Throws UsageError for a non-scalar loss or a consumed tape.
  void Backward(Tensor<T>& loss);

  std::size_t num_ops() const { return ops_.size(); }
  bool consumed() const { return consumed_; }
  const std::vector<std::string>& op_names() const { return names_; }

 private:
  std::vector<BackwardFn> ops_;
  std::vector<std::string> names_;
  bool consumed_ = false;
};

enum class Activation { kNone, kRelu };
enum class NormMode { kTrain, kInfer };

template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> var;

  static BatchNormStats Initial(std::size_t features) {
    return {std::vector<T>(features, T(0)), std::vector<T>(features, T(1))};
  }
};

struct BatchNormOptions {
  double epsilon = 1e-5;
  // running = momentum * running + (1 - momentum) * batch
  double momentum = 0.95;
};

constexpr double kPoolEpsilon = 1e-8;

// Valid (unpadded) cross-correlation over time.
//   y[t, o] = bias[o] + sum_j sum_c weight[o, c, j] * input[t + j * dilation, c]
// input is [T x C_in] or batched [N x T x C_in]; output has T - (k-1)*dilation
// frames.
template <typename T>
Tensor<T> Conv1dDilated(Tape<T>* tape, const Tensor<T>& input,
                        const Tensor<T>& weight, const Tensor<T>& bias,
                        std::size_t dilation);

// y = x W^T + b, optionally followed by max(0, .). input [N x F_in],
// weight [F_out x F_in].
template <typename T>
Tensor<T> Dense(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                const Tensor<T>& bias, Activation activation);

template <typename T>
Tensor<T> Relu(Tape<T>* tape, const Tensor<T>& input);

// Normalizes each feature (last axis) over all leading axes. Train mode uses
// batch statistics, x_hat = (x - mean) / sqrt(var + eps), and folds them into
// `stats`; infer mode reads `stats`. Train mode needs at least two rows.
template <typename T>
Tensor<T> BatchNorm1d(Tape<T>* tape, const Tensor<T>& input,
                      const Tensor<T>& gamma, const Tensor<T>& beta,
                      NormMode mode, BatchNormStats<T>* stats,
                      const BatchNormOptions& options = {});

// [mean; sqrt(var + eps)] over the time axis. [T x F] -> [2F], or batched
// [N x T x F] -> [N x 2F]. Population variance. Needs T >= 2.
template <typename T>
Tensor<T> StatsPool(Tape<T>* tape, const Tensor<T>& frames,
                    double epsilon = kPoolEpsilon);

// Mean over rows of -log softmax(logits)[label].
template <typename T>
Tensor<T> SoftmaxCrossEntropy(Tape<T>* tape, const Tensor<T>& logits,
                              std::span<const int> labels);

// (1/N) sum_n ||pred_n - target_n||^2 over an [N x M] pair.
template <typename T>
Tensor<T> MseLoss(Tape<T>* tape, const Tensor<T>& predictions,
                  const Tensor<T>& targets);

// wa * a + wb * b, elementwise over equal shapes.
template <typename T>
Tensor<T> WeightedSum(Tape<T>* tape, const Tensor<T>& a, T wa,
                      const Tensor<T>& b, T wb);

template <typename T>
Tensor<T> SumOfSquares(Tape<T>* tape, const Tensor<T>& input);

}  // namespace xvmtl::ad

#endif  // XVMTL_AUTODIFF_H_
