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

#include "xvmtl/gradcheck_suite.h"

#include <cmath>
#include <random>

#include "xvmtl/model.h"
#include "xvmtl/stats.h"

namespace xvmtl {

namespace {

using ad::Shape;
using ad::Tape;
using Tensor = ad::Tensor<double>;

class CaseBuilder {
 public:
  CaseBuilder(std::uint64_t seed, std::uint64_t case_index, int run) {
    std::seed_seq seq{seed, case_index, std::uint64_t(run)};
    rng_.seed(seq);
  }

  std::size_t Size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  Tensor Random(Shape shape, bool requires_grad = true, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> v(ad::NumElements(shape));
    for (auto& x : v) x = normal(rng_);
    return Tensor(std::move(shape), std::move(v), requires_grad);
  }

  // Entries bounded away from zero by `margin`, for ReLU inputs.
  Tensor AwayFromZero(Shape shape, double margin) {
    Tensor t = Random(std::move(shape));
    for (auto& x : t.values()) x = std::copysign(margin + std::abs(x), x);
    return t;
  }

  std::vector<int> Labels(std::size_t n, int classes) {
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::vector<int> labels(n);
    for (auto& l : labels) l = pick(rng_);
    return labels;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

std::vector<NamedParameter<double>> Named(
    std::initializer_list<std::pair<const char*, Tensor>> list) {
  std::vector<NamedParameter<double>> out;
  for (const auto& [name, t] : list) out.push_back({name, t});
  return out;
}

// Folds one seeded run into the per-primitive aggregate.
void Merge(GradCheckReport* total, const GradCheckReport& run, int seed) {
  for (auto entry : run.entries) {
    entry.parameter += "@seed" + std::to_string(seed);
    if (entry.relative_error >= total->max_relative_error) {
      total->max_relative_error = entry.relative_error;
      total->entries.assign(1, entry);
    }
  }
}

GradCheckReport CheckPrimitive(
    std::uint64_t case_index, const GradCheckSuiteOptions& options,
    const std::function<GradCheckReport(CaseBuilder&)>& run) {
  GradCheckReport total;
  total.entries.clear();
  for (int s = 0; s < options.primitive_seeds; ++s) {
    CaseBuilder b(options.seed, case_index, s);
    Merge(&total, run(b), s);
  }
  total.pass = total.max_relative_error < options.check.tolerance;
  return total;
}

GradCheckReport CheckNetwork(double alpha, const GradCheckSuiteOptions& options) {
  ModelConfig config = MiniatureConfig();
  config.task_weight = alpha;
  config.seed = options.seed;
  Model<double> model(config);
  CaseBuilder b(options.seed, 1000, int(std::lround(alpha * 100)));
  const std::size_t n = 4, length = 20, dim = config.feature_dim;
  Tensor x = b.Random({n, length, dim}, false);
  const std::vector<int> labels = b.Labels(n, config.num_speakers);
  std::vector<double> targets;
  for (std::size_t i = 0; i < n; ++i) {
    FramesView<double> crop{
        std::span<const double>(x.values()).subspan(i * length * dim, length * dim),
        length, dim};
    const auto z = HosTargets<double>(crop, MomentOrder(config.mtl_order));
    targets.insert(targets.end(), z.begin(), z.end());
  }
  Tensor z({n, std::size_t(config.reconstruction_dim())}, targets);
  const ForwardHeads heads{alpha < 1.0, alpha > 0.0};
  Fragment fragment = [&](Tape<double>& tape) {
    auto out = Forward(model, x, ad::NormMode::kTrain, &tape, heads);
    return MultitaskLoss(&tape, out.logits, labels, out.reconstruction, z, alpha)
        .loss;
  };
  return GradCheck(fragment, model.Parameters(), options.check);
}

}  // namespace

std::vector<SuiteCase> RunGradCheckSuite(const GradCheckSuiteOptions& options) {
  std::vector<SuiteCase> cases;
  const auto& check = options.check;
  auto add = [&](const std::string& name,
                 const std::function<GradCheckReport(CaseBuilder&)>& run) {
    cases.push_back({name, CheckPrimitive(cases.size(), options, run)});
  };

  add("conv1d_dilated", [&](CaseBuilder& b) {
    const std::size_t k = b.Size(1, 5), dilation = b.Size(1, 3);
    const std::size_t c_in = b.Size(1, 4), c_out = b.Size(1, 4);
    const std::size_t frames = (k - 1) * dilation + b.Size(1, 6);
    const bool batched = b.Size(0, 1) == 1;
    Tensor x = batched ? b.Random({b.Size(1, 3), frames, c_in})
                       : b.Random({frames, c_in});
    Tensor w = b.Random({c_out, c_in, k});
    Tensor bias = b.Random({c_out});
    return GradCheck(
        [&](Tape<double>& t) {
          return ad::SumOfSquares(&t, ad::Conv1dDilated(&t, x, w, bias, dilation));
        },
        Named({{"input", x}, {"weight", w}, {"bias", bias}}), check);
  });

  for (auto activation : {ad::Activation::kNone, ad::Activation::kRelu}) {
    const bool relu = activation == ad::Activation::kRelu;
    add(relu ? "dense_relu" : "dense", [&, activation, relu](CaseBuilder& b) {
      const std::size_t n = b.Size(1, 5), f_in = b.Size(1, 6), f_out = b.Size(1, 6);
      Tensor x, w, bias;
      // Resample until every pre-activation is clear of the ReLU kink.
      for (bool clear = false; !clear;) {
        x = b.Random({n, f_in});
        w = b.Random({f_out, f_in});
        bias = b.Random({f_out});
        const Tensor pre = ad::Dense<double>(nullptr, x, w, bias, ad::Activation::kNone);
        clear = !relu;
        if (relu) {
          clear = true;
          for (double v : pre.values()) clear = clear && std::abs(v) > 1e-2;
        }
      }
      return GradCheck(
          [&](Tape<double>& t) {
            return ad::SumOfSquares(&t, ad::Dense(&t, x, w, bias, activation));
          },
          Named({{"input", x}, {"weight", w}, {"bias", bias}}), check);
    });
  }

  add("relu", [&](CaseBuilder& b) {
    Tensor x = b.AwayFromZero({b.Size(1, 4), b.Size(1, 6)}, 1e-2);
    return GradCheck(
        [&](Tape<double>& t) { return ad::SumOfSquares(&t, ad::Relu(&t, x)); },
        Named({{"input", x}}), check);
  });

  for (auto mode : {ad::NormMode::kTrain, ad::NormMode::kInfer}) {
    const bool train = mode == ad::NormMode::kTrain;
    add(train ? "batchnorm_train" : "batchnorm_infer", [&, mode, train](CaseBuilder& b) {
      const std::size_t f = b.Size(1, 5);
      Tensor x = b.Size(0, 1) ? b.Random({b.Size(2, 4), b.Size(1, 4), f})
                              : b.Random({b.Size(2, 6), f});
      Tensor gamma = b.Random({f});
      Tensor beta = b.Random({f});
      // A fixed random mixing after normalization, since the plain sum of
      // squares of a normalized batch is nearly constant.
      Tensor mix = b.Random({f + 1, f}, false);
      Tensor mix_bias = b.Random({f + 1}, false);
      auto stats = ad::BatchNormStats<double>::Initial(f);
      std::uniform_real_distribution<double> var(0.5, 2.0);
      for (std::size_t i = 0; i < f; ++i) {
        stats.mean[i] = var(b.rng()) - 1.0;
        stats.var[i] = var(b.rng());
      }
      return GradCheck(
          [&, mode](Tape<double>& t) {
            auto local = stats;
            Tensor y = ad::BatchNorm1d(&t, x, gamma, beta, mode, &local);
            const std::size_t rows = y.numel() / f;
            y = ad::Dense(&t, y.Reshaped({rows, f}), mix, mix_bias,
                          ad::Activation::kNone);
            return ad::SumOfSquares(&t, y);
          },
          Named({{"input", x}, {"gamma", gamma}, {"beta", beta}}), check);
    });
  }

  add("stats_pool", [&](CaseBuilder& b) {
    const std::size_t frames = b.Size(2, 7), f = b.Size(1, 4);
    Tensor x = b.Size(0, 1) ? b.Random({b.Size(1, 3), frames, f})
                            : b.Random({frames, f});
    return GradCheck(
        [&](Tape<double>& t) { return ad::SumOfSquares(&t, ad::StatsPool(&t, x)); },
        Named({{"input", x}}), check);
  });

  add("stats_pool_near_constant", [&](CaseBuilder& b) {
    Tensor x = b.Random({b.Size(2, 7), b.Size(1, 4)}, true, 1e-6);
    for (auto& v : x.values()) v += 0.5;
    return GradCheck(
        [&](Tape<double>& t) { return ad::SumOfSquares(&t, ad::StatsPool(&t, x)); },
        Named({{"input", x}}), check);
  });

  add("softmax_cross_entropy", [&](CaseBuilder& b) {
    const std::size_t n = b.Size(1, 5), c = b.Size(2, 6);
    Tensor logits = b.Random({n, c}, true, 2.0);
    const auto labels = b.Labels(n, int(c));
    return GradCheck(
        [&](Tape<double>& t) { return ad::SoftmaxCrossEntropy(&t, logits, labels); },
        Named({{"logits", logits}}), check);
  });

  add("mse", [&](CaseBuilder& b) {
    const std::size_t n = b.Size(1, 5), m = b.Size(1, 6);
    Tensor pred = b.Random({n, m});
    Tensor target = b.Random({n, m});
    return GradCheck([&](Tape<double>& t) { return ad::MseLoss(&t, pred, target); },
                     Named({{"predictions", pred}, {"targets", target}}), check);
  });

  add("weighted_sum", [&](CaseBuilder& b) {
    const Shape shape = {b.Size(1, 4), b.Size(1, 4)};
    Tensor a = b.Random(shape);
    Tensor c = b.Random(shape);
    std::uniform_real_distribution<double> weight(-2.0, 2.0);
    const double wa = weight(b.rng()), wc = weight(b.rng());
    return GradCheck(
        [&](Tape<double>& t) {
          return ad::SumOfSquares(&t, ad::WeightedSum(&t, a, wa, c, wc));
        },
        Named({{"a", a}, {"b", c}}), check);
  });

  for (double alpha : options.task_weights) {
    char name[48];
    std::snprintf(name, sizeof(name), "network_alpha_%g", alpha);
    cases.push_back({name, CheckNetwork(alpha, options)});
  }
  return cases;
}

}  // namespace xvmtl
