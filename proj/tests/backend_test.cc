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

#include "xvmtl/backend.h"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"
#include "xvmtl/errors.h"

namespace xvmtl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::ReadFile;
using testing::TempDir;

MatrixXd RandomSpd(int dim, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> n;
  MatrixXd a(dim, dim);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return a * a.transpose() / dim + ridge * MatrixXd::Identity(dim, dim);
}

VectorXd Sample(const MatrixXd& cov, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  VectorXd z(cov.rows());
  for (int i = 0; i < z.size(); ++i) z[i] = n(rng);
  return MatrixXd(cov.llt().matrixL()) * z;
}

double LogGauss(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  Eigen::LLT<MatrixXd> llt(cov);
  const VectorXd d = x - mean;
  const double quad = d.dot(llt.solve(d));
  double logdet = 0;
  for (int i = 0; i < cov.rows(); ++i) logdet += 2 * std::log(llt.matrixL()(i, i));
  return -0.5 * (double(x.size()) * std::log(2 * std::numbers::pi) + logdet + quad);
}

// Two-covariance generative data: x = mu + y_s + e.
struct PldaData {
  std::vector<VectorXd> x;
  std::vector<int> labels;
};

PldaData Generate(const VectorXd& mu, const MatrixXd& b, const MatrixXd& w,
                  int speakers, int per, std::mt19937_64& rng) {
  PldaData d;
  for (int s = 0; s < speakers; ++s) {
    const VectorXd y = Sample(b, rng);
    for (int i = 0; i < per; ++i) {
      d.x.push_back(mu + y + Sample(w, rng));
      d.labels.push_back(s);
    }
  }
  return d;
}

TEST(JacobiTest, MatchesEigenSolver) {
  std::mt19937_64 rng(1);
  for (int dim : {1, 2, 5, 17, 40}) {
    const MatrixXd a = RandomSpd(dim, rng, 0.0) - 0.3 * MatrixXd::Identity(dim, dim);
    const SymmetricEigen mine = JacobiEigen(a);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ref(a);
    const VectorXd ref_values = ref.eigenvalues().reverse();
    EXPECT_LT((mine.values - ref_values).cwiseAbs().maxCoeff(), 1e-10 * (1 + a.norm()));
    for (int i = 1; i < dim; ++i) EXPECT_GE(mine.values[i - 1], mine.values[i]);
    const MatrixXd& v = mine.vectors;
    EXPECT_LT((v.transpose() * v - MatrixXd::Identity(dim, dim)).norm(), 1e-10);
    EXPECT_LT((a * v - v * mine.values.asDiagonal()).norm(), 1e-10 * (1 + a.norm()));
    for (int j = 0; j < dim; ++j) {
      Eigen::Index k;
      v.col(j).cwiseAbs().maxCoeff(&k);
      EXPECT_GT(v(k, j), 0.0);
    }
  }
}

TEST(JacobiTest, DiagonalInputNeedsNoRotation) {
  const MatrixXd a = VectorXd::LinSpaced(4, 1, 4).asDiagonal();
  const SymmetricEigen e = JacobiEigen(a);
  EXPECT_EQ(e.values, VectorXd::LinSpaced(4, 4, 1));
  EXPECT_THROW(JacobiEigen(MatrixXd::Ones(2, 3)), ConfigError);
}

// Labeled embeddings with Gaussian class means and isotropic noise.
void ClassData(int classes, int per, int dim, double spread, std::uint64_t seed,
               std::vector<std::vector<double>>* x, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (int c = 0; c < classes; ++c) {
    std::vector<double> mean(dim);
    for (auto& m : mean) m = spread * n(rng);
    for (int i = 0; i < per; ++i) {
      std::vector<double> v(dim);
      for (int d = 0; d < dim; ++d) v[d] = mean[d] + n(rng) * (1.0 + 0.5 * d);
      x->push_back(v);
      labels->push_back(c);
    }
  }
}

TEST(LdaTest, WhitensWithinClassAndCenters) {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  ClassData(8, 30, 6, 3.0, 2, &x, &labels);
  const Preprocessor pre = FitPreprocessor(x, labels, 5, false);
  EXPECT_EQ(pre.lda_dim(), 5);
  EXPECT_EQ(pre.eigenvalues.size(), 5);
  for (int i = 1; i < 5; ++i) EXPECT_GE(pre.eigenvalues[i - 1], pre.eigenvalues[i]);

  std::vector<VectorXd> y;
  VectorXd total = VectorXd::Zero(5);
  for (const auto& v : x) {
    y.push_back(pre.Apply(v));
    total += y.back();
  }
  EXPECT_LT((total / double(y.size())).norm(), 1e-10);

  // Within-class scatter / count of the projected data is the identity.
  MatrixXd within = MatrixXd::Zero(5, 5);
  for (int c = 0; c < 8; ++c) {
    VectorXd m = VectorXd::Zero(5);
    for (int i = 0; i < 30; ++i) m += y[c * 30 + i];
    m /= 30.0;
    for (int i = 0; i < 30; ++i) {
      const VectorXd d = y[c * 30 + i] - m;
      within += d * d.transpose();
    }
  }
  within /= double(y.size());
  EXPECT_LT((within - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LdaTest, SeparatesWellSeparatedClasses) {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  ClassData(4, 25, 8, 30.0, 3, &x, &labels);
  const Preprocessor pre = FitPreprocessor(x, labels, 3, false);
  // Projected class means sit more than 5 within-class std apart.
  std::vector<VectorXd> means(4, VectorXd::Zero(3));
  for (std::size_t i = 0; i < x.size(); ++i) means[labels[i]] += pre.Apply(x[i]) / 25.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) EXPECT_GT((means[a] - means[b]).norm(), 5.0);
  }
}

TEST(LdaTest, RotationInvariance) {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  ClassData(6, 20, 5, 2.0, 4, &x, &labels);
  std::mt19937_64 rng(9);
  const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(RandomSpd(5, rng)).householderQ();
  std::vector<std::vector<double>> rotated;
  for (const auto& v : x) {
    const VectorXd r = q * Eigen::Map<const VectorXd>(v.data(), 5);
    rotated.emplace_back(r.data(), r.data() + 5);
  }
  const Preprocessor a = FitPreprocessor(x, labels, 4, false);
  const Preprocessor b = FitPreprocessor(rotated, labels, 4, false);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = i + 1; j < 10; ++j) {
      const double da = (a.Apply(x[i * 7]) - a.Apply(x[j * 7])).norm();
      const double db = (b.Apply(rotated[i * 7]) - b.Apply(rotated[j * 7])).norm();
      EXPECT_NEAR(da, db, 1e-8 * da);
    }
  }
}

TEST(LdaTest, Errors) {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  ClassData(3, 5, 4, 2.0, 5, &x, &labels);
  EXPECT_THROW(FitPreprocessor(x, labels, 3, false), ConfigError);  // S-1 = 2
  EXPECT_THROW(FitPreprocessor(x, labels, 0, false), ConfigError);
  const Preprocessor pre = FitPreprocessor(x, labels, 2, true);
  EXPECT_THROW(pre.Apply({1.0, 2.0}), DataError);
  // Singletons are dropped, leaving one usable speaker.
  EXPECT_THROW(FitPreprocessor({{1, 2}, {2, 1}, {0, 0}}, {0, 0, 1}, 1, false), DataError);
}

TEST(LengthNormTest, Properties) {
  const VectorXd v = VectorXd::LinSpaced(5, -2, 3);
  const VectorXd u = LengthNormalize(v);
  EXPECT_NEAR(u.norm(), 1.0, 1e-15);
  EXPECT_LT((LengthNormalize(u) - u).norm(), 1e-15);
  EXPECT_LT((LengthNormalize(7.5 * v) - u).norm(), 1e-15);
  EXPECT_THROW(LengthNormalize(VectorXd::Zero(3)), DataError);
}

TEST(CosineTest, Examples) {
  VectorXd a(2), b(2);
  a << 3, 0;
  b << 0, 2;
  EXPECT_DOUBLE_EQ(CosineScore(a, a), 1.0);
  EXPECT_DOUBLE_EQ(CosineScore(a, b), 0.0);
  EXPECT_DOUBLE_EQ(CosineScore(a, -a), -1.0);
}

TEST(PldaTest, IdentityPosterior) {
  PldaModel m;
  m.mean = VectorXd::Constant(3, 0.5);
  m.between = MatrixXd::Identity(3, 3);
  m.within = MatrixXd::Identity(3, 3);
  std::mt19937_64 rng(6);
  std::vector<VectorXd> xs;
  VectorXd sum = VectorXd::Zero(3);
  for (int i = 0; i < 4; ++i) {
    xs.push_back(Sample(MatrixXd::Identity(3, 3), rng));
    sum += xs.back();
  }
  const SpeakerPosterior p = PosteriorForSpeaker(m, xs);
  const VectorXd expect = 4.0 / 5.0 * (sum / 4.0 - m.mean);
  EXPECT_LT((p.mean - expect).norm(), 1e-12);
  EXPECT_LT((p.covariance - MatrixXd::Identity(3, 3) / 5.0).norm(), 1e-12);
}

// log p(stacked speaker vectors) = log N(1 (x) mu, I (x) W + 11' (x) B).
double BruteForceLogLikelihood(const PldaModel& m, const PldaData& d) {
  const int dim = int(m.mean.size());
  std::map<int, std::vector<VectorXd>> groups;
  for (std::size_t i = 0; i < d.x.size(); ++i) groups[d.labels[i]].push_back(d.x[i]);
  double total = 0;
  for (const auto& [label, xs] : groups) {
    const int n = int(xs.size());
    MatrixXd cov(n * dim, n * dim);
    VectorXd stacked(n * dim), mean(n * dim);
    for (int i = 0; i < n; ++i) {
      stacked.segment(i * dim, dim) = xs[i];
      mean.segment(i * dim, dim) = m.mean;
      for (int j = 0; j < n; ++j) {
        cov.block(i * dim, j * dim, dim, dim) = m.between + (i == j ? m.within : MatrixXd::Zero(dim, dim));
      }
    }
    total += LogGauss(stacked, mean, cov);
  }
  return total;
}

TEST(PldaTest, ExactLogLikelihoodMatchesStackedGaussian) {
  std::mt19937_64 rng(7);
  const int dim = 4;
  PldaModel m;
  m.mean = VectorXd::LinSpaced(dim, -1, 1);
  m.between = RandomSpd(dim, rng);
  m.within = RandomSpd(dim, rng);
  PldaData d = Generate(m.mean, m.between, m.within, 5, 1, rng);
  // Ragged speakers: sizes 1..5.
  d = {};
  for (int s = 0; s < 5; ++s) {
    const PldaData one = Generate(m.mean, m.between, m.within, 1, s + 1, rng);
    for (const auto& x : one.x) {
      d.x.push_back(x);
      d.labels.push_back(s);
    }
  }
  const double mine = PldaLogLikelihood(m, d.x, d.labels);
  const double ref = BruteForceLogLikelihood(m, d);
  EXPECT_NEAR(mine, ref, 1e-9 * std::abs(ref));
}

TEST(PldaTest, EmLikelihoodIsNonDecreasing) {
  std::mt19937_64 rng(8);
  const int dim = 5;
  const MatrixXd b = RandomSpd(dim, rng, 1.0);
  const MatrixXd w = RandomSpd(dim, rng, 0.2);
  const PldaData d = Generate(VectorXd::Ones(dim), b, w, 40, 6, rng);
  for (bool identity : {false, true}) {
    const PldaModel m = FitPlda(d.x, d.labels, {15, identity});
    ASSERT_EQ(m.log_likelihood.size(), 16u);
    for (std::size_t i = 1; i < m.log_likelihood.size(); ++i) {
      EXPECT_GE(m.log_likelihood[i], m.log_likelihood[i - 1] - 1e-8) << i;
    }
    EXPECT_NEAR(m.log_likelihood.back(), PldaLogLikelihood(m, d.x, d.labels),
                1e-9 * std::abs(m.log_likelihood.back()));
    EXPECT_LT((m.between - m.between.transpose()).norm(), 1e-12);
    EXPECT_GT(m.within.llt().matrixL()(0, 0), 0.0);
  }
}

PldaModel RandomModel(int dim, std::mt19937_64& rng) {
  PldaModel m;
  m.mean = Sample(MatrixXd::Identity(dim, dim), rng);
  m.between = RandomSpd(dim, rng, 1.0);
  m.within = RandomSpd(dim, rng, 0.3);
  return m;
}

TEST(PldaTest, ScoreMatchesGaussianRatioAndIsSymmetric) {
  std::mt19937_64 rng(10);
  const int dim = 4;
  const PldaModel m = RandomModel(dim, rng);
  const PldaScorer scorer(m);
  const MatrixXd t = m.between + m.within;
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd a = m.mean + Sample(t, rng);
    const VectorXd b = m.mean + Sample(t, rng);
    VectorXd ab(2 * dim), mu2(2 * dim);
    ab << a, b;
    mu2 << m.mean, m.mean;
    MatrixXd same(2 * dim, 2 * dim);
    same << t, m.between, m.between, t;
    const double ref = LogGauss(ab, mu2, same) - LogGauss(a, m.mean, t) - LogGauss(b, m.mean, t);
    EXPECT_NEAR(scorer.Score(a, b), ref, 1e-9 * (1 + std::abs(ref)));
    EXPECT_NEAR(scorer.Score(a, b), scorer.Score(b, a), 1e-10);
  }
}

TEST(PldaTest, ScoreInvariantUnderAffineReparametrization) {
  std::mt19937_64 rng(11);
  const int dim = 3;
  const PldaModel m = RandomModel(dim, rng);
  const MatrixXd a = RandomSpd(dim, rng) + MatrixXd::Identity(dim, dim);
  const VectorXd c = VectorXd::LinSpaced(dim, 2, -2);
  PldaModel t;
  t.mean = a * m.mean + c;
  t.between = a * m.between * a.transpose();
  t.within = a * m.within * a.transpose();
  const PldaScorer s1(m), s2(t);
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = Sample(MatrixXd::Identity(dim, dim), rng);
    const VectorXd y = Sample(MatrixXd::Identity(dim, dim), rng);
    EXPECT_NEAR(s1.Score(x, y), s2.Score(a * x + c, a * y + c), 1e-6);
  }
}

double Auc(const std::vector<double>& tar, const std::vector<double>& non) {
  double wins = 0;
  for (double t : tar) {
    for (double n : non) wins += t > n ? 1.0 : (t == n ? 0.5 : 0.0);
  }
  return wins / double(tar.size() * non.size());
}

TEST(PldaTest, DiscriminatesGeneratedSpeakers) {
  std::mt19937_64 rng(12);
  const int dim = 6;
  const MatrixXd b = 2.0 * MatrixXd::Identity(dim, dim);
  const MatrixXd w = RandomSpd(dim, rng, 0.2);
  const PldaData train = Generate(VectorXd::Zero(dim), b, w, 60, 8, rng);
  const PldaData test = Generate(VectorXd::Zero(dim), b, w, 20, 4, rng);
  const PldaScorer scorer(FitPlda(train.x, train.labels));
  std::vector<double> tar, non;
  for (std::size_t i = 0; i < test.x.size(); ++i) {
    for (std::size_t j = i + 1; j < test.x.size(); ++j) {
      (test.labels[i] == test.labels[j] ? tar : non)
          .push_back(scorer.Score(test.x[i], test.x[j]));
    }
  }
  EXPECT_GT(Auc(tar, non), 0.95);
}

std::vector<Embedding> TinyEmbeddings() {
  std::vector<Embedding> e;
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n;
  for (int s = 0; s < 6; ++s) {
    std::vector<double> center(5);
    for (auto& c : center) c = 3 * n(rng);
    for (int i = 0; i < 5; ++i) {
      Embedding x{"s" + std::to_string(s) + "u" + std::to_string(i), "s" + std::to_string(s), center};
      for (auto& v : x.values) v += n(rng);
      e.push_back(x);
    }
  }
  return e;
}

TEST(BackendIoTest, RoundTrips) {
  TempDir dir;
  const auto emb = TinyEmbeddings();
  WriteEmbeddings(dir / "e.txt", emb);
  const auto read = ReadEmbeddings(dir / "e.txt");
  ASSERT_EQ(read.size(), emb.size());
  EXPECT_EQ(read[3].utt_id, "s0u3");
  for (int d = 0; d < 5; ++d) EXPECT_NEAR(read[3].values[d], emb[3].values[d], 1e-8 * std::abs(emb[3].values[d]));

  const Backend backend = FitBackend(read, 4, true, {});
  ASSERT_TRUE(backend.plda.has_value());
  SaveBackend(dir / "b.bin", backend);
  const Backend loaded = LoadBackend(dir / "b.bin");
  SaveBackend(dir / "c.bin", loaded);
  EXPECT_TRUE(ReadFile(dir / "b.bin") == ReadFile(dir / "c.bin"));
  EXPECT_EQ(loaded.preprocessor.projection, backend.preprocessor.projection);
  EXPECT_EQ(loaded.plda->between, backend.plda->between);

  const auto trials = AllPairTrials(read);
  EXPECT_EQ(trials.size(), 30u * 29u / 2u);
  WriteTrials(dir / "t.txt", trials);
  const auto t2 = ReadTrials(dir / "t.txt");
  ASSERT_EQ(t2.size(), trials.size());
  EXPECT_TRUE(t2[0].target);
  EXPECT_EQ(t2.back().target, trials.back().target);

  const auto scores = ScoreTrials(t2, read, loaded.preprocessor, ScorerKind::kPlda, &*loaded.plda);
  WriteScores(dir / "s.txt", scores);
  const auto s2 = ReadScores(dir / "s.txt");
  ASSERT_EQ(s2.size(), scores.size());
  EXPECT_NEAR(s2[5].score, scores[5].score, 5e-7);
  EXPECT_EQ(ReadFile(dir / "s.txt").substr(0, 10), "s0u0 s0u1 ");
}

TEST(BackendIoTest, Errors) {
  TempDir dir;
  testing::WriteFile(dir / "t.txt", "a b target\nc d maybe\n");
  try {
    ReadTrials(dir / "t.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  testing::WriteFile(dir / "e.txt", "a s 1 2 3\nb s 1 2\n");
  EXPECT_THROW(ReadEmbeddings(dir / "e.txt"), DimMismatchError);
  testing::WriteFile(dir / "bad.bin", "XXXX0000");
  EXPECT_THROW(LoadBackend(dir / "bad.bin"), BadMagicError);

  const auto emb = TinyEmbeddings();
  const Backend backend = FitBackend(emb, 4, true, {});
  const std::vector<Trial> trials = {{"s0u0", "s0u1", true}, {"s0u0", "ghost", false}};
  try {
    ScoreTrials(trials, emb, backend.preprocessor, ScorerKind::kCosine, nullptr);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("trial 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
  EXPECT_THROW(ScoreTrials(trials, emb, backend.preprocessor, ScorerKind::kPlda, nullptr), ConfigError);
}

}  // namespace
}  // namespace xvmtl
