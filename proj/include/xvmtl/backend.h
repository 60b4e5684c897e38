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

// Embedding backend: centering + LDA, length normalization, two-covariance
// PLDA and trial scoring.
//
// Two-covariance model: x = mu + y + e, y ~ N(0, B) shared by a speaker's
// utterances, e ~ N(0, W) per utterance.
//
// Backend file: "XVBK" | u32 version | u8 length_norm | u8 has_plda
//   | mean | projection | eigenvalues | [plda mean | B | W]
// with each matrix framed as u32 rank, u32 dims, float64 payload (row-major).

#ifndef XVMTL_BACKEND_H_
#define XVMTL_BACKEND_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xvmtl/model.h"

namespace xvmtl {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, largest-magnitude entry positive
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// tolerance * ||A||_F.
SymmetricEigen JacobiEigen(const Eigen::MatrixXd& symmetric,
                           double tolerance = 1e-13, int max_sweeps = 100);

struct Preprocessor {
  Eigen::VectorXd mean;
  Eigen::MatrixXd projection;  // lda_dim x input dim
  Eigen::VectorXd eigenvalues;  // retained between/within ratios, descending
  bool length_norm = true;

  int lda_dim() const { return int(projection.rows()); }
  // projection * (x - mean), then unit length if length_norm.
  Eigen::VectorXd Apply(const std::vector<double>& embedding) const;
  Eigen::VectorXd Project(const std::vector<double>& embedding) const;
};

// Speakers with a single embedding are dropped with a warning. Requires
// 1 <= lda_dim <= min(dim, speakers - 1).
Preprocessor FitPreprocessor(const std::vector<std::vector<double>>& embeddings,
                             const std::vector<int>& labels, int lda_dim,
                             bool length_norm = true);

Eigen::VectorXd LengthNormalize(const Eigen::VectorXd& v);

struct PldaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd between;  // B
  Eigen::MatrixXd within;   // W
  std::vector<double> log_likelihood;  // before EM, then after each iteration
};

struct PldaOptions {
  int iterations = 20;
  // Start from B = W = I instead of the scatter-matrix estimates.
  bool identity_init = false;
};

PldaModel FitPlda(const std::vector<Eigen::VectorXd>& data,
                  const std::vector<int>& labels,
                  const PldaOptions& options = {});

struct SpeakerPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Posterior of the latent speaker variable given one speaker's vectors.
SpeakerPosterior PosteriorForSpeaker(const PldaModel& model,
                                     const std::vector<Eigen::VectorXd>& data);

// Marginal log-likelihood of labeled data under the model (exact).
double PldaLogLikelihood(const PldaModel& model,
                         const std::vector<Eigen::VectorXd>& data,
                         const std::vector<int>& labels);

// Closed-form same-vs-different speaker log-likelihood ratio.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel& model);
  double Score(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd p_;
  double constant_ = 0.0;
};

double CosineScore(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class ScorerKind { kPlda, kCosine };

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
};

struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;
};

std::vector<Trial> ReadTrials(const std::filesystem::path& path);
void WriteTrials(const std::filesystem::path& path,
                 const std::vector<Trial>& trials);
std::vector<ScoredTrial> ReadScores(const std::filesystem::path& path);
// Scores printed with 6 decimals.
void WriteScores(const std::filesystem::path& path,
                 const std::vector<ScoredTrial>& scores);

// All unordered pairs of utterances, in list order.
std::vector<Trial> AllPairTrials(const std::vector<Embedding>& embeddings);

// Throws DataError naming the first trial whose id has no embedding. The
// PLDA path requires `plda`.
std::vector<ScoredTrial> ScoreTrials(const std::vector<Trial>& trials,
                                     const std::vector<Embedding>& embeddings,
                                     const Preprocessor& preprocessor,
                                     ScorerKind scorer,
                                     const PldaModel* plda);

struct Backend {
  Preprocessor preprocessor;
  std::optional<PldaModel> plda;
};

// Fits the preprocessor on labeled embeddings, then PLDA on their
// preprocessed images.
Backend FitBackend(const std::vector<Embedding>& embeddings, int lda_dim,
                   bool length_norm, const PldaOptions& plda_options);

void SaveBackend(const std::filesystem::path& path, const Backend& backend);
Backend LoadBackend(const std::filesystem::path& path);

// Text embedding file: `utt_id speaker_id v1 ... vN`, values with 9
// significant digits.
void WriteEmbeddings(const std::filesystem::path& path,
                     const std::vector<Embedding>& embeddings);
std::vector<Embedding> ReadEmbeddings(const std::filesystem::path& path);

}  // namespace xvmtl

#endif  // XVMTL_BACKEND_H_
