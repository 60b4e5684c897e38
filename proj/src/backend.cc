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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "xvmtl/binary_io.h"
#include "xvmtl/errors.h"
#include "xvmtl/log.h"

namespace xvmtl {

namespace fs = std::filesystem;

namespace {

constexpr char kBackendMagic[] = "XVBK";
constexpr std::uint32_t kBackendVersion = 1;
constexpr double kRegularization = 1e-4;

using Groups = std::vector<std::vector<std::size_t>>;

// Indices per label, dropping labels with fewer than two members.
Groups GroupByLabel(const std::vector<int>& labels, const char* what,
                    std::size_t min_size = 2) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  Groups groups;
  std::size_t dropped = 0;
  for (auto& [label, members] : by_label) {
    if (members.size() < min_size) {
      ++dropped;
      continue;
    }
    groups.push_back(std::move(members));
  }
  if (dropped) {
    LogWarning(std::string(what) + ": excluded " + std::to_string(dropped) +
               " speakers with a single utterance");
  }
  return groups;
}

// Cholesky factor, regularizing with kRegularization * trace/dim * I when the
// matrix is not numerically positive definite.
Eigen::LLT<Eigen::MatrixXd> RobustCholesky(Eigen::MatrixXd m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double ridge = kRegularization * m.trace() / double(m.rows());
  LogWarning(std::string(what) + " not positive definite; adding " +
             std::to_string(ridge) + " to the diagonal");
  m.diagonal().array() += ridge;
  llt.compute(m);
  if (llt.info() != Eigen::Success) {
    throw DataError(std::string(what) + " is singular even after regularization");
  }
  return llt;
}

double LogDet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

std::string FormatScore(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void WriteMatrix(std::ostream& os, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      rm = m;
  binary::WriteDoubleTensor(os, {std::size_t(m.rows()), std::size_t(m.cols())},
                            std::span<const double>(rm.data(), rm.size()));
}

void WriteVector(std::ostream& os, const Eigen::VectorXd& v) {
  binary::WriteDoubleTensor(os, {std::size_t(v.size())},
                            std::span<const double>(v.data(), v.size()));
}

Eigen::MatrixXd ReadMatrix(std::istream& is, const std::string& name) {
  std::vector<std::size_t> shape;
  auto values = binary::ReadDoubleTensor(is, &shape, name);
  if (shape.size() != 2) throw DimMismatchError(name + ": expected a matrix");
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::RowMajor>>(
      values.data(), Eigen::Index(shape[0]), Eigen::Index(shape[1]));
}

Eigen::VectorXd ReadVector(std::istream& is, const std::string& name) {
  std::vector<std::size_t> shape;
  auto values = binary::ReadDoubleTensor(is, &shape, name);
  if (shape.size() != 1) throw DimMismatchError(name + ": expected a vector");
  return ToVector(values);
}

}  // namespace

SymmetricEigen JacobiEigen(const Eigen::MatrixXd& symmetric, double tolerance,
                           int max_sweeps) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw ConfigError("JacobiEigen needs a square matrix");
  Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  SymmetricEigen out;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off_sq = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) off_sq += 2.0 * a(i, j) * a(i, j);
    }
    const double off = std::sqrt(off_sq);
    if (off <= tolerance * norm || norm == 0.0) break;
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i) > a(j, j);
  });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    Eigen::VectorXd col = v.col(order[i]);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.vectors.col(i) = col;
  }
  return out;
}

Eigen::VectorXd LengthNormalize(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DataError("cannot length-normalize a zero vector");
  return v / norm;
}

Eigen::VectorXd Preprocessor::Project(const std::vector<double>& embedding) const {
  if (Eigen::Index(embedding.size()) != mean.size()) {
    throw DataError("embedding of dimension " + std::to_string(embedding.size()) +
                    " given to a preprocessor for dimension " +
                    std::to_string(mean.size()));
  }
  return projection * (ToVector(embedding) - mean);
}

Eigen::VectorXd Preprocessor::Apply(const std::vector<double>& embedding) const {
  Eigen::VectorXd y = Project(embedding);
  return length_norm ? LengthNormalize(y) : y;
}

Preprocessor FitPreprocessor(const std::vector<std::vector<double>>& embeddings,
                             const std::vector<int>& labels, int lda_dim,
                             bool length_norm) {
  if (embeddings.size() != labels.size()) {
    throw ConfigError("embeddings and labels differ in length");
  }
  const Groups groups = GroupByLabel(labels, "LDA");
  if (groups.size() < 2) {
    throw DataError("LDA needs at least 2 speakers with 2 or more embeddings");
  }
  const Eigen::Index dim = Eigen::Index(embeddings.front().size());
  if (lda_dim < 1 || lda_dim > std::min<int>(dim, int(groups.size()) - 1)) {
    throw ConfigError("lda_dim " + std::to_string(lda_dim) + " must be in [1, " +
                      std::to_string(std::min<int>(dim, int(groups.size()) - 1)) +
                      "] for " + std::to_string(groups.size()) + " speakers");
  }
  Preprocessor pre;
  pre.length_norm = length_norm;
  pre.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& e : embeddings) {
    if (Eigen::Index(e.size()) != dim) throw DataError("ragged embedding set");
    pre.mean += ToVector(e);
  }
  pre.mean /= double(embeddings.size());

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(dim, dim);
  std::size_t count = 0;
  for (const auto& members : groups) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    for (std::size_t i : members) m += ToVector(embeddings[i]);
    m /= double(members.size());
    for (std::size_t i : members) {
      const Eigen::VectorXd d = ToVector(embeddings[i]) - m;
      within.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    const Eigen::VectorXd dm = m - pre.mean;
    between.selfadjointView<Eigen::Lower>().rankUpdate(dm, double(members.size()));
    count += members.size();
  }
  within = within.selfadjointView<Eigen::Lower>();
  between = between.selfadjointView<Eigen::Lower>();
  within /= double(count);
  between /= double(count);

  const auto llt = RobustCholesky(within, "within-class scatter");
  // whitened between-class scatter L^-1 Sb L^-T
  const Eigen::MatrixXd l_inv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(dim, dim));
  const Eigen::MatrixXd whitened = l_inv * between * l_inv.transpose();
  const SymmetricEigen eig = JacobiEigen(whitened);
  pre.eigenvalues = eig.values.head(lda_dim);
  pre.projection = eig.vectors.leftCols(lda_dim).transpose() * l_inv;
  return pre;
}

double PldaLogLikelihood(const PldaModel& model,
                         const std::vector<Eigen::VectorXd>& data,
                         const std::vector<int>& labels) {
  const Groups groups = GroupByLabel(labels, "PLDA likelihood", 1);
  const Eigen::Index d = model.mean.size();
  const Eigen::LLT<Eigen::MatrixXd> w_llt(model.within);
  const double log_det_w = LogDet(w_llt);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (const auto& members : groups) {
    const double n = double(members.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i : members) mean += data[i];
    mean /= n;
    double within_quad = 0.0;
    for (std::size_t i : members) {
      within_quad += (data[i] - mean).dot(w_llt.solve(data[i] - mean));
    }
    const Eigen::MatrixXd cov = model.between + model.within / n;
    const Eigen::LLT<Eigen::MatrixXd> c_llt(cov);
    const Eigen::VectorXd centered = mean - model.mean;
    // p(x_1..x_n) = N(mean; mu, B + W/n) * within-deviation term
    total += -0.5 * (n - 1.0) * double(d) * log_2pi -
             0.5 * (n - 1.0) * log_det_w - 0.5 * double(d) * std::log(n) -
             0.5 * within_quad;
    total += -0.5 * (double(d) * log_2pi + LogDet(c_llt) +
                     centered.dot(c_llt.solve(centered)));
  }
  return total;
}

SpeakerPosterior PosteriorForSpeaker(const PldaModel& model,
                                     const std::vector<Eigen::VectorXd>& data) {
  const Eigen::Index d = model.mean.size();
  const Eigen::MatrixXd b_inv = model.between.inverse();
  const Eigen::MatrixXd w_inv = model.within.inverse();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (const auto& x : data) sum += x - model.mean;
  SpeakerPosterior post;
  post.covariance = (b_inv + double(data.size()) * w_inv).inverse();
  post.mean = post.covariance * (w_inv * sum);
  return post;
}

PldaModel FitPlda(const std::vector<Eigen::VectorXd>& data,
                  const std::vector<int>& labels, const PldaOptions& options) {
  if (data.size() != labels.size()) {
    throw ConfigError("PLDA data and labels differ in length");
  }
  const Groups groups = GroupByLabel(labels, "PLDA");
  if (groups.empty()) {
    throw DataError("PLDA needs speakers with at least 2 utterances");
  }
  std::vector<Eigen::VectorXd> x;
  std::vector<int> x_labels;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) {
      x.push_back(data[i]);
      x_labels.push_back(int(g));
    }
  }
  const Eigen::Index d = x.front().size();
  PldaModel model;
  model.mean = Eigen::VectorXd::Zero(d);
  for (const auto& v : x) model.mean += v;
  model.mean /= double(x.size());

  if (options.identity_init) {
    model.between = Eigen::MatrixXd::Identity(d, d);
    model.within = Eigen::MatrixXd::Identity(d, d);
  } else {
    model.between = Eigen::MatrixXd::Zero(d, d);
    model.within = Eigen::MatrixXd::Zero(d, d);
    for (const auto& members : groups) {
      Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
      for (std::size_t i : members) m += data[i];
      m /= double(members.size());
      for (std::size_t i : members) {
        model.within += (data[i] - m) * (data[i] - m).transpose();
      }
      model.between += (m - model.mean) * (m - model.mean).transpose();
    }
    model.within /= double(x.size());
    model.between /= double(groups.size());
  }
  for (auto* m : {&model.within, &model.between}) {
    const auto llt = RobustCholesky(*m, m == &model.within
                                            ? "PLDA within covariance"
                                            : "PLDA between covariance");
    *m = llt.reconstructedMatrix();
  }

  model.log_likelihood.push_back(PldaLogLikelihood(model, x, x_labels));
  std::vector<Eigen::VectorXd> members_data;
  for (int it = 0; it < options.iterations; ++it) {
    const Eigen::MatrixXd b_inv = model.between.inverse();
    const Eigen::MatrixXd w_inv = model.within.inverse();
    Eigen::MatrixXd new_between = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd new_within = Eigen::MatrixXd::Zero(d, d);
    for (const auto& members : groups) {
      const double n = double(members.size());
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
      for (std::size_t i : members) sum += data[i] - model.mean;
      const Eigen::MatrixXd cov = (b_inv + n * w_inv).inverse();
      const Eigen::VectorXd mean = cov * (w_inv * sum);
      new_between += mean * mean.transpose() + cov;
      for (std::size_t i : members) {
        const Eigen::VectorXd r = data[i] - model.mean - mean;
        new_within += r * r.transpose();
      }
      new_within += n * cov;
    }
    model.between = new_between / double(groups.size());
    model.within = new_within / double(x.size());
    model.between = 0.5 * (model.between + model.between.transpose()).eval();
    model.within = 0.5 * (model.within + model.within.transpose()).eval();
    model.log_likelihood.push_back(PldaLogLikelihood(model, x, x_labels));
  }
  return model;
}

PldaScorer::PldaScorer(const PldaModel& model) : mean_(model.mean) {
  const Eigen::MatrixXd total = model.between + model.within;
  const Eigen::LLT<Eigen::MatrixXd> t_llt(total);
  const Eigen::MatrixXd t_inv =
      t_llt.solve(Eigen::MatrixXd::Identity(total.rows(), total.cols()));
  const Eigen::MatrixXd schur = total - model.between * t_inv * model.between;
  const Eigen::LLT<Eigen::MatrixXd> s_llt(schur);
  if (t_llt.info() != Eigen::Success || s_llt.info() != Eigen::Success) {
    throw DataError("PLDA covariances are not positive definite");
  }
  const Eigen::MatrixXd a =
      s_llt.solve(Eigen::MatrixXd::Identity(total.rows(), total.cols()));
  q_ = t_inv - a;
  q_ = 0.5 * (q_ + q_.transpose()).eval();
  p_ = t_inv * model.between * a;
  p_ = 0.5 * (p_ + p_.transpose()).eval();
  constant_ = 0.5 * (LogDet(t_llt) - LogDet(s_llt));
}

double PldaScorer::Score(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const Eigen::VectorXd x = a - mean_;
  const Eigen::VectorXd y = b - mean_;
  return 0.5 * x.dot(q_ * x) + 0.5 * y.dot(q_ * y) + x.dot(p_ * y) + constant_;
}

double CosineScore(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return LengthNormalize(a).dot(LengthNormalize(b));
}

std::vector<Trial> ReadTrials(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open trial file " + path.string());
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Trial t;
    std::string label, extra;
    if (!(ls >> t.enroll >> t.test >> label) || (ls >> extra)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'enroll_id test_id target|nontarget'");
    }
    if (label == "target") {
      t.target = true;
    } else if (label != "nontarget") {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad label '" + label + "'");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void WriteTrials(const fs::path& path, const std::vector<Trial>& trials) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& t : trials) {
    os << t.enroll << ' ' << t.test << ' ' << (t.target ? "target" : "nontarget")
       << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<ScoredTrial> ReadScores(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open score file " + path.string());
  std::vector<ScoredTrial> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScoredTrial s;
    std::string extra;
    if (!(ls >> s.enroll >> s.test >> s.score) || (ls >> extra)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'enroll_id test_id score'");
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

void WriteScores(const fs::path& path, const std::vector<ScoredTrial>& scores) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& s : scores) {
    os << s.enroll << ' ' << s.test << ' ' << FormatScore(s.score) << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<Trial> AllPairTrials(const std::vector<Embedding>& embeddings) {
  std::vector<Trial> trials;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      trials.push_back({embeddings[i].utt_id, embeddings[j].utt_id,
                        embeddings[i].speaker_id == embeddings[j].speaker_id});
    }
  }
  return trials;
}

std::vector<ScoredTrial> ScoreTrials(const std::vector<Trial>& trials,
                                     const std::vector<Embedding>& embeddings,
                                     const Preprocessor& preprocessor,
                                     ScorerKind scorer, const PldaModel* plda) {
  if (scorer == ScorerKind::kPlda && plda == nullptr) {
    throw ConfigError("PLDA scoring requested without a PLDA model");
  }
  std::unordered_map<std::string, const Embedding*> by_id;
  for (const auto& e : embeddings) by_id.emplace(e.utt_id, &e);
  std::unordered_map<std::string, Eigen::VectorXd> cache;
  auto lookup = [&](const std::string& id,
                    std::size_t line) -> const Eigen::VectorXd& {
    auto hit = cache.find(id);
    if (hit != cache.end()) return hit->second;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw DataError("trial " + std::to_string(line) + ": no embedding for '" +
                      id + "'");
    }
    return cache.emplace(id, preprocessor.Apply(it->second->values))
        .first->second;
  };
  std::optional<PldaScorer> plda_scorer;
  if (scorer == ScorerKind::kPlda) plda_scorer.emplace(*plda);
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& a = lookup(trials[i].enroll, i + 1);
    const auto& b = lookup(trials[i].test, i + 1);
    const double s = plda_scorer ? plda_scorer->Score(a, b) : CosineScore(a, b);
    out.push_back({trials[i].enroll, trials[i].test, s});
  }
  return out;
}

Backend FitBackend(const std::vector<Embedding>& embeddings, int lda_dim,
                   bool length_norm, const PldaOptions& plda_options) {
  std::map<std::string, int> speaker_index;
  for (const auto& e : embeddings) speaker_index.emplace(e.speaker_id, 0);
  int next = 0;
  for (auto& [id, label] : speaker_index) label = next++;
  std::vector<std::vector<double>> values;
  std::vector<int> labels;
  for (const auto& e : embeddings) {
    values.push_back(e.values);
    labels.push_back(speaker_index.at(e.speaker_id));
  }
  Backend backend;
  backend.preprocessor = FitPreprocessor(values, labels, lda_dim, length_norm);
  std::vector<Eigen::VectorXd> projected;
  for (const auto& v : values) projected.push_back(backend.preprocessor.Apply(v));
  backend.plda = FitPlda(projected, labels, plda_options);
  return backend;
}

void SaveBackend(const fs::path& path, const Backend& backend) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binary::WriteMagic(os, kBackendMagic);
  binary::WritePod<std::uint32_t>(os, kBackendVersion);
  binary::WritePod<std::uint8_t>(os, backend.preprocessor.length_norm ? 1 : 0);
  binary::WritePod<std::uint8_t>(os, backend.plda ? 1 : 0);
  WriteVector(os, backend.preprocessor.mean);
  WriteMatrix(os, backend.preprocessor.projection);
  WriteVector(os, backend.preprocessor.eigenvalues);
  if (backend.plda) {
    WriteVector(os, backend.plda->mean);
    WriteMatrix(os, backend.plda->between);
    WriteMatrix(os, backend.plda->within);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Backend LoadBackend(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open backend " + path.string());
  binary::ExpectMagic(is, kBackendMagic, path.string());
  const auto version = binary::ReadPod<std::uint32_t>(is, "backend version");
  if (version != kBackendVersion) {
    throw ParseError(path.string() + ": unsupported backend version " +
                     std::to_string(version));
  }
  Backend backend;
  backend.preprocessor.length_norm =
      binary::ReadPod<std::uint8_t>(is, "length-norm flag") != 0;
  const bool has_plda = binary::ReadPod<std::uint8_t>(is, "plda flag") != 0;
  backend.preprocessor.mean = ReadVector(is, "mean");
  backend.preprocessor.projection = ReadMatrix(is, "projection");
  backend.preprocessor.eigenvalues = ReadVector(is, "eigenvalues");
  if (backend.preprocessor.projection.cols() != backend.preprocessor.mean.size()) {
    throw DimMismatchError(path.string() + ": projection does not match mean");
  }
  if (has_plda) {
    PldaModel plda;
    plda.mean = ReadVector(is, "plda mean");
    plda.between = ReadMatrix(is, "plda between");
    plda.within = ReadMatrix(is, "plda within");
    backend.plda = std::move(plda);
  }
  return backend;
}

void WriteEmbeddings(const fs::path& path,
                     const std::vector<Embedding>& embeddings) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  char buf[40];
  for (const auto& e : embeddings) {
    os << e.utt_id << ' ' << e.speaker_id;
    for (double v : e.values) {
      std::snprintf(buf, sizeof(buf), " %.9g", v);
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<Embedding> ReadEmbeddings(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open embeddings " + path.string());
  std::vector<Embedding> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Embedding e;
    if (!(ls >> e.utt_id >> e.speaker_id)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": missing ids");
    }
    double v;
    while (ls >> v) e.values.push_back(v);
    if (!ls.eof()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad value");
    }
    if (!out.empty() && out.front().values.size() != e.values.size()) {
      throw DimMismatchError(path.string() + ":" + std::to_string(line_no) +
                             ": embedding dimension differs");
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace xvmtl
