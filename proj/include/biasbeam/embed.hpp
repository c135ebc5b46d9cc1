// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasbeam/error.hpp"
#include "biasbeam/random.hpp"
#include "biasbeam/text.hpp"
#include "biasbeam/types.hpp"

namespace biasbeam {

/// Skip-gram negative-sampling hyperparameters. Defaults follow the
/// reference word2vec tool.
struct TrainParams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  double subsample_threshold = 1e-3;
  std::uint64_t min_count = 5;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  /// Throws UsageError on out-of-range fields.
  void validate() const;
};

/// Vocab-aligned word vectors for one stratum. Row i belongs to vocab token i.
struct EmbeddingMatrix {
  Vocabulary vocab;
  Matrix input;
  Matrix output;
  std::string stratum_label;

  Index dim() const { return input.cols(); }
  /// Input vector of a vocabulary word; throws DataError when absent.
  auto vector_of(std::string_view word) const {
    auto index = vocab.find(word);
    if (!index) throw DataError("word not in vocabulary: " + std::string(word));
    return input.row(static_cast<Index>(*index));
  }
};

/// Unigram^0.75 noise distribution, sampled by inverse CDF.
class NegativeSamplingTable {
 public:
  explicit NegativeSamplingTable(const Vocabulary& vocab, double power = 0.75);

  std::size_t sample(Rng& rng) const;
  double probability(std::size_t index) const;
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  std::vector<double> cdf_;
};

/// One (center, context) pair with its noise words.
struct SgnsSample {
  Index center = 0;
  Index context = 0;
  std::vector<Index> negatives;
};

/// Gradient of the sample loss. Output rows are merged when an index repeats.
struct SgnsGradient {
  double loss = 0.0;
  Vector center;
  std::vector<std::pair<Index, Vector>> output;
};

/// -log sigma(u_ctx . v_c) - sum_k log sigma(-u_k . v_c)
double sgns_loss(const Matrix& input, const Matrix& output, const SgnsSample& sample);
SgnsGradient sgns_gradient(const Matrix& input, const Matrix& output, const SgnsSample& sample);

/// One plain gradient step on the sample loss; every dot product is taken
/// before any row is written. Returns the loss before the step.
double apply_sgns_step(Matrix& input, Matrix& output, const SgnsSample& sample, double lr);

/// Input uniform in [-0.5/dim, 0.5/dim] drawn row-major from Rng(seed),
/// output all zero.
EmbeddingMatrix initialize_embedding(Vocabulary vocab, std::size_t dim, std::uint64_t seed);

struct TrainResult {
  EmbeddingMatrix embedding;
  /// Mean per-pair loss of each epoch.
  std::vector<double> epoch_losses;
};

/// Builds the vocabulary with params.min_count, then trains.
TrainResult train_word2vec(std::span<const TokenizedDoc> docs, const TrainParams& params,
                           std::string stratum_label = {});

/// Trains over a fixed vocabulary. Throws Divergence naming the epoch when
/// the loss turns non-finite.
TrainResult train_word2vec(std::span<const TokenizedDoc> docs, Vocabulary vocab,
                           const TrainParams& params, std::string stratum_label = {});

/// Cosine similarity, clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u,
                                 const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) throw DataError("cosine: dimension mismatch");
  const auto uu = u.squaredNorm();
  const auto vv = v.squaredNorm();
  if (uu == 0 || vv == 0) throw NumericError("cosine: zero vector");
  const auto c = u.dot(v) / (std::sqrt(uu) * std::sqrt(vv));
  using S = typename DerivedA::Scalar;
  return std::clamp(c, S(-1), S(1));
}

/// Mean of in-vocabulary input vectors, L2-normalized. Throws DataError when
/// no token is in the vocabulary.
Vector doc_embed(const TokenizedDoc& doc, const EmbeddingMatrix& emb);

/// k most cosine-similar words, excluding the word itself; ties go to the
/// lower vocabulary index.
std::vector<std::pair<std::string, double>> nearest_neighbors(std::string_view word,
                                                              const EmbeddingMatrix& emb,
                                                              std::size_t k);

/// Classic word-vector text format: "<V> <dim>" then "token v1 ... vdim".
/// Only input vectors are written; counts load back as 0.
void save_text(const EmbeddingMatrix& emb, const std::filesystem::path& path);
EmbeddingMatrix load_text(const std::filesystem::path& path);

/// Lossless binary sidecar: 16-byte header ("BBEMBED\0", u32 version,
/// u32 reserved), then vocabulary, label and both matrices, little-endian.
void save_binary(const EmbeddingMatrix& emb, const std::filesystem::path& path);
EmbeddingMatrix load_binary(const std::filesystem::path& path);

}  // namespace biasbeam
