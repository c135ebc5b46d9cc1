// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasbeam/embed.hpp"

namespace biasbeam {

/// Named list of distinct words.
class WordSet {
 public:
  /// Throws DataError when empty, when a word repeats, or is blank.
  WordSet(std::string name, std::vector<std::string> words);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::string name_;
  std::vector<std::string> words_;
};

/// Male words are set A, female words set B: positive scores mean male bias.
struct AttributePair {
  /// Throws DataError when the two sets share a word.
  AttributePair(WordSet male, WordSet female);

  WordSet male;
  WordSet female;

  AttributePair swapped() const { return AttributePair(female, male); }
};

struct Coverage {
  std::vector<std::string> present;
  std::vector<std::string> missing;
};

/// Order-preserving split of set.words() by vocabulary membership.
Coverage resolve_wordset(const WordSet& set, const EmbeddingMatrix& emb);

/// s(w, A, B) over vector rows: mean cosine of w to the rows of `male` minus
/// mean cosine of w to the rows of `female`.
template <typename DW, typename DA, typename DB>
typename DW::Scalar association(const Eigen::MatrixBase<DW>& w, const Eigen::MatrixBase<DA>& male,
                                const Eigen::MatrixBase<DB>& female) {
  using S = typename DW::Scalar;
  if (male.rows() == 0 || female.rows() == 0)
    throw DataError("association: empty attribute set");
  S a = 0;
  for (Index i = 0; i < male.rows(); ++i) a += cosine(w, male.row(i));
  S b = 0;
  for (Index i = 0; i < female.rows(); ++i) b += cosine(w, female.row(i));
  return a / static_cast<S>(male.rows()) - b / static_cast<S>(female.rows());
}

/// Population mean over standard deviation. Throws DataError with fewer
/// than two scores and DegenerateVariance when the spread vanishes.
double effect_size_of(std::span<const double> scores);

/// Per-word association; throws DataError when `word` or a whole attribute
/// set is out of vocabulary. Missing attribute words are skipped.
double association(std::string_view word, const AttributePair& attrs, const EmbeddingMatrix& emb);

/// Associations of the in-vocabulary entries of a raw word list, in order.
/// Repeats are kept.
std::vector<double> association_scores(std::span<const std::string> words,
                                       const AttributePair& attrs, const EmbeddingMatrix& emb);

/// Sum of associations over present target words.
double scweat_sum(const WordSet& target, const AttributePair& attrs, const EmbeddingMatrix& emb);

double effect_size(const WordSet& target, const AttributePair& attrs, const EmbeddingMatrix& emb);
double effect_size(std::span<const std::string> words, const AttributePair& attrs,
                   const EmbeddingMatrix& emb);

struct PermutationOptions {
  std::size_t iterations = 10000;
  std::uint64_t seed = 1;
  /// Partitions are enumerated exactly when C(|A|+|B|, |A|) is at most this.
  std::uint64_t exact_limit = 20000;
};

/// One-sided p-value of the summed association under re-partitions of the
/// present attribute words into groups of the original sizes.
double permutation_pvalue(const WordSet& target, const AttributePair& attrs,
                          const EmbeddingMatrix& emb, const PermutationOptions& options);

/// Number of ordered re-partitions, saturating at UINT64_MAX.
std::uint64_t partition_count(std::size_t male, std::size_t female);

struct WeatResult {
  std::string target_name;
  std::string stratum_label;
  std::size_t n_present = 0;
  std::vector<std::string> missing;
  std::optional<double> sum_score;
  std::optional<double> effect_size;
  std::optional<double> p_value;
  /// Set when the cell could not be computed.
  std::optional<std::string> error;

  bool operator==(const WeatResult&) const = default;
};

struct BiasTableOptions {
  bool with_p_value = false;
  PermutationOptions permutation;
};

/// One result per (target, stratum), target-major. Cell failures are
/// recorded in WeatResult::error and never abort the table.
std::vector<WeatResult> bias_table(std::span<const WordSet> targets, const AttributePair& attrs,
                                   std::span<const EmbeddingMatrix> strata,
                                   const BiasTableOptions& options = {});

/// Example words per set as listed in the source study; partial lists.
std::vector<WordSet> builtin_targets();
AttributePair builtin_attributes();

struct WordSetFile {
  std::vector<WordSet> targets;
  std::optional<AttributePair> attributes;
};

/// JSON object {name: [words]}. Keys "male" and "female" (any case) form the
/// attribute pair; all other keys are targets in file order.
WordSetFile load_wordsets(const std::filesystem::path& path);

/// Full-precision JSON used between pipeline stages.
void save_results_json(std::span<const WeatResult> results, const std::filesystem::path& path);
std::vector<WeatResult> load_results_json(const std::filesystem::path& path);

}  // namespace biasbeam
