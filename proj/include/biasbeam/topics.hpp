// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "biasbeam/corpus.hpp"
#include "biasbeam/text.hpp"
#include "biasbeam/types.hpp"

namespace biasbeam {

inline constexpr int kOutlierTopic = -1;

enum class VectorSource { ExternalFile, NativeAverage };

/// One row per document, uniform dimension.
struct DocVectorSet {
  std::vector<std::string> ids;
  Matrix vectors;
  VectorSource source = VectorSource::NativeAverage;

  std::size_t size() const { return ids.size(); }
  Index dim() const { return vectors.cols(); }
  /// Throws DataError on row/id count mismatch or non-finite entries.
  void validate() const;
};

/// TSV: first line "<n_docs> <dim>", then "doc_id\tv1 v2 ... vdim".
DocVectorSet load_doc_vectors(const std::filesystem::path& path);
void save_doc_vectors(const DocVectorSet& set, const std::filesystem::path& path);

/// Mean-centering plus principal axes (one component per column).
struct Projection {
  Vector mean;
  Matrix components;

  template <typename Derived>
  Matrix apply(const Eigen::MatrixBase<Derived>& rows) const {
    return (rows.rowwise() - mean.transpose()) * components;
  }
};

struct Reduction {
  DocVectorSet reduced;
  Projection projection;
  /// Descending; share of total variance per kept component.
  Vector explained_variance_ratio;
};

/// PCA onto target_dim components. Throws DataError when target_dim exceeds
/// min(dim, n) and NumericError on zero total variance.
Reduction reduce_dim(const DocVectorSet& vectors, std::size_t target_dim);

enum class ClusterStrategy { Dbscan, KMeans };

struct DbscanParams {
  /// Unset: median distance to the min_pts-th nearest neighbour.
  std::optional<double> eps;
  std::size_t min_pts = 15;
};

struct KMeansParams {
  std::size_t k = 8;
  std::size_t max_iters = 300;
  std::uint64_t seed = 1;
};

struct ClusterParams {
  ClusterStrategy strategy = ClusterStrategy::Dbscan;
  DbscanParams dbscan;
  KMeansParams kmeans;
};

/// Median over points of the distance to the k-th nearest other point.
double estimate_eps(const Matrix& points, std::size_t k);

/// Cluster ids renumbered by descending size (ties: earliest member first).
/// DBSCAN noise is kOutlierTopic. Border points join the cluster of their
/// nearest core point, which makes the result independent of input order.
std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_pts);

struct KMeansResult {
  std::vector<int> labels;
  bool converged = false;
  std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until assignments stop changing.
KMeansResult kmeans(const Matrix& points, const KMeansParams& params);

std::vector<int> cluster(const Matrix& points, const ClusterParams& params);

/// Topic x term c-TF-IDF weights; rows are topics 0..n-1, terms sorted.
struct CtfIdf {
  std::vector<std::string> terms;
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights;

  /// (term, weight) pairs of one topic with nonzero weight.
  std::vector<std::pair<std::string, double>> row(int topic) const;
};

/// W(t,c) = tf(t,c) * log(1 + A / f(t)). Labels index `docs`; outliers and
/// stopwords are excluded before counting. Throws DataError when no
/// non-outlier topic exists or a class is empty after stopword removal.
CtfIdf ctfidf(std::span<const int> labels, std::span<const TokenizedDoc> docs,
              const StopwordSet& stopwords);

/// Top-n terms by weight (ties lexicographic) joined with "_".
std::string topic_label(std::span<const std::pair<std::string, double>> row, std::size_t n = 3);

struct Assignments {
  std::vector<std::string> doc_ids;
  std::vector<int> topics;

  std::size_t size() const { return doc_ids.size(); }
  double outlier_share() const;
  bool operator==(const Assignments&) const = default;
};

struct TopicModel {
  ClusterStrategy strategy = ClusterStrategy::Dbscan;
  Assignments assignments;
  std::size_t input_dim = 0;
  std::size_t reduced_dim = 0;
  Projection projection;
  /// Row t is topic t's centroid in reduced space.
  Matrix centroids;
  /// Set for density models only.
  std::optional<double> outlier_radius;
  CtfIdf ctfidf;
  std::vector<std::string> labels;
  std::vector<std::size_t> sizes;

  std::size_t topic_count() const { return sizes.size(); }
};

struct TopicFitParams {
  std::size_t target_dim = 5;
  ClusterParams cluster;
  std::size_t label_terms = 3;
};

/// Reduce, cluster, represent. `docs` must contain a tokenized doc for
/// every id in `vectors`.
TopicModel fit_topics(const DocVectorSet& vectors, std::span<const TokenizedDoc> docs,
                      const StopwordSet& stopwords, const TopicFitParams& params);

/// Nearest centroid after projection; ties go to the lower topic id.
Assignments assign_topics(const DocVectorSet& vectors, const TopicModel& model);

/// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

struct DecadeTopicCounts {
  /// decade label -> topic -> document count.
  std::map<std::string, std::map<int, std::size_t>> counts;
  std::size_t undated = 0;
  std::size_t unmatched = 0;
};

DecadeTopicCounts topics_over_time(const Assignments& assignments, const Corpus& corpus);

/// topic -> genre -> percentage of the topic's members. Outliers excluded.
std::map<int, std::map<Genre, double>> genre_composition(const Assignments& assignments,
                                                         const Corpus& corpus);

/// Most frequent non-outlier topic within each genre (ties: lower id).
std::map<Genre, int> top_topic_per_genre(const Assignments& assignments, const Corpus& corpus);

Assignments read_assignments(const std::filesystem::path& path);
void write_assignments(const Assignments& assignments, const std::filesystem::path& path);

/// Directory with assignments.csv, labels.csv, ctfidf.csv and projection.bin.
void save_topic_model(const TopicModel& model, const std::filesystem::path& dir);
TopicModel load_topic_model(const std::filesystem::path& dir);

}  // namespace biasbeam
