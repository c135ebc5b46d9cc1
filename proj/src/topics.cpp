// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/topics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "biasbeam/csv.hpp"
#include "biasbeam/error.hpp"
#include "biasbeam/random.hpp"
#include "io_util.hpp"

namespace biasbeam {
namespace {

constexpr char kModelMagic[8] = {'B', 'B', 'T', 'O', 'P', 'I', 'C', '\0'};
constexpr std::uint32_t kModelVersion = 1;

// Index of the nearest row of `centers` to `point` by squared Euclidean
// distance; strict comparison keeps the lower index on ties.
template <typename Derived>
std::pair<Index, double> nearest_row(const Eigen::MatrixBase<Derived>& point, const Matrix& centers) {
  Index best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double d2 = (point - centers.row(c)).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return {best, best_d2};
}

// Mean of each label's rows, summed in row order. Labels < 0 are skipped.
Matrix member_means(const Matrix& points, std::span<const int> labels, Index k,
                    std::vector<std::size_t>* sizes = nullptr) {
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < points.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0) continue;
    sums.row(label) += points.row(i);
    ++counts[static_cast<std::size_t>(label)];
  }
  for (Index c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0)
      sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  if (sizes) *sizes = std::move(counts);
  return sums;
}

// Relabels clusters 0.. by descending size; equal sizes keep the order of
// their first member.
std::vector<int> renumber_by_size(std::span<const int> labels) {
  std::map<int, std::pair<std::size_t, std::size_t>> info;  // label -> (size, first index)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = info.try_emplace(labels[i], 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> order(info.begin(), info.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<int, int> remap;
  for (std::size_t r = 0; r < order.size(); ++r) remap[order[r].first] = static_cast<int>(r);
  std::vector<int> out(labels.size(), kOutlierTopic);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) out[i] = remap[labels[i]];
  return out;
}

// Calls visit(i, j, d2) once for every unordered pair within eps. Points
// are swept in order of their first coordinate.
template <typename Visit>
void for_each_neighbor_pair(const Matrix& points, double eps, Visit&& visit) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points(static_cast<Index>(a), 0) < points(static_cast<Index>(b), 0);
  });
  const double eps2 = eps * eps;
  for (std::size_t a = 0; a < n; ++a) {
    const auto i = static_cast<Index>(order[a]);
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto j = static_cast<Index>(order[b]);
      if (points(j, 0) - points(i, 0) > eps) break;
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      if (d2 <= eps2) visit(order[a], order[b], d2);
    }
  }
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string ctfidf_topic_error(int topic) {
  return "ctfidf: topic " + std::to_string(topic) + " has no terms after stopword removal";
}

}  // namespace

void DocVectorSet::validate() const {
  if (static_cast<Index>(ids.size()) != vectors.rows())
    throw DataError("document vectors: id count does not match row count");
  if (!vectors.allFinite()) throw DataError("document vectors: non-finite entry");
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DataError("document vectors: duplicate document id");
}

DocVectorSet load_doc_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read document vectors " + path.string());
  std::string line;
  long long n = 0, dim = 0;
  {
    std::getline(in, line);
    std::istringstream hs(line);
    if (!(hs >> n >> dim) || n < 0 || dim <= 0)
      throw DataError(path.string() + ": bad header, expected \"<n_docs> <dim>\"");
  }
  DocVectorSet set;
  set.source = VectorSource::ExternalFile;
  set.vectors.resize(n, dim);
  for (Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": fewer rows than declared");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": missing tab on row " + std::to_string(i + 2));
    set.ids.push_back(line.substr(0, tab));
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    for (Index j = 0; j < dim; ++j) {
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      const auto end = std::min(rest.find(' '), rest.size());
      if (end == 0) throw DataError(path.string() + ": too few values on row " + std::to_string(i + 2));
      set.vectors(i, j) = io::parse_double(rest.substr(0, end), path.string());
      rest.remove_prefix(end);
    }
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    if (!rest.empty()) throw DataError(path.string() + ": too many values on row " + std::to_string(i + 2));
  }
  set.validate();
  return set;
}

void save_doc_vectors(const DocVectorSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << set.vectors.rows() << ' ' << set.vectors.cols() << '\n';
  for (Index i = 0; i < set.vectors.rows(); ++i) {
    out << set.ids[static_cast<std::size_t>(i)] << '\t';
    for (Index j = 0; j < set.vectors.cols(); ++j)
      out << (j ? " " : "") << io::format_double(set.vectors(i, j));
    out << '\n';
  }
}

Reduction reduce_dim(const DocVectorSet& vectors, std::size_t target_dim) {
  vectors.validate();
  const auto n = static_cast<std::size_t>(vectors.vectors.rows());
  const auto d = static_cast<std::size_t>(vectors.vectors.cols());
  if (target_dim == 0 || target_dim > std::min(n, d))
    throw DataError("reduce_dim: target_dim " + std::to_string(target_dim) +
                    " exceeds min(dim, n_docs) = " + std::to_string(std::min(n, d)));

  Reduction out;
  out.projection.mean = vectors.vectors.colwise().mean().transpose();
  const Eigen::MatrixXd centered = vectors.vectors.rowwise() - out.projection.mean.transpose();
  const double total = centered.squaredNorm();
  if (!(total > 1e-24 * std::max(1.0, vectors.vectors.squaredNorm())))
    throw NumericError("reduce_dim: degenerate input, all document vectors are identical");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto k = static_cast<Index>(target_dim);
  Matrix components = svd.matrixV().leftCols(k);
  // Sign convention: the largest-magnitude loading of each axis is positive.
  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg);
    if (components(arg, c) < 0) components.col(c) *= -1.0;
  }
  out.projection.components = std::move(components);
  out.explained_variance_ratio = svd.singularValues().head(k).array().square() / total;

  out.reduced.ids = vectors.ids;
  out.reduced.source = vectors.source;
  out.reduced.vectors = out.projection.apply(vectors.vectors);
  return out;
}

double estimate_eps(const Matrix& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw DataError("estimate_eps: need at least two points");
  k = std::clamp<std::size_t>(k, 1, n - 1);
  std::vector<double> kth(n);
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        d[m++] = (points.row(static_cast<Index>(i)) - points.row(static_cast<Index>(j))).norm();
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    kth[i] = d[k - 1];
  }
  return percentile(std::move(kth), 50.0);
}

std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_pts) {
  if (!(eps > 0)) throw DataError("dbscan: eps must be positive");
  if (min_pts == 0) throw DataError("dbscan: min_pts must be at least 1");
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw DataError("dbscan: empty point set");

  // Neighbourhoods include the point itself.
  std::vector<std::size_t> degree(n, 1);
  for_each_neighbor_pair(points, eps, [&](std::size_t i, std::size_t j, double) {
    ++degree[i];
    ++degree[j];
  });
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = degree[i] >= min_pts;

  DisjointSets sets(n);
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::pair<double, std::size_t>> nearest_core(
      n, {std::numeric_limits<double>::infinity(), kNone});
  auto offer = [&](std::size_t border, std::size_t c, double d2) {
    auto& best = nearest_core[border];
    if (d2 < best.first || (d2 == best.first && c < best.second)) best = {d2, c};
  };
  for_each_neighbor_pair(points, eps, [&](std::size_t i, std::size_t j, double d2) {
    if (core[i] && core[j]) sets.unite(i, j);
    else if (core[i]) offer(j, i, d2);
    else if (core[j]) offer(i, j, d2);
  });

  std::vector<int> labels(n, kOutlierTopic);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) labels[i] = static_cast<int>(sets.find(i));
    else if (nearest_core[i].second != kNone)
      labels[i] = static_cast<int>(sets.find(nearest_core[i].second));
  }
  return renumber_by_size(labels);
}

KMeansResult kmeans(const Matrix& points, const KMeansParams& params) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw DataError("kmeans: empty point set");
  if (params.k == 0 || params.k > n)
    throw DataError("kmeans: k = " + std::to_string(params.k) + " must be in [1, n_docs = " +
                    std::to_string(n) + "]");
  const auto k = static_cast<Index>(params.k);
  Rng rng(params.seed);

  // k-means++ seeding.
  Matrix centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Index>(rng.below(n)));
  std::vector<double> d2(n);
  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = nearest_row(points.row(static_cast<Index>(i)), centers.topRows(c).eval()).second;
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        if (u < d2[pick]) break;
        u -= d2[pick];
      }
    } else {
      pick = rng.below(n);
    }
    centers.row(c) = points.row(static_cast<Index>(pick));
  }

  KMeansResult result;
  auto assign = [&](std::vector<int>& labels) {
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = static_cast<int>(nearest_row(points.row(static_cast<Index>(i)), centers).first);
  };
  std::vector<int> labels(n);
  assign(labels);
  std::vector<int> next(n);
  while (result.iterations < params.max_iters) {
    ++result.iterations;
    std::vector<std::size_t> sizes;
    centers = member_means(points, labels, k, &sizes);
    bool reseeded = false;
    for (Index c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      // Empty cluster: move it to the point worst served by its centre.
      std::size_t worst = 0;
      double worst_d2 = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dd = (points.row(static_cast<Index>(i)) - centers.row(labels[i])).squaredNorm();
        if (dd > worst_d2) {
          worst_d2 = dd;
          worst = i;
        }
      }
      centers.row(c) = points.row(static_cast<Index>(worst));
      labels[worst] = static_cast<int>(c);
      reseeded = true;
    }
    assign(next);
    if (!reseeded && next == labels) {
      result.converged = true;
      break;
    }
    labels.swap(next);
  }
  if (!result.converged)
    spdlog::warn("kmeans did not converge within {} iterations", params.max_iters);
  result.labels = renumber_by_size(labels);
  return result;
}

std::vector<int> cluster(const Matrix& points, const ClusterParams& params) {
  if (points.rows() == 0) throw DataError("cluster: empty point set");
  if (params.strategy == ClusterStrategy::KMeans) return kmeans(points, params.kmeans).labels;
  const double eps = params.dbscan.eps ? *params.dbscan.eps
                                       : estimate_eps(points, params.dbscan.min_pts);
  return dbscan(points, eps, params.dbscan.min_pts);
}

std::vector<std::pair<std::string, double>> CtfIdf::row(int topic) const {
  std::vector<std::pair<std::string, double>> out;
  if (topic < 0 || topic >= weights.rows()) return out;
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(weights, topic); it; ++it)
    out.emplace_back(terms[static_cast<std::size_t>(it.col())], it.value());
  return out;
}

CtfIdf ctfidf(std::span<const int> labels, std::span<const TokenizedDoc> docs,
              const StopwordSet& stopwords) {
  if (labels.size() != docs.size()) throw DataError("ctfidf: labels and documents differ in count");
  const int topics = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (topics <= 0) throw DataError("ctfidf: no non-outlier topic");

  std::vector<std::unordered_map<std::string, std::uint64_t>> counts(static_cast<std::size_t>(topics));
  std::vector<std::uint64_t> class_total(static_cast<std::size_t>(topics), 0);
  std::unordered_map<std::string, std::uint64_t> term_total;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (labels[d] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[d]);
    for (const auto& token : docs[d].tokens) {
      if (stopwords.count(token)) continue;
      ++counts[c][token];
      ++class_total[c];
      ++term_total[token];
    }
  }
  for (int c = 0; c < topics; ++c)
    if (class_total[static_cast<std::size_t>(c)] == 0) throw DataError(ctfidf_topic_error(c));

  CtfIdf out;
  out.terms.reserve(term_total.size());
  for (const auto& [term, n] : term_total) out.terms.push_back(term);
  std::sort(out.terms.begin(), out.terms.end());
  std::unordered_map<std::string, Index> column;
  for (std::size_t t = 0; t < out.terms.size(); ++t) column[out.terms[t]] = static_cast<Index>(t);

  const double average_class_size =
      static_cast<double>(std::accumulate(class_total.begin(), class_total.end(), std::uint64_t{0})) /
      static_cast<double>(topics);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int c = 0; c < topics; ++c) {
    const auto total = static_cast<double>(class_total[static_cast<std::size_t>(c)]);
    for (const auto& [term, n] : counts[static_cast<std::size_t>(c)]) {
      const double tf = static_cast<double>(n) / total;
      const double idf = std::log(1.0 + average_class_size / static_cast<double>(term_total[term]));
      triplets.emplace_back(c, column[term], tf * idf);
    }
  }
  out.weights.resize(topics, static_cast<Index>(out.terms.size()));
  out.weights.setFromTriplets(triplets.begin(), triplets.end());
  out.weights.makeCompressed();
  return out;
}

std::string topic_label(std::span<const std::pair<std::string, double>> row, std::size_t n) {
  std::vector<std::pair<std::string, double>> ranked(row.begin(), row.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::string label;
  for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) {
    if (i) label += '_';
    label += ranked[i].first;
  }
  return label;
}

double Assignments::outlier_share() const {
  if (topics.empty()) return 0.0;
  const auto outliers = std::count(topics.begin(), topics.end(), kOutlierTopic);
  return static_cast<double>(outliers) / static_cast<double>(topics.size());
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TopicModel fit_topics(const DocVectorSet& vectors, std::span<const TokenizedDoc> docs,
                      const StopwordSet& stopwords, const TopicFitParams& params) {
  std::unordered_map<std::string_view, const TokenizedDoc*> by_id;
  for (const auto& doc : docs) by_id.emplace(doc.doc_id, &doc);
  std::vector<TokenizedDoc> aligned;
  aligned.reserve(vectors.size());
  for (const auto& id : vectors.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("fit_topics: no tokenized document for id " + id);
    aligned.push_back(*it->second);
  }

  auto reduction = reduce_dim(vectors, params.target_dim);
  const Matrix& points = reduction.reduced.vectors;
  const auto labels = cluster(points, params.cluster);

  TopicModel model;
  model.strategy = params.cluster.strategy;
  model.input_dim = static_cast<std::size_t>(vectors.dim());
  model.reduced_dim = params.target_dim;
  model.projection = std::move(reduction.projection);
  model.assignments.doc_ids = vectors.ids;
  model.assignments.topics = labels;

  const int topics = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (topics <= 0) {
    spdlog::warn("topic fit produced no clusters; every document is an outlier");
    model.centroids.resize(0, static_cast<Index>(params.target_dim));
    return model;
  }
  model.centroids = member_means(points, labels, topics, &model.sizes);
  model.ctfidf = ctfidf(labels, aligned, stopwords);

  std::map<std::string, int> seen;
  for (int t = 0; t < topics; ++t) {
    const auto row = model.ctfidf.row(t);
    std::string label = topic_label(row, params.label_terms);
    if (seen.count(label)) label += "-" + std::to_string(t);
    seen[label] = t;
    model.labels.push_back(std::move(label));
  }

  if (model.strategy == ClusterStrategy::Dbscan) {
    std::vector<double> distances;
    for (Index i = 0; i < points.rows(); ++i) {
      const int t = labels[static_cast<std::size_t>(i)];
      if (t >= 0) distances.push_back((points.row(i) - model.centroids.row(t)).norm());
    }
    model.outlier_radius = percentile(std::move(distances), 95.0);
  }
  return model;
}

Assignments assign_topics(const DocVectorSet& vectors, const TopicModel& model) {
  if (static_cast<std::size_t>(vectors.dim()) != model.input_dim)
    throw DataError("assign_topics: vectors have dimension " + std::to_string(vectors.dim()) +
                    ", model expects " + std::to_string(model.input_dim));
  Assignments out;
  out.doc_ids = vectors.ids;
  out.topics.assign(vectors.size(), kOutlierTopic);
  if (model.topic_count() == 0 || vectors.size() == 0) return out;

  const Matrix reduced = model.projection.apply(vectors.vectors);
  for (Index i = 0; i < reduced.rows(); ++i) {
    const auto [topic, d2] = nearest_row(reduced.row(i), model.centroids);
    if (model.outlier_radius && std::sqrt(d2) > *model.outlier_radius) continue;
    out.topics[static_cast<std::size_t>(i)] = static_cast<int>(topic);
  }
  return out;
}

DecadeTopicCounts topics_over_time(const Assignments& assignments, const Corpus& corpus) {
  DecadeTopicCounts out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int topic = assignments.topics[i];
    if (topic < 0) continue;
    const auto index = corpus.find(assignments.doc_ids[i]);
    if (!index) {
      ++out.unmatched;
      continue;
    }
    const auto& year = corpus[*index].year;
    if (!year) {
      ++out.undated;
      continue;
    }
    ++out.counts[decade_of(*year)][topic];
  }
  return out;
}

std::map<int, std::map<Genre, double>> genre_composition(const Assignments& assignments,
                                                         const Corpus& corpus) {
  std::map<int, std::map<Genre, std::size_t>> counts;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int topic = assignments.topics[i];
    if (topic < 0) continue;
    if (auto index = corpus.find(assignments.doc_ids[i])) ++counts[topic][corpus[*index].genre];
  }
  std::map<int, std::map<Genre, double>> out;
  for (const auto& [topic, by_genre] : counts) {
    std::size_t total = 0;
    for (const auto& [g, n] : by_genre) total += n;
    for (const auto& [g, n] : by_genre)
      out[topic][g] = 100.0 * static_cast<double>(n) / static_cast<double>(total);
  }
  return out;
}

std::map<Genre, int> top_topic_per_genre(const Assignments& assignments, const Corpus& corpus) {
  std::map<Genre, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int topic = assignments.topics[i];
    if (topic < 0) continue;
    if (auto index = corpus.find(assignments.doc_ids[i])) ++counts[corpus[*index].genre][topic];
  }
  std::map<Genre, int> out;
  for (const auto& [genre, by_topic] : counts) {
    int best = kOutlierTopic;
    std::size_t best_n = 0;
    for (const auto& [topic, n] : by_topic)  // ascending topic id
      if (n > best_n) {
        best_n = n;
        best = topic;
      }
    out[genre] = best;
  }
  return out;
}

Assignments read_assignments(const std::filesystem::path& path) {
  const auto table = csv::read_table_file(path.string());
  if (table.header != csv::Row{"doc_id", "topic"})
    throw DataError(path.string() + ": expected header doc_id,topic");
  Assignments out;
  for (const auto& row : table.rows) {
    if (row.size() != 2) throw DataError(path.string() + ": malformed row");
    out.doc_ids.push_back(row[0]);
    out.topics.push_back(static_cast<int>(io::parse_int(row[1], path.string())));
  }
  return out;
}

void write_assignments(const Assignments& assignments, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::Table table{{"doc_id", "topic"}, {}};
  for (std::size_t i = 0; i < assignments.size(); ++i)
    table.rows.push_back({assignments.doc_ids[i], std::to_string(assignments.topics[i])});
  csv::write_table(out, table);
}

void save_topic_model(const TopicModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_assignments(model.assignments, dir / "assignments.csv");

  {
    std::ofstream out(dir / "labels.csv", std::ios::binary);
    csv::Table table{{"topic", "label", "size"}, {}};
    for (std::size_t t = 0; t < model.topic_count(); ++t)
      table.rows.push_back({std::to_string(t), model.labels[t], std::to_string(model.sizes[t])});
    csv::write_table(out, table);
  }
  {
    std::ofstream out(dir / "ctfidf.csv", std::ios::binary);
    csv::Table table{{"topic", "term", "weight"}, {}};
    for (std::size_t t = 0; t < model.topic_count(); ++t)
      for (const auto& [term, weight] : model.ctfidf.row(static_cast<int>(t)))
        table.rows.push_back({std::to_string(t), term, io::format_double(weight)});
    csv::write_table(out, table);
  }
  std::ofstream out(dir / "projection.bin", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "projection.bin").string());
  out.write(kModelMagic, sizeof kModelMagic);
  io::put<std::uint32_t>(out, kModelVersion);
  io::put<std::uint32_t>(out, 0);
  io::put<std::uint8_t>(out, model.strategy == ClusterStrategy::KMeans ? 1 : 0);
  io::put<std::uint8_t>(out, model.outlier_radius ? 1 : 0);
  io::put<double>(out, model.outlier_radius.value_or(0.0));
  io::put<std::uint64_t>(out, model.input_dim);
  io::put<std::uint64_t>(out, model.reduced_dim);
  io::put<std::uint64_t>(out, model.topic_count());
  io::put_matrix(out, model.projection.mean);
  io::put_matrix(out, model.projection.components);
  io::put_matrix(out, model.centroids);
  if (!out) throw DataError("failed writing " + (dir / "projection.bin").string());
}

TopicModel load_topic_model(const std::filesystem::path& dir) {
  TopicModel model;
  {
    const auto path = dir / "projection.bin";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
      throw DataError(path.string() + ": not a biasbeam topic model");
    if (const auto version = io::get<std::uint32_t>(in); version != kModelVersion)
      throw DataError(path.string() + ": unsupported version " + std::to_string(version));
    io::get<std::uint32_t>(in);
    model.strategy = io::get<std::uint8_t>(in) ? ClusterStrategy::KMeans : ClusterStrategy::Dbscan;
    const bool has_radius = io::get<std::uint8_t>(in) != 0;
    const double radius = io::get<double>(in);
    if (has_radius) model.outlier_radius = radius;
    model.input_dim = io::get<std::uint64_t>(in);
    model.reduced_dim = io::get<std::uint64_t>(in);
    const auto topics = io::get<std::uint64_t>(in);
    const auto d = static_cast<Index>(model.input_dim);
    const auto r = static_cast<Index>(model.reduced_dim);
    model.projection.mean.resize(d);
    model.projection.components.resize(d, r);
    model.centroids.resize(static_cast<Index>(topics), r);
    io::get_matrix(in, model.projection.mean);
    io::get_matrix(in, model.projection.components);
    io::get_matrix(in, model.centroids);
    model.sizes.resize(topics);
    model.labels.resize(topics);
  }
  model.assignments = read_assignments(dir / "assignments.csv");

  const auto labels = csv::read_table_file((dir / "labels.csv").string());
  if (labels.rows.size() != model.topic_count())
    throw DataError("labels.csv: topic count does not match projection.bin");
  for (const auto& row : labels.rows) {
    if (row.size() != 3) throw DataError("labels.csv: malformed row");
    const auto t = static_cast<std::size_t>(io::parse_int(row[0], "labels.csv"));
    if (t >= model.topic_count()) throw DataError("labels.csv: topic id out of range");
    model.labels[t] = row[1];
    model.sizes[t] = static_cast<std::size_t>(io::parse_int(row[2], "labels.csv"));
  }

  const auto weights = csv::read_table_file((dir / "ctfidf.csv").string());
  std::vector<std::tuple<int, std::string, double>> entries;
  for (const auto& row : weights.rows) {
    if (row.size() != 3) throw DataError("ctfidf.csv: malformed row");
    entries.emplace_back(static_cast<int>(io::parse_int(row[0], "ctfidf.csv")), row[1],
                         io::parse_double(row[2], "ctfidf.csv"));
  }
  for (const auto& e : entries) model.ctfidf.terms.push_back(std::get<1>(e));
  std::sort(model.ctfidf.terms.begin(), model.ctfidf.terms.end());
  model.ctfidf.terms.erase(std::unique(model.ctfidf.terms.begin(), model.ctfidf.terms.end()),
                           model.ctfidf.terms.end());
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& [t, term, w] : entries) {
    const auto col = std::lower_bound(model.ctfidf.terms.begin(), model.ctfidf.terms.end(), term) -
                     model.ctfidf.terms.begin();
    triplets.emplace_back(t, static_cast<Index>(col), w);
  }
  model.ctfidf.weights.resize(static_cast<Index>(model.topic_count()),
                              static_cast<Index>(model.ctfidf.terms.size()));
  model.ctfidf.weights.setFromTriplets(triplets.begin(), triplets.end());
  model.ctfidf.weights.makeCompressed();
  return model;
}

}  // namespace biasbeam
