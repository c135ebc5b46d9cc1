// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "biasbeam/error.hpp"
#include "biasbeam/topics.hpp"
#include "support.hpp"

using namespace biasbeam;
using Catch::Matchers::WithinAbs;

namespace {

Matrix to_matrix(const oracle::Rows& rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

DocVectorSet doc_set(const Matrix& m) {
  DocVectorSet set;
  for (Index i = 0; i < m.rows(); ++i) set.ids.push_back("doc" + std::to_string(i));
  set.vectors = m;
  return set;
}

/// Gaussian blobs of `per` points around each center.
oracle::Rows blobs(std::mt19937_64& gen, const oracle::Rows& centers, std::size_t per, double spread) {
  std::normal_distribution<double> noise(0.0, spread);
  oracle::Rows out;
  for (const auto& c : centers)
    for (std::size_t i = 0; i < per; ++i) {
      oracle::Vec p = c;
      for (auto& v : p) v += noise(gen);
      out.push_back(p);
    }
  return out;
}

SongRecord song(std::string id, Genre genre, std::optional<int> year) {
  SongRecord r;
  r.id = std::move(id);
  r.genre = genre;
  r.genre_raw = std::string(genre_name(genre));
  r.year = year;
  r.lyrics = "x";
  r.language = "en";
  return r;
}

}  // namespace

TEST_CASE("reduce_dim on rank-1 data") {
  Matrix line(6, 3);
  for (Index i = 0; i < 6; ++i) line.row(i) << 1.0 * i, 2.0 * i + 1, -3.0 * i;
  const auto r = reduce_dim(doc_set(line), 1);
  CHECK_THAT(r.explained_variance_ratio(0), WithinAbs(1.0, 1e-9));
  // Largest loading is positive.
  Index arg = 0;
  r.projection.components.col(0).cwiseAbs().maxCoeff(&arg);
  CHECK(r.projection.components(arg, 0) > 0);
}

TEST_CASE("reduce_dim at full rank explains all variance") {
  std::mt19937_64 gen(1);
  const auto m = to_matrix(oracle::random_rows(gen, 20, 4));
  const auto r = reduce_dim(doc_set(m), 4);
  CHECK_THAT(r.explained_variance_ratio.sum(), WithinAbs(1.0, 1e-9));
  for (Index i = 1; i < 4; ++i) CHECK(r.explained_variance_ratio(i) <= r.explained_variance_ratio(i - 1));
  CHECK(r.reduced.vectors.isApprox(r.projection.apply(m)));
  CHECK(r.reduced.ids == doc_set(m).ids);
}

TEST_CASE("reduce_dim matches the covariance eigendecomposition oracle") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rows = oracle::random_rows(gen, 50, 10);
    const auto expected = oracle::pca_ratios(rows, 6);
    const auto r = reduce_dim(doc_set(to_matrix(rows)), 6);
    for (Index i = 0; i < 6; ++i)
      CHECK_THAT(r.explained_variance_ratio(i), WithinAbs(expected[static_cast<std::size_t>(i)], 1e-8));
  }
}

TEST_CASE("reduce_dim errors") {
  std::mt19937_64 gen(3);
  const auto m = to_matrix(oracle::random_rows(gen, 5, 3));
  CHECK_THROWS_AS(reduce_dim(doc_set(m), 4), DataError);
  CHECK_THROWS_AS(reduce_dim(doc_set(m), 0), DataError);
  CHECK_THROWS_AS(reduce_dim(doc_set(Matrix::Constant(5, 3, 2.5)), 1), NumericError);
}

TEST_CASE("dbscan finds two blobs and an outlier") {
  std::mt19937_64 gen(4);
  auto pts = blobs(gen, {{0, 0}, {10, 10}}, 20, 0.3);
  pts.push_back({50, -50});
  const auto labels = dbscan(to_matrix(pts), 1.5, 3);
  const auto part = oracle::partition_of(labels);
  CHECK(part.clusters.size() == 2);
  CHECK(part.noise == std::set<std::size_t>{40});
  CHECK(part == oracle::dbscan(pts, 1.5, 3));
}

TEST_CASE("dbscan with eps beyond the diameter yields one cluster") {
  std::mt19937_64 gen(5);
  const auto pts = oracle::random_rows(gen, 30, 2);
  const auto labels = dbscan(to_matrix(pts), 1e3, 5);
  for (int l : labels) CHECK(l == 0);
}

TEST_CASE("dbscan matches the expansion oracle and is order invariant") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> eps_dist(0.05, 0.6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = oracle::random_rows(gen, 120, 2);
    const double eps = eps_dist(gen);
    const std::size_t min_pts = 2 + gen() % 8;
    const auto labels = dbscan(to_matrix(pts), eps, min_pts);
    CHECK(oracle::partition_of(labels) == oracle::dbscan(pts, eps, min_pts));

    // Sizes non-increasing in cluster id.
    std::map<int, std::size_t> sizes;
    for (int l : labels)
      if (l >= 0) ++sizes[l];
    for (std::size_t t = 1; t < sizes.size(); ++t)
      CHECK(sizes[static_cast<int>(t)] <= sizes[static_cast<int>(t - 1)]);

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    oracle::Rows shuffled;
    for (auto p : perm) shuffled.push_back(pts[p]);
    const auto relabeled = dbscan(to_matrix(shuffled), eps, min_pts);
    std::vector<int> back(pts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) back[perm[i]] = relabeled[i];
    CHECK(oracle::partition_of(back) == oracle::partition_of(labels));
  }
}

TEST_CASE("dbscan argument errors") {
  const Matrix pts = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(dbscan(pts, 0.0, 3), DataError);
  CHECK_THROWS_AS(dbscan(pts, 1.0, 0), DataError);
  CHECK_THROWS_AS(dbscan(Matrix(0, 2), 1.0, 2), DataError);
}

TEST_CASE("estimate_eps is the median k-nearest-neighbour distance") {
  std::mt19937_64 gen(7);
  const auto pts = oracle::random_rows(gen, 41, 3);
  std::vector<double> kth;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (i != j) d.push_back(std::sqrt(oracle::dist2(pts[i], pts[j])));
    std::sort(d.begin(), d.end());
    kth.push_back(d[4]);
  }
  std::sort(kth.begin(), kth.end());
  CHECK_THAT(estimate_eps(to_matrix(pts), 5), WithinAbs(kth[20], 1e-12));
}

TEST_CASE("kmeans") {
  std::mt19937_64 gen(8);
  const auto pts = blobs(gen, {{0, 0}, {8, 0}, {0, 8}}, 15, 0.5);
  const Matrix m = to_matrix(pts);

  const auto one = kmeans(m, {1, 100, 1});
  for (int l : one.labels) CHECK(l == 0);

  const auto three = kmeans(m, {3, 100, 1});
  CHECK(three.converged);
  const auto part = oracle::partition_of(three.labels);
  CHECK(part.noise.empty());
  std::set<std::set<std::size_t>> expected;
  for (std::size_t b = 0; b < 3; ++b) {
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < 15; ++i) s.insert(b * 15 + i);
    expected.insert(s);
  }
  CHECK(part.clusters == expected);
  CHECK(kmeans(m, {3, 100, 1}).labels == three.labels);

  CHECK_THROWS_AS(kmeans(m, {46, 100, 1}), DataError);
  CHECK_THROWS_AS(kmeans(m, {0, 100, 1}), DataError);
}

TEST_CASE("c-TF-IDF two-class hand check") {
  // Class 0: love x3, shared x1. Class 1: rage x3, shared x1. A = 4.
  const std::vector<TokenizedDoc> docs = {{"a", {"love", "the", "love"}},
                                          {"b", {"love", "shared"}},
                                          {"c", {"rage", "rage", "shared", "the"}},
                                          {"d", {"rage"}}};
  const std::vector<int> labels = {0, 0, 1, 1};
  const auto c = ctfidf(labels, docs, StopwordSet{"the"});
  CHECK(c.terms == std::vector<std::string>{"love", "rage", "shared"});
  const double w_love = 0.6354733952904028;     // 3/4 * ln(1 + 4/3)
  const double w_shared = 0.27465307216702745;  // 1/4 * ln(1 + 4/2)
  CHECK_THAT(c.weights.coeff(0, 0), WithinAbs(w_love, 1e-9));
  CHECK_THAT(c.weights.coeff(0, 2), WithinAbs(w_shared, 1e-9));
  CHECK(c.weights.coeff(0, 1) == 0.0);
  CHECK_THAT(c.weights.coeff(1, 1), WithinAbs(w_love, 1e-9));
  CHECK_THAT(c.weights.coeff(1, 2), WithinAbs(w_shared, 1e-9));
  CHECK(topic_label(c.row(0), 1) == "love");
  CHECK(topic_label(c.row(1), 1) == "rage");
}

TEST_CASE("c-TF-IDF ranks exclusive terms above shared ones") {
  const std::vector<TokenizedDoc> docs = {{"a", {"x", "x", "u", "u"}}, {"b", {"y", "y", "u", "u"}}};
  const auto c = ctfidf(std::vector<int>{0, 1}, docs, {});
  const auto row = c.row(0);
  std::map<std::string, double> w(row.begin(), row.end());
  CHECK(w.at("x") > w.at("u"));
  CHECK_FALSE(w.count("y"));
  for (Index r = 0; r < c.weights.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(c.weights, r); it; ++it)
      CHECK(it.value() >= 0);
}

TEST_CASE("c-TF-IDF single class and outliers") {
  const std::vector<TokenizedDoc> docs = {{"a", {"p", "q", "q"}}, {"b", {"zzz"}}};
  const auto c = ctfidf(std::vector<int>{0, -1}, docs, {});
  CHECK(c.terms == std::vector<std::string>{"p", "q"});
  CHECK_THAT(c.weights.coeff(0, 0), WithinAbs(1.0 / 3 * std::log(1 + 3.0), 1e-12));
  CHECK_THAT(c.weights.coeff(0, 1), WithinAbs(2.0 / 3 * std::log(1 + 1.5), 1e-12));

  CHECK_THROWS_AS(ctfidf(std::vector<int>{-1, -1}, docs, {}), DataError);
  CHECK_THROWS_AS(ctfidf(std::vector<int>{0, 1}, docs, StopwordSet{"zzz"}), DataError);
  CHECK_THROWS_AS(ctfidf(std::vector<int>{0}, docs, {}), DataError);
}

TEST_CASE("topic_label") {
  const std::vector<std::pair<std::string, double>> row = {
      {"love", 0.1}, {"heart", 0.8}, {"tears", 0.9}, {"wish", 0.7}};
  CHECK(topic_label(row) == "tears_heart_wish");
  CHECK(topic_label(std::vector<std::pair<std::string, double>>{{"solo", 1.0}}) == "solo");
  CHECK(topic_label(std::vector<std::pair<std::string, double>>{{"b", 0.5}, {"a", 0.5}}, 2) == "a_b");
}

TEST_CASE("percentile interpolates linearly") {
  CHECK(percentile({3, 1, 2}, 50) == 2.0);
  CHECK_THAT(percentile({0, 10}, 95), WithinAbs(9.5, 1e-12));
  CHECK(percentile({4}, 95) == 4.0);
  CHECK_THROWS_AS(percentile({}, 50), DataError);
}

namespace {

struct FitFixture {
  DocVectorSet vectors;
  std::vector<TokenizedDoc> docs;
};

FitFixture themed_fixture(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::vector<std::vector<std::string>> themes = {
      {"dance", "night", "club"}, {"money", "street", "cash"}, {"road", "truck", "river"}};
  const std::vector<std::size_t> counts = {30, 20, 10};
  oracle::Rows centers = {{5, 0, 0, 0, 0, 0}, {0, 5, 0, 0, 0, 0}, {0, 0, 5, 0, 0, 0}};
  FitFixture fx;
  std::normal_distribution<double> noise(0, 0.3);
  oracle::Rows rows;
  std::size_t id = 0;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < counts[t]; ++i) {
      oracle::Vec v = centers[t];
      for (auto& x : v) x += noise(gen);
      rows.push_back(v);
      TokenizedDoc doc{"d" + std::to_string(id++), {}};
      for (int k = 0; k < 6; ++k) doc.tokens.push_back(themes[t][gen() % 3]);
      doc.tokens.push_back("the");
      fx.docs.push_back(doc);
    }
  fx.vectors = doc_set(to_matrix(rows));
  for (std::size_t i = 0; i < fx.docs.size(); ++i) fx.vectors.ids[i] = fx.docs[i].doc_id;
  return fx;
}

}  // namespace

TEST_CASE("fit_topics with kmeans") {
  const auto fx = themed_fixture(9);
  TopicFitParams params;
  params.target_dim = 3;
  params.cluster.strategy = ClusterStrategy::KMeans;
  params.cluster.kmeans.k = 3;
  const auto model = fit_topics(fx.vectors, fx.docs, default_stopwords(), params);
  REQUIRE(model.topic_count() == 3);
  CHECK(model.sizes == std::vector<std::size_t>{30, 20, 10});
  // Labels are ordered by weight; compare the term sets.
  auto terms = [](const std::string& label) {
    std::set<std::string> out;
    std::stringstream in(label);
    for (std::string t; std::getline(in, t, '_');) out.insert(t);
    return out;
  };
  CHECK(terms(model.labels[0]) == std::set<std::string>{"club", "dance", "night"});
  CHECK(terms(model.labels[1]) == std::set<std::string>{"cash", "money", "street"});
  CHECK(terms(model.labels[2]) == std::set<std::string>{"river", "road", "truck"});
  CHECK(model.ctfidf.weights.rows() == 3);
  CHECK_FALSE(model.outlier_radius);
  CHECK(model.input_dim == 6);
  CHECK(model.reduced_dim == 3);
  // Predicting the training vectors reproduces the fit.
  CHECK(assign_topics(fx.vectors, model) == model.assignments);
}

TEST_CASE("fit_topics with dbscan records an outlier radius") {
  auto fx = themed_fixture(10);
  TopicFitParams params;
  params.target_dim = 3;
  params.cluster.strategy = ClusterStrategy::Dbscan;
  params.cluster.dbscan.eps = 1.0;
  params.cluster.dbscan.min_pts = 4;
  const auto model = fit_topics(fx.vectors, fx.docs, default_stopwords(), params);
  REQUIRE(model.topic_count() == 3);
  REQUIRE(model.outlier_radius);

  DocVectorSet probe;
  probe.ids = {"far", "near"};
  probe.vectors.resize(2, 6);
  probe.vectors.row(0) << 40, 40, 40, 40, 40, 40;
  probe.vectors.row(1) = fx.vectors.vectors.row(0);
  const auto a = assign_topics(probe, model);
  CHECK(a.topics[0] == kOutlierTopic);
  CHECK(a.topics[1] == model.assignments.topics[0]);
}

TEST_CASE("fit_topics where every document is noise") {
  auto fx = themed_fixture(11);
  TopicFitParams params;
  params.target_dim = 3;
  params.cluster.dbscan.eps = 1e-6;
  params.cluster.dbscan.min_pts = 5;
  const auto model = fit_topics(fx.vectors, fx.docs, default_stopwords(), params);
  CHECK(model.topic_count() == 0);
  CHECK(model.assignments.outlier_share() == 1.0);
  const auto a = assign_topics(fx.vectors, model);
  for (int t : a.topics) CHECK(t == kOutlierTopic);
}

TEST_CASE("assign_topics is nearest-centroid with lower-id ties") {
  TopicModel model;
  model.strategy = ClusterStrategy::KMeans;
  model.input_dim = 2;
  model.reduced_dim = 2;
  model.projection.mean = Vector::Zero(2);
  model.projection.components = Matrix::Identity(2, 2);
  model.centroids.resize(3, 2);
  model.centroids << 1, 0, -1, 0, 0, 3;
  model.sizes = {1, 1, 1};
  model.labels = {"a", "b", "c"};

  DocVectorSet docs;
  docs.ids = {"on", "tie", "up"};
  docs.vectors.resize(3, 2);
  docs.vectors << 1, 0, 0, 0, 0, 2.5;
  const auto a = assign_topics(docs, model);
  CHECK(a.topics == std::vector<int>{0, 0, 2});

  std::mt19937_64 gen(12);
  const auto rows = oracle::random_rows(gen, 100, 2);
  const auto got = assign_topics(doc_set(to_matrix(rows)), model);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int best = 0;
    double best_d = INFINITY;
    for (int c = 0; c < 3; ++c) {
      const double d = oracle::dist2(rows[i], {model.centroids(c, 0), model.centroids(c, 1)});
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(got.topics[i] == best);
  }

  DocVectorSet wrong;
  wrong.ids = {"x"};
  wrong.vectors = Matrix::Zero(1, 3);
  CHECK_THROWS_AS(assign_topics(wrong, model), DataError);
}

TEST_CASE("topics_over_time and genre composition") {
  const Corpus corpus({song("a", Genre::Rap, 1995), song("b", Genre::Rap, 1995), song("c", Genre::Pop, 1995),
                       song("d", Genre::Pop, std::nullopt)});
  const Assignments single{{"a", "b"}, {0, 0}};
  const auto t = topics_over_time(single, corpus);
  CHECK(t.counts.size() == 1);
  CHECK(t.counts.at("1990s").at(0) == 2);

  CHECK(topics_over_time(Assignments{}, corpus).counts.empty());

  const Assignments mixed{{"a", "b", "c", "d", "zz"}, {0, 0, 1, 1, 0}};
  const auto m = topics_over_time(mixed, corpus);
  CHECK(m.undated == 1);
  CHECK(m.unmatched == 1);

  const auto comp = genre_composition(Assignments{{"a", "b", "c", "d"}, {0, 0, 0, -1}}, corpus);
  CHECK(comp.size() == 1);
  CHECK_THAT(comp.at(0).at(Genre::Rap), WithinAbs(200.0 / 3, 1e-9));
  CHECK_THAT(comp.at(0).at(Genre::Pop), WithinAbs(100.0 / 3, 1e-9));
}

TEST_CASE("composition and temporal counts match a brute-force recount") {
  std::mt19937_64 gen(13);
  std::vector<SongRecord> records;
  Assignments a;
  for (int i = 0; i < 50; ++i) {
    const auto genre = kAllGenres[gen() % kAllGenres.size()];
    std::optional<int> year;
    if (gen() % 7) year = 1960 + static_cast<int>(gen() % 60);
    records.push_back(song("s" + std::to_string(i), genre, year));
    a.doc_ids.push_back(records.back().id);
    a.topics.push_back(static_cast<int>(gen() % 5) - 1);
  }
  const Corpus corpus(records);

  std::map<std::pair<std::string, int>, std::size_t> expected_time;
  std::map<int, std::map<Genre, std::size_t>> expected_genre;
  std::map<int, std::size_t> topic_total;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (a.topics[i] < 0) continue;
    ++expected_genre[a.topics[i]][records[i].genre];
    ++topic_total[a.topics[i]];
    if (records[i].year) ++expected_time[{std::to_string(*records[i].year / 10 * 10) + "s", a.topics[i]}];
  }
  const auto time = topics_over_time(a, corpus);
  std::map<std::pair<std::string, int>, std::size_t> got_time;
  for (const auto& [decade, row] : time.counts)
    for (const auto& [topic, n] : row) got_time[{decade, topic}] = n;
  CHECK(got_time == expected_time);

  const auto comp = genre_composition(a, corpus);
  for (const auto& [topic, row] : expected_genre) {
    double sum = 0;
    for (const auto& [genre, n] : row) {
      CHECK_THAT(comp.at(topic).at(genre), WithinAbs(100.0 * n / topic_total[topic], 1e-9));
      sum += comp.at(topic).at(genre);
    }
    CHECK_THAT(sum, WithinAbs(100.0, 1e-9));
  }
}

TEST_CASE("top_topic_per_genre counts within the genre") {
  const Corpus corpus({song("a", Genre::Rap, 1990), song("b", Genre::Rap, 1990), song("c", Genre::Rap, 1990),
                       song("d", Genre::Pop, 1990), song("e", Genre::Pop, 1990)});
  const Assignments a{{"a", "b", "c", "d", "e"}, {2, 2, 1, 1, 2}};
  const auto top = top_topic_per_genre(a, corpus);
  CHECK(top.at(Genre::Rap) == 2);
  CHECK(top.at(Genre::Pop) == 1);  // tie, lower id
  CHECK_FALSE(top.count(Genre::Rock));
}

TEST_CASE("persistence round-trips") {
  test::TempDir dir;
  const auto fx = themed_fixture(14);

  save_doc_vectors(fx.vectors, dir / "v.tsv");
  const auto text = test::read_file(dir / "v.tsv");
  CHECK(text.substr(0, text.find('\n')) == "60 6");
  const auto vectors = load_doc_vectors(dir / "v.tsv");
  CHECK(vectors.ids == fx.vectors.ids);
  CHECK(vectors.vectors == fx.vectors.vectors);
  CHECK(vectors.source == VectorSource::ExternalFile);
  test::write_file(dir / "bad.tsv", "1 3\nd0\t1 2\n");
  CHECK_THROWS_AS(load_doc_vectors(dir / "bad.tsv"), DataError);

  TopicFitParams params;
  params.target_dim = 3;
  params.cluster.dbscan.eps = 1.0;
  params.cluster.dbscan.min_pts = 4;
  const auto model = fit_topics(fx.vectors, fx.docs, default_stopwords(), params);
  save_topic_model(model, dir / "model");
  for (const char* f : {"assignments.csv", "labels.csv", "ctfidf.csv", "projection.bin"})
    CHECK(std::filesystem::exists(dir / "model" / f));
  const auto loaded = load_topic_model(dir / "model");
  CHECK(loaded.strategy == model.strategy);
  CHECK(loaded.assignments == model.assignments);
  CHECK(loaded.labels == model.labels);
  CHECK(loaded.sizes == model.sizes);
  CHECK(loaded.centroids == model.centroids);
  CHECK(loaded.projection.mean == model.projection.mean);
  CHECK(loaded.projection.components == model.projection.components);
  CHECK(loaded.outlier_radius == model.outlier_radius);
  CHECK(loaded.ctfidf.terms == model.ctfidf.terms);
  CHECK(Matrix(loaded.ctfidf.weights) == Matrix(model.ctfidf.weights));
  CHECK(assign_topics(fx.vectors, loaded) == assign_topics(fx.vectors, model));

  write_assignments(model.assignments, dir / "a.csv");
  CHECK(read_assignments(dir / "a.csv") == model.assignments);
}
