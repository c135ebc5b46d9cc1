// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include <catch_amalgamated.hpp>

#include <random>

#include "biasbeam/csv.hpp"
#include "biasbeam/error.hpp"
#include "biasbeam/report.hpp"
#include "support.hpp"

using namespace biasbeam;

namespace {

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

struct TopicFixture {
  Corpus corpus;
  TopicModel model;
};

TopicFixture three_topics() {
  TopicFixture fx;
  fx.corpus = Corpus({song("a", Genre::Rap, 1991), song("b", Genre::Rap, 2004), song("c", Genre::Pop, 2004),
                      song("d", Genre::Country, std::nullopt), song("e", Genre::Rock, 1975),
                      song("f", Genre::Pop, 1975)});
  const std::vector<TokenizedDoc> docs = {{"a", {"money", "cash", "street"}}, {"b", {"money", "block"}},
                                          {"c", {"dance", "night"}},          {"d", {"road", "truck"}},
                                          {"e", {"fire", "dance"}},           {"f", {"zzz"}}};
  const std::vector<int> labels = {0, 0, 1, 2, 1, -1};
  auto& m = fx.model;
  m.strategy = ClusterStrategy::KMeans;
  m.assignments.doc_ids = {"a", "b", "c", "d", "e", "f"};
  m.assignments.topics = labels;
  m.input_dim = 2;
  m.reduced_dim = 2;
  m.projection.mean = Vector::Zero(2);
  m.projection.components = Matrix::Identity(2, 2);
  m.centroids = Matrix::Zero(3, 2);
  m.ctfidf = ctfidf(labels, docs, {});
  for (int t = 0; t < 3; ++t) m.labels.push_back(topic_label(m.ctfidf.row(t)));
  m.sizes = {2, 2, 1};
  return fx;
}

std::vector<WeatResult> grid_results(std::size_t targets, std::size_t strata) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<WeatResult> out;
  for (std::size_t t = 0; t < targets; ++t)
    for (std::size_t s = 0; s < strata; ++s) {
      WeatResult r;
      r.target_name = "T" + std::to_string(t);
      r.stratum_label = "S" + std::to_string(s);
      r.n_present = 5;
      r.sum_score = u(gen) / 3;
      r.effect_size = u(gen);
      r.p_value = std::abs(u(gen)) / 2;
      out.push_back(r);
    }
  return out;
}

}  // namespace

TEST_CASE("format_number uses six significant digits") {
  CHECK(format_number(0.123456789) == "0.123457");
  CHECK(format_number(-1.5) == "-1.5");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(123456789.0) == "1.23457e+08");
  CHECK(format_number(2.0) == "2");
  CHECK(round_to_report(0.123456789) == 0.123457);
  CHECK(format_number(round_to_report(-3.14159265)) == format_number(-3.14159265));
}

TEST_CASE("bundle names must be unique") {
  ReportBundle bundle;
  bundle.add_table("t", {{"a"}, {}});
  CHECK_THROWS_AS(bundle.add_table("t", {{"a"}, {}}), DataError);
  CHECK_THROWS_AS(bundle.add_series("t", nlohmann::ordered_json::object()), DataError);
}

TEST_CASE("topic reports") {
  test::TempDir dir;
  const auto fx = three_topics();
  const auto files = emit_topic_reports(fx.model, fx.corpus, dir.path());
  std::set<std::string> names;
  for (const auto& f : files) names.insert(f.filename().string());
  CHECK(names == std::set<std::string>{"labels.csv", "genre_composition.csv", "topics_over_time.csv",
                                       "top_terms.csv", "warnings.json"});

  const auto labels = csv::read_table_file((dir / "labels.csv").string());
  CHECK(labels.header == csv::Row{"topic", "label", "size", "assigned"});
  REQUIRE(labels.rows.size() == 3);
  CHECK(labels.rows[0] == csv::Row{"0", fx.model.labels[0], "2", "2"});

  std::size_t term_rows = 0;
  for (int t = 0; t < 3; ++t) term_rows += std::min<std::size_t>(10, fx.model.ctfidf.row(t).size());
  CHECK(csv::read_table_file((dir / "top_terms.csv").string()).rows.size() == term_rows);

  // topic 0: two rap; topic 1: pop + rock; topic 2: country
  const auto comp = csv::read_table_file((dir / "genre_composition.csv").string());
  CHECK(comp.rows.size() == 4);
  CHECK(comp.rows[0] == csv::Row{"0", fx.model.labels[0], "Rap", "100"});
  CHECK(comp.rows[1][3] == "50");

  const auto time = csv::read_table_file((dir / "topics_over_time.csv").string());
  CHECK(time.rows.size() == 4);  // 1990s/0, 2000s/0, 2000s/1, 1970s/1
  CHECK(test::read_file(dir / "warnings.json").find("no year") != std::string::npos);
}

TEST_CASE("topic report tables round-trip through CSV") {
  test::TempDir dir;
  const auto fx = three_topics();
  ReportBundle bundle;
  add_topic_tables(bundle, fx.model, fx.model.assignments, fx.corpus);
  bundle.write(dir.path());
  for (const auto& [name, table] : bundle.tables())
    CHECK(csv::read_table_file((dir / (name + ".csv")).string()) == table);
}

TEST_CASE("a model with only outliers yields empty tables and a warning") {
  test::TempDir dir;
  auto fx = three_topics();
  TopicModel empty;
  empty.assignments = fx.model.assignments;
  std::fill(empty.assignments.topics.begin(), empty.assignments.topics.end(), kOutlierTopic);
  ReportBundle bundle;
  add_topic_tables(bundle, empty, empty.assignments, fx.corpus);
  for (const auto& [name, table] : bundle.tables()) CHECK(table.rows.empty());
  REQUIRE_FALSE(bundle.warnings().empty());
  CHECK(bundle.warnings()[0].find("no topics") != std::string::npos);
}

TEST_CASE("bias reports: 6 targets x 5 strata") {
  test::TempDir dir;
  const auto results = grid_results(6, 5);
  emit_bias_reports(results, dir.path());
  const auto rows = read_bias_table(dir / "bias_table.csv");
  CHECK(rows.size() == 30);
  CHECK(rows == to_bias_rows(results));

  const auto series = nlohmann::json::parse(test::read_file(dir / "bias_series.json"));
  CHECK(series.at("strata").size() == 5);
  REQUIRE(series.at("series").size() == 6);
  for (const auto& s : series.at("series")) CHECK(s.at("points").size() == 5);
  CHECK(series.at("series")[0].at("points")[1].at("effect_size").get<double>() ==
        round_to_report(*results[1].effect_size));
  CHECK(series.at("sign_convention").get<std::string>().find("positive = male") == 0);
}

TEST_CASE("a failed cell keeps its row with a reason") {
  test::TempDir dir;
  auto results = grid_results(2, 2);
  results[3].effect_size.reset();
  results[3].p_value.reset();
  results[3].error = "per-word associations have zero variance";
  emit_bias_reports(results, dir.path());
  const auto rows = read_bias_table(dir / "bias_table.csv");
  REQUIRE(rows.size() == 4);
  CHECK_FALSE(rows[3].effect_size);
  CHECK(rows[3].sum_score);
  CHECK(rows[3].reason == results[3].error);
  const auto series = nlohmann::json::parse(test::read_file(dir / "bias_series.json"));
  CHECK(series.at("series")[1].at("points")[1].at("effect_size").is_null());
  CHECK_THROWS_AS(emit_bias_reports(std::vector<WeatResult>{}, dir.path()), DataError);
}

TEST_CASE("report emission is byte-deterministic with LF line endings") {
  test::TempDir a, b;
  const auto results = grid_results(3, 4);
  const auto fx = three_topics();
  emit_bias_reports(results, a.path());
  emit_bias_reports(results, b.path());
  emit_topic_reports(fx.model, fx.corpus, a.path());
  emit_topic_reports(fx.model, fx.corpus, b.path());
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    const auto text = test::read_file(entry.path());
    CHECK(text == test::read_file(b / name));
    CHECK(text.find('\r') == std::string::npos);
  }
}

TEST_CASE("every emitted bias number comes from the result set") {
  test::TempDir dir;
  const auto results = grid_results(2, 3);
  emit_bias_reports(results, dir.path());
  const auto table = csv::read_table_file((dir / "bias_table.csv").string());
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(table.rows[i][4] == format_number(*results[i].sum_score));
    CHECK(table.rows[i][5] == format_number(*results[i].effect_size));
    CHECK(table.rows[i][6] == format_number(*results[i].p_value));
  }
}

TEST_CASE("run metadata") {
  test::TempDir dir;
  RunMetadata meta;
  meta.config_hash = "00ff";
  meta.seed = 42;
  meta.started_at = "2026-01-01T00:00:00Z";
  meta.finished_at = "2026-01-01T00:01:00Z";
  meta.config = {{"sampling", {{"seed", 42}}}};
  write_run_metadata(meta, dir.path());
  const auto doc = nlohmann::json::parse(test::read_file(dir / "run_metadata.json"));
  CHECK(doc.at("config_hash") == "00ff");
  CHECK(doc.at("seed") == 42);
  CHECK(doc.at("config").at("sampling").at("seed") == 42);
}
