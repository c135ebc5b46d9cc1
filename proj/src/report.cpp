// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "io_util.hpp"

namespace biasbeam {
namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string label_of(const TopicModel& model, int topic) {
  return topic >= 0 && static_cast<std::size_t>(topic) < model.labels.size()
             ? model.labels[static_cast<std::size_t>(topic)]
             : std::string();
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::optional<double> parse_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return io::parse_double(cell, "bias_table.csv");
}

nlohmann::ordered_json json_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(round_to_report(*v)) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

double round_to_report(double value) { return std::strtod(format_number(value).c_str(), nullptr); }

void ReportBundle::check_unique(const std::string& name) const {
  if (tables_.count(name) || series_.count(name))
    throw DataError("report bundle already has an entry named " + name);
}

void ReportBundle::add_table(const std::string& name, csv::Table table) {
  check_unique(name);
  tables_.emplace(name, std::move(table));
}

void ReportBundle::add_series(const std::string& name, nlohmann::ordered_json series) {
  check_unique(name);
  series_.emplace(name, std::move(series));
}

std::vector<std::filesystem::path> ReportBundle::write(const std::filesystem::path& out_dir) const {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, table] : tables_) {
    std::ostringstream csv_text;
    csv::write_table(csv_text, table);
    written.push_back(out_dir / (name + ".csv"));
    write_file(written.back(), csv_text.str());
  }
  for (const auto& [name, series] : series_) {
    written.push_back(out_dir / (name + ".json"));
    write_file(written.back(), series.dump(2) + "\n");
  }
  if (!warnings_.empty()) {
    written.push_back(out_dir / "warnings.json");
    write_file(written.back(), nlohmann::ordered_json(warnings_).dump(2) + "\n");
  }
  return written;
}

void add_topic_tables(ReportBundle& bundle, const TopicModel& model,
                      const Assignments& assignments, const Corpus& corpus, std::size_t top_n) {
  if (model.topic_count() == 0)
    bundle.add_warning("topic model has no topics; every document is an outlier");

  std::vector<std::size_t> assigned(model.topic_count(), 0);
  for (int t : assignments.topics)
    if (t >= 0 && static_cast<std::size_t>(t) < assigned.size()) ++assigned[static_cast<std::size_t>(t)];

  csv::Table labels{{"topic", "label", "size", "assigned"}, {}};
  for (std::size_t t = 0; t < model.topic_count(); ++t)
    labels.rows.push_back({std::to_string(t), model.labels[t], std::to_string(model.sizes[t]),
                           std::to_string(assigned[t])});

  csv::Table composition{{"topic", "label", "genre", "percentage"}, {}};
  for (const auto& [topic, shares] : genre_composition(assignments, corpus))
    for (const auto& [genre, pct] : shares)
      composition.rows.push_back({std::to_string(topic), label_of(model, topic),
                                  std::string(genre_name(genre)), format_number(pct)});

  csv::Table over_time{{"decade", "topic", "label", "count"}, {}};
  const auto temporal = topics_over_time(assignments, corpus);
  for (const auto& [decade, by_topic] : temporal.counts)
    for (const auto& [topic, n] : by_topic)
      over_time.rows.push_back({decade, std::to_string(topic), label_of(model, topic), std::to_string(n)});
  if (temporal.undated > 0)
    bundle.add_warning(std::to_string(temporal.undated) +
                       " assigned documents have no year and are excluded from topics_over_time");
  if (temporal.unmatched > 0)
    bundle.add_warning(std::to_string(temporal.unmatched) + " assigned documents are not in the corpus");

  csv::Table top_terms{{"topic", "label", "rank", "term", "weight"}, {}};
  for (std::size_t t = 0; t < model.topic_count(); ++t) {
    auto row = model.ctfidf.row(static_cast<int>(t));
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t r = 0; r < std::min(top_n, row.size()); ++r)
      top_terms.rows.push_back({std::to_string(t), model.labels[t], std::to_string(r + 1),
                                row[r].first, format_number(row[r].second)});
  }

  bundle.add_table("labels", std::move(labels));
  bundle.add_table("genre_composition", std::move(composition));
  bundle.add_table("topics_over_time", std::move(over_time));
  bundle.add_table("top_terms", std::move(top_terms));
}

std::vector<BiasRow> to_bias_rows(std::span<const WeatResult> results) {
  std::vector<BiasRow> rows;
  auto rounded = [](const std::optional<double>& v) {
    return v ? std::optional<double>(round_to_report(*v)) : std::nullopt;
  };
  for (const auto& r : results) {
    BiasRow row;
    row.stratum = r.stratum_label;
    row.target_set = r.target_name;
    row.n_present = r.n_present;
    row.n_missing = r.missing.size();
    row.sum_score = rounded(r.sum_score);
    row.effect_size = rounded(r.effect_size);
    row.p_value = rounded(r.p_value);
    row.reason = r.error;
    rows.push_back(std::move(row));
  }
  return rows;
}

void add_bias_tables(ReportBundle& bundle, std::span<const WeatResult> results) {
  if (results.empty()) throw DataError("no bias results to report");

  csv::Table table{{"stratum", "target_set", "n_present", "n_missing", "sum_score", "effect_size",
                    "p_value", "reason"},
                   {}};
  for (const auto& r : results)
    table.rows.push_back({r.stratum_label, r.target_name, std::to_string(r.n_present),
                          std::to_string(r.missing.size()), optional_cell(r.sum_score),
                          optional_cell(r.effect_size), optional_cell(r.p_value),
                          r.error.value_or("")});

  std::vector<std::string> strata;
  std::vector<std::string> targets;
  auto note = [](std::vector<std::string>& list, const std::string& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  for (const auto& r : results) {
    note(strata, r.stratum_label);
    note(targets, r.target_name);
  }
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& target : targets) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& stratum : strata) {
      auto it = std::find_if(results.begin(), results.end(), [&](const WeatResult& r) {
        return r.target_name == target && r.stratum_label == stratum;
      });
      nlohmann::ordered_json point;
      point["stratum"] = stratum;
      point["effect_size"] = it != results.end() ? json_number(it->effect_size) : nullptr;
      point["n_present"] = it != results.end() ? it->n_present : 0;
      points.push_back(std::move(point));
    }
    nlohmann::ordered_json s;
    s["target_set"] = target;
    s["points"] = std::move(points);
    series.push_back(std::move(s));
  }
  nlohmann::ordered_json doc;
  doc["sign_convention"] = "positive = male bias, negative = female bias";
  doc["strata"] = strata;
  doc["series"] = std::move(series);

  bundle.add_table("bias_table", std::move(table));
  bundle.add_series("bias_series", std::move(doc));
}

std::vector<std::filesystem::path> emit_topic_reports(const TopicModel& model,
                                                      const Corpus& corpus,
                                                      const std::filesystem::path& out_dir) {
  ReportBundle bundle;
  add_topic_tables(bundle, model, model.assignments, corpus);
  return bundle.write(out_dir);
}

std::vector<std::filesystem::path> emit_bias_reports(std::span<const WeatResult> results,
                                                     const std::filesystem::path& out_dir) {
  ReportBundle bundle;
  add_bias_tables(bundle, results);
  return bundle.write(out_dir);
}

void write_run_metadata(const RunMetadata& metadata, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json doc;
  doc["config_hash"] = metadata.config_hash;
  doc["seed"] = metadata.seed;
  doc["started_at"] = metadata.started_at;
  doc["finished_at"] = metadata.finished_at;
  doc["config"] = metadata.config;
  write_file(out_dir / "run_metadata.json", doc.dump(2) + "\n");
}

std::vector<BiasRow> read_bias_table(const std::filesystem::path& path) {
  const auto table = csv::read_table_file(path.string());
  const csv::Row expected{"stratum", "target_set", "n_present", "n_missing", "sum_score",
                          "effect_size", "p_value", "reason"};
  if (table.header != expected) throw DataError(path.string() + ": unexpected header");
  std::vector<BiasRow> rows;
  for (const auto& cells : table.rows) {
    if (cells.size() != expected.size()) throw DataError(path.string() + ": malformed row");
    BiasRow row;
    row.stratum = cells[0];
    row.target_set = cells[1];
    row.n_present = static_cast<std::size_t>(io::parse_int(cells[2], path.string()));
    row.n_missing = static_cast<std::size_t>(io::parse_int(cells[3], path.string()));
    row.sum_score = parse_optional(cells[4]);
    row.effect_size = parse_optional(cells[5]);
    row.p_value = parse_optional(cells[6]);
    if (!cells[7].empty()) row.reason = cells[7];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace biasbeam
