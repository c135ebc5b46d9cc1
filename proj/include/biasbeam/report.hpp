// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "biasbeam/csv.hpp"
#include "biasbeam/topics.hpp"
#include "biasbeam/weat.hpp"

namespace biasbeam {

/// "%.6g". Every number in a report passes through here.
std::string format_number(double value);

/// The value a reader recovers from format_number(value).
double round_to_report(double value);

struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  nlohmann::ordered_json config;
};

/// Named CSV tables and JSON series for one run. Names are unique.
class ReportBundle {
 public:
  void add_table(const std::string& name, csv::Table table);
  void add_series(const std::string& name, nlohmann::ordered_json series);
  void add_warning(std::string warning) { warnings_.push_back(std::move(warning)); }

  const std::map<std::string, csv::Table>& tables() const { return tables_; }
  const std::map<std::string, nlohmann::ordered_json>& series() const { return series_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  RunMetadata metadata;

  /// Writes <name>.csv / <name>.json per entry, plus warnings.json when
  /// warnings exist. Returns the written paths in write order.
  std::vector<std::filesystem::path> write(const std::filesystem::path& out_dir) const;

 private:
  void check_unique(const std::string& name) const;

  std::map<std::string, csv::Table> tables_;
  std::map<std::string, nlohmann::ordered_json> series_;
  std::vector<std::string> warnings_;
};

/// genre_composition, topics_over_time, top_terms (top_n per topic) and labels.
void add_topic_tables(ReportBundle& bundle, const TopicModel& model,
                      const Assignments& assignments, const Corpus& corpus,
                      std::size_t top_n = 10);

/// bias_table and bias_series. Throws DataError on empty results.
void add_bias_tables(ReportBundle& bundle, std::span<const WeatResult> results);

/// Topic tables for the model's own assignments, written to out_dir.
std::vector<std::filesystem::path> emit_topic_reports(const TopicModel& model,
                                                      const Corpus& corpus,
                                                      const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> emit_bias_reports(std::span<const WeatResult> results,
                                                     const std::filesystem::path& out_dir);

/// run_metadata.json
void write_run_metadata(const RunMetadata& metadata, const std::filesystem::path& out_dir);

/// One bias_table.csv row with numbers at report precision.
struct BiasRow {
  std::string stratum;
  std::string target_set;
  std::size_t n_present = 0;
  std::size_t n_missing = 0;
  std::optional<double> sum_score;
  std::optional<double> effect_size;
  std::optional<double> p_value;
  std::optional<std::string> reason;

  bool operator==(const BiasRow&) const = default;
};

/// The rows bias_table.csv holds for `results`.
std::vector<BiasRow> to_bias_rows(std::span<const WeatResult> results);
std::vector<BiasRow> read_bias_table(const std::filesystem::path& path);

}  // namespace biasbeam
