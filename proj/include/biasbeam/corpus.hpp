// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace biasbeam {

enum class Genre { Pop, Rap, Rock, Country, RnB, Misc };

inline constexpr std::array<Genre, 6> kAllGenres = {Genre::Pop,     Genre::Rap, Genre::Rock,
                                                    Genre::Country, Genre::RnB, Genre::Misc};

std::string_view genre_name(Genre genre);

/// Raw tag (lowercased, trimmed) -> genre. Consulted before the built-in table.
using GenreOverrides = std::map<std::string, Genre>;

/// Case-insensitive genre tag mapping; unknown tags fall back to Misc.
Genre normalize_genre(std::string_view raw, const GenreOverrides& overrides = {});

/// Parses a canonical genre name ("Pop", "RnB", ...), case-insensitively.
std::optional<Genre> parse_genre_name(std::string_view name);

struct SongRecord {
  std::string id;
  std::string title;
  std::string artist;
  std::string genre_raw;
  Genre genre = Genre::Misc;
  std::optional<int> year;
  std::string lyrics;
  std::string language;
};

/// Immutable ordered collection of records with a genre partition.
class Corpus {
 public:
  Corpus() = default;

  /// Throws DataError on duplicate ids or empty lyrics.
  explicit Corpus(std::vector<SongRecord> records);

  const std::vector<SongRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const SongRecord& operator[](std::size_t i) const { return records_[i]; }

  /// Record indices per genre, in corpus order. Every genre has an entry.
  const std::map<Genre, std::vector<std::size_t>>& strata() const { return strata_; }
  const std::vector<std::size_t>& stratum(Genre genre) const { return strata_.at(genre); }

  std::optional<std::size_t> find(std::string_view id) const;

 private:
  std::vector<SongRecord> records_;
  std::map<Genre, std::vector<std::size_t>> strata_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class CorpusFormat { Csv, Jsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

struct IngestOptions {
  GenreOverrides genre_overrides;
  /// Records whose language tag differs from this (case-insensitive) are dropped.
  std::string keep_language = "en";
};

struct IngestReport {
  std::size_t kept = 0;
  std::size_t skipped = 0;
  std::size_t non_english = 0;
  /// reason -> count; sums to `skipped`.
  std::map<std::string, std::size_t> skip_reasons;
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

/// Reads a corpus file. Invalid rows are skipped and counted.
/// Throws DataError when the file cannot be read or no row is valid.
IngestResult ingest(const std::filesystem::path& path, CorpusFormat format,
                    const IngestOptions& options = {});

/// Writes records as JSONL using the ingest field names; `ingest` reads it back.
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Uniform per-genre sample of min(cap, |stratum|) records without
/// replacement. Output is ordered by genre, then by reservoir slot.
Corpus stratified_sample(const Corpus& corpus, std::size_t cap, std::uint64_t seed);

/// "1990s"-style decade label. Years outside [1900, 2100] throw DataError.
std::string decade_of(int year);

}  // namespace biasbeam
