// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <variant>

#include "json.hpp"

#include "biasbeam/csv.hpp"
#include "biasbeam/error.hpp"
#include "biasbeam/random.hpp"

namespace biasbeam {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr int kMinYear = 1900;
constexpr int kMaxYear = 2100;

// Raw string fields of one input row; absent columns are nullopt.
struct RawRow {
  std::string id, title, artist, genre, lyrics;
  std::optional<std::string> genre_raw;
  std::optional<std::string> year;
  std::optional<std::string> language;
};

using Validated = std::variant<SongRecord, std::string>;

Validated validate(RawRow raw, const IngestOptions& options) {
  SongRecord record;
  record.id = std::string(trim(raw.id));
  if (record.id.empty()) return std::string("missing_id");
  if (trim(raw.lyrics).empty()) return std::string("empty_lyrics");
  if (raw.year) {
    const auto text = trim(*raw.year);
    if (!text.empty()) {
      int year = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), year);
      if (ec != std::errc() || ptr != text.data() + text.size() || year < kMinYear ||
          year > kMaxYear)
        return std::string("bad_year");
      record.year = year;
    }
  }
  record.title = std::move(raw.title);
  record.artist = std::move(raw.artist);
  record.genre = normalize_genre(raw.genre, options.genre_overrides);
  record.genre_raw = raw.genre_raw ? std::move(*raw.genre_raw) : std::move(raw.genre);
  record.lyrics = std::move(raw.lyrics);
  record.language = raw.language ? lower(trim(*raw.language)) : lower(options.keep_language);
  return record;
}

class Collector {
 public:
  explicit Collector(const IngestOptions& options)
      : options_(options), keep_(lower(options.keep_language)) {}

  void add(Validated v) {
    if (auto* reason = std::get_if<std::string>(&v)) {
      skip(*reason);
      return;
    }
    auto& record = std::get<SongRecord>(v);
    if (!seen_.insert(record.id).second) {
      skip("duplicate_id");
      return;
    }
    if (record.language != keep_) {
      ++report_.non_english;
      return;
    }
    records_.push_back(std::move(record));
  }

  void skip(const std::string& reason) {
    ++report_.skipped;
    ++report_.skip_reasons[reason];
  }

  const IngestOptions& options() const { return options_; }

  IngestResult finish(const std::filesystem::path& path) {
    report_.kept = records_.size();
    if (records_.empty()) throw DataError("no valid rows in " + path.string());
    return {Corpus(std::move(records_)), report_};
  }

 private:
  const IngestOptions& options_;
  std::string keep_;
  std::set<std::string> seen_;
  std::vector<SongRecord> records_;
  IngestReport report_;
};

void ingest_csv(std::istream& in, Collector& out) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw DataError("csv: missing header row");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header->size(); ++i) {
    std::string_view name = (*header)[i];
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.remove_prefix(3);
    column[lower(trim(name))] = i;
  }
  for (const char* required : {"id", "genre", "lyrics"})
    if (!column.count(required))
      throw DataError(std::string("csv: header lacks required column '") + required + "'");

  auto optional_field = [&](const csv::Row& row, const char* name) -> std::optional<std::string> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return row[it->second];
  };

  while (auto row = reader.next()) {
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;
    if (row->size() != header->size()) {
      out.skip("malformed");
      continue;
    }
    RawRow raw;
    raw.id = (*row)[column["id"]];
    raw.genre = (*row)[column["genre"]];
    raw.lyrics = (*row)[column["lyrics"]];
    raw.title = optional_field(*row, "title").value_or("");
    raw.artist = optional_field(*row, "artist").value_or("");
    raw.genre_raw = optional_field(*row, "genre_raw");
    raw.year = optional_field(*row, "year");
    raw.language = optional_field(*row, "language");
    out.add(validate(std::move(raw), out.options()));
  }
}

// nullopt when the value has the wrong JSON type.
std::optional<std::optional<std::string>> json_text(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::optional<std::string>{};
  if (it->is_string()) return std::optional<std::string>{it->get<std::string>()};
  if (it->is_number_integer()) return std::optional<std::string>{std::to_string(it->get<long long>())};
  return std::nullopt;
}

void ingest_jsonl(std::istream& in, Collector& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      out.skip("malformed");
      continue;
    }
    if (!obj.is_object()) {
      out.skip("malformed");
      continue;
    }
    RawRow raw;
    bool ok = true;
    auto required = [&](const char* key, std::string& dst) {
      auto v = json_text(obj, key);
      if (!v) ok = false;
      else dst = v->value_or("");
    };
    auto optional = [&](const char* key, std::optional<std::string>& dst) {
      auto v = json_text(obj, key);
      if (!v) ok = false;
      else dst = *v;
    };
    required("id", raw.id);
    required("title", raw.title);
    required("artist", raw.artist);
    required("genre", raw.genre);
    required("lyrics", raw.lyrics);
    optional("genre_raw", raw.genre_raw);
    optional("year", raw.year);
    if (obj.contains("language")) optional("language", raw.language);
    if (!ok) {
      out.skip("malformed");
      continue;
    }
    out.add(validate(std::move(raw), out.options()));
  }
}

}  // namespace

std::string_view genre_name(Genre genre) {
  switch (genre) {
    case Genre::Pop: return "Pop";
    case Genre::Rap: return "Rap";
    case Genre::Rock: return "Rock";
    case Genre::Country: return "Country";
    case Genre::RnB: return "RnB";
    case Genre::Misc: return "Misc";
  }
  return "Misc";
}

std::optional<Genre> parse_genre_name(std::string_view name) {
  const auto key = lower(trim(name));
  for (Genre g : kAllGenres)
    if (lower(genre_name(g)) == key) return g;
  return std::nullopt;
}

Genre normalize_genre(std::string_view raw, const GenreOverrides& overrides) {
  const auto key = lower(trim(raw));
  if (auto it = overrides.find(key); it != overrides.end()) return it->second;
  static const std::map<std::string, Genre, std::less<>> table = {
      {"pop", Genre::Pop},         {"rap", Genre::Rap},         {"hip-hop", Genre::Rap},
      {"hip hop", Genre::Rap},     {"hiphop", Genre::Rap},      {"rock", Genre::Rock},
      {"country", Genre::Country}, {"r&b", Genre::RnB},         {"rb", Genre::RnB},
      {"rnb", Genre::RnB},         {"r'n'b", Genre::RnB},       {"r and b", Genre::RnB},
      {"misc", Genre::Misc},
  };
  if (auto it = table.find(key); it != table.end()) return it->second;
  return Genre::Misc;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  const auto key = lower(trim(name));
  if (key == "csv") return CorpusFormat::Csv;
  if (key == "jsonl") return CorpusFormat::Jsonl;
  return std::nullopt;
}

Corpus::Corpus(std::vector<SongRecord> records) : records_(std::move(records)) {
  for (Genre g : kAllGenres) strata_[g];
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (trim(r.lyrics).empty()) throw DataError("record " + r.id + " has empty lyrics");
    if (!by_id_.emplace(r.id, i).second) throw DataError("duplicate record id " + r.id);
    strata_[r.genre].push_back(i);
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

IngestResult ingest(const std::filesystem::path& path, CorpusFormat format,
                    const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  Collector collector(options);
  if (format == CorpusFormat::Csv)
    ingest_csv(in, collector);
  else
    ingest_jsonl(in, collector);
  return collector.finish(path);
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : corpus.records()) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["title"] = r.title;
    obj["artist"] = r.artist;
    obj["genre"] = genre_name(r.genre);
    obj["genre_raw"] = r.genre_raw;
    obj["year"] = r.year ? nlohmann::ordered_json(*r.year) : nlohmann::ordered_json(nullptr);
    obj["lyrics"] = r.lyrics;
    obj["language"] = r.language;
    out << obj.dump() << '\n';
  }
}

Corpus stratified_sample(const Corpus& corpus, std::size_t cap, std::uint64_t seed) {
  if (corpus.empty()) throw DataError("stratified_sample: empty corpus");
  if (cap == 0) throw DataError("stratified_sample: cap must be at least 1");

  std::vector<SongRecord> sampled;
  for (Genre genre : kAllGenres) {
    const auto& members = corpus.stratum(genre);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(genre)));
    std::vector<std::size_t> reservoir;
    reservoir.reserve(std::min(cap, members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i < cap) {
        reservoir.push_back(members[i]);
      } else {
        const auto slot = rng.below(i + 1);
        if (slot < cap) reservoir[slot] = members[i];
      }
    }
    for (auto index : reservoir) sampled.push_back(corpus[index]);
  }
  return Corpus(std::move(sampled));
}

std::string decade_of(int year) {
  if (year < kMinYear || year > kMaxYear)
    throw DataError("year out of range [1900, 2100]: " + std::to_string(year));
  return std::to_string(year / 10 * 10) + "s";
}

}  // namespace biasbeam
