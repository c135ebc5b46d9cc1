// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace biasbeam {

struct TokenizedDoc {
  std::string doc_id;
  std::vector<std::string> tokens;
};

/// NFKC-normalizes and lowercases UTF-8 lyrics, drops "[Chorus]"-style
/// annotations, strips punctuation except apostrophes between word
/// characters, and splits on whitespace.
std::vector<std::string> tokenize(std::string_view lyrics);

inline TokenizedDoc tokenize_doc(std::string doc_id, std::string_view lyrics) {
  return {std::move(doc_id), tokenize(lyrics)};
}

/// Token -> dense index, ordered by descending count then lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Takes (token, count) pairs already in index order.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts,
             std::uint64_t min_count);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& token(std::size_t index) const { return tokens_[index]; }
  std::uint64_t count(std::size_t index) const { return counts_[index]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t min_count() const { return min_count_; }
  std::uint64_t total_count() const;

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_ && min_count_ == other.min_count_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t min_count_ = 1;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

/// Throws DataError when min_count is 0 or nothing survives the filter.
Vocabulary build_vocab(std::span<const TokenizedDoc> docs, std::uint64_t min_count);

using StopwordSet = std::unordered_set<std::string>;

/// Bundled English list.
const StopwordSet& default_stopwords();

/// One token per line; blank lines and lines starting with '#' are ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

}  // namespace biasbeam
