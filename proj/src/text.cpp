// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/text.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "biasbeam/error.hpp"

namespace biasbeam {
namespace {

bool is_word_char(UChar32 c) {
  if (u_isalnum(c)) return true;
  const auto type = u_charType(c);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019 || c == 0x02BC; }

const icu::Normalizer2& nfkc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFKC normalizer unavailable");
  return *n;
}

std::vector<UChar32> normalized_code_points(std::string_view text) {
  const auto& normalizer = nfkc();
  UErrorCode status = U_ZERO_ERROR;
  auto s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s = normalizer.normalize(s, status);
  s.toLower(icu::Locale::getRoot());
  s = normalizer.normalize(s, status);
  if (U_FAILURE(status)) throw DataError("tokenize: Unicode normalization failed");

  std::vector<UChar32> cps;
  cps.reserve(static_cast<std::size_t>(s.length()));
  for (int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) cps.push_back(s.char32At(i));
  return cps;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view lyrics) {
  auto cps = normalized_code_points(lyrics);

  // Section annotations: "[...]" up to the next closing bracket.
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] != '[') continue;
    auto close = std::find(cps.begin() + static_cast<std::ptrdiff_t>(i), cps.end(), ']');
    if (close == cps.end()) break;
    std::fill(cps.begin() + static_cast<std::ptrdiff_t>(i), close + 1, ' ');
  }

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string utf8;
    current.toUTF8String(utf8);
    tokens.push_back(std::move(utf8));
    current.remove();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const UChar32 c = cps[i];
    if (is_word_char(c)) {
      current.append(c);
    } else if (is_apostrophe(c) && i > 0 && i + 1 < cps.size() && is_word_char(cps[i - 1]) &&
               is_word_char(cps[i + 1])) {
      current.append(static_cast<UChar32>('\''));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts,
                       std::uint64_t min_count)
    : tokens_(std::move(tokens)), counts_(std::move(counts)), min_count_(min_count) {
  if (tokens_.size() != counts_.size())
    throw DataError("vocabulary: token and count lists differ in length");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (counts_[i] < min_count_) throw DataError("vocabulary: count below min_count");
    if (!index_.emplace(tokens_[i], i).second)
      throw DataError("vocabulary: duplicate token " + tokens_[i]);
  }
}

std::uint64_t Vocabulary::total_count() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(std::span<const TokenizedDoc> docs, std::uint64_t min_count) {
  if (min_count == 0) throw DataError("build_vocab: min_count must be at least 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs)
    for (const auto& token : doc.tokens) ++counts[token];

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [token, count] : counts)
    if (count >= min_count) kept.emplace_back(token, count);
  if (kept.empty())
    throw DataError("build_vocab: empty vocabulary at min_count " + std::to_string(min_count));

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> freq;
  tokens.reserve(kept.size());
  freq.reserve(kept.size());
  for (auto& [token, count] : kept) {
    tokens.push_back(std::move(token));
    freq.push_back(count);
  }
  return Vocabulary(std::move(tokens), std::move(freq), min_count);
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read stopword list " + path.string());
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.insert(line.substr(first, last - first + 1));
  }
  return words;
}

}  // namespace biasbeam
