// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/weat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"

namespace biasbeam {
namespace {

Matrix rows_of(std::span<const std::string> words, const EmbeddingMatrix& emb) {
  std::vector<Index> ids;
  for (const auto& w : words)
    if (auto i = emb.vocab.find(w)) ids.push_back(static_cast<Index>(*i));
  Matrix m(static_cast<Index>(ids.size()), emb.dim());
  for (std::size_t r = 0; r < ids.size(); ++r) m.row(static_cast<Index>(r)) = emb.input.row(ids[r]);
  return m;
}

// Present attribute vectors of one stratum.
struct ResolvedAttributes {
  Matrix male;
  Matrix female;

  ResolvedAttributes(const AttributePair& attrs, const EmbeddingMatrix& emb)
      : male(rows_of(attrs.male.words(), emb)), female(rows_of(attrs.female.words(), emb)) {
    if (male.rows() == 0)
      throw DataError("no word of attribute set '" + attrs.male.name() + "' is in the vocabulary");
    if (female.rows() == 0)
      throw DataError("no word of attribute set '" + attrs.female.name() + "' is in the vocabulary");
  }
};

std::vector<double> scores_of(std::span<const std::string> words, const ResolvedAttributes& attrs,
                              const EmbeddingMatrix& emb) {
  std::vector<double> scores;
  for (const auto& w : words)
    if (auto i = emb.vocab.find(w))
      scores.push_back(association(emb.input.row(static_cast<Index>(*i)), attrs.male, attrs.female));
  return scores;
}

std::vector<double> present_scores(const WordSet& target, const AttributePair& attrs,
                                   const EmbeddingMatrix& emb) {
  auto scores = scores_of(target.words(), ResolvedAttributes(attrs, emb), emb);
  if (scores.empty())
    throw DataError("no word of target set '" + target.name() + "' is in the vocabulary");
  return scores;
}

double sum_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> read_optional_number(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

WordSet::WordSet(std::string name, std::vector<std::string> words)
    : name_(std::move(name)), words_(std::move(words)) {
  if (words_.empty()) throw DataError("word set '" + name_ + "' is empty");
  std::set<std::string_view> seen;
  for (const auto& w : words_) {
    if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos)
      throw DataError("word set '" + name_ + "' contains a blank or multi-token entry");
    if (!seen.insert(w).second)
      throw DataError("word set '" + name_ + "' repeats the word '" + w + "'");
  }
}

AttributePair::AttributePair(WordSet male_set, WordSet female_set)
    : male(std::move(male_set)), female(std::move(female_set)) {
  const std::set<std::string> m(male.words().begin(), male.words().end());
  for (const auto& w : female.words())
    if (m.count(w)) throw DataError("attribute sets overlap on '" + w + "'");
}

Coverage resolve_wordset(const WordSet& set, const EmbeddingMatrix& emb) {
  Coverage out;
  for (const auto& w : set.words()) (emb.vocab.contains(w) ? out.present : out.missing).push_back(w);
  return out;
}

double effect_size_of(std::span<const double> scores) {
  if (scores.size() < 2) throw DataError("effect size needs at least two target words");
  const double n = static_cast<double>(scores.size());
  const double mean = sum_of(scores) / n;
  double squares = 0.0;
  double largest = 0.0;
  for (double s : scores) {
    squares += (s - mean) * (s - mean);
    largest = std::max(largest, std::abs(s));
  }
  const double stddev = std::sqrt(squares / n);
  if (stddev <= 64 * std::numeric_limits<double>::epsilon() * largest || stddev == 0.0)
    throw DegenerateVariance("per-word associations have zero variance");
  return mean / stddev;
}

double association(std::string_view word, const AttributePair& attrs, const EmbeddingMatrix& emb) {
  const auto w = emb.vector_of(word);
  const ResolvedAttributes resolved(attrs, emb);
  return association(w, resolved.male, resolved.female);
}

std::vector<double> association_scores(std::span<const std::string> words,
                                       const AttributePair& attrs, const EmbeddingMatrix& emb) {
  return scores_of(words, ResolvedAttributes(attrs, emb), emb);
}

double scweat_sum(const WordSet& target, const AttributePair& attrs, const EmbeddingMatrix& emb) {
  return sum_of(present_scores(target, attrs, emb));
}

double effect_size(const WordSet& target, const AttributePair& attrs, const EmbeddingMatrix& emb) {
  return effect_size_of(present_scores(target, attrs, emb));
}

double effect_size(std::span<const std::string> words, const AttributePair& attrs,
                   const EmbeddingMatrix& emb) {
  return effect_size_of(association_scores(words, attrs, emb));
}

std::uint64_t partition_count(std::size_t male, std::size_t female) {
  const std::uint64_t n = male + female;
  const std::uint64_t k = std::min(male, female);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

double permutation_pvalue(const WordSet& target, const AttributePair& attrs,
                          const EmbeddingMatrix& emb, const PermutationOptions& options) {
  if (options.iterations == 0) throw DataError("permutation test needs at least one iteration");
  const ResolvedAttributes resolved(attrs, emb);
  const Matrix targets = rows_of(target.words(), emb);
  if (targets.rows() == 0)
    throw DataError("no word of target set '" + target.name() + "' is in the vocabulary");

  const Index m = resolved.male.rows();
  const Index f = resolved.female.rows();
  Matrix pool(m + f, emb.dim());
  pool << resolved.male, resolved.female;

  // Summed association of every target word with each pooled attribute word.
  Vector column_sum = Vector::Zero(m + f);
  for (Index x = 0; x < targets.rows(); ++x)
    for (Index j = 0; j < m + f; ++j) column_sum(j) += cosine(targets.row(x), pool.row(j));

  std::vector<char> in_male(static_cast<std::size_t>(m + f), 0);
  auto statistic = [&] {
    double a = 0.0, b = 0.0;
    for (Index j = 0; j < m + f; ++j) (in_male[static_cast<std::size_t>(j)] ? a : b) += column_sum(j);
    return a / static_cast<double>(m) - b / static_cast<double>(f);
  };
  std::fill(in_male.begin(), in_male.begin() + m, 1);
  const double observed = statistic();
  const double threshold = observed - 1e-10 * std::max(1.0, std::abs(observed));

  std::uint64_t hits = 0;
  std::uint64_t draws = 0;
  const auto total = partition_count(static_cast<std::size_t>(m), static_cast<std::size_t>(f));
  if (total <= options.exact_limit) {
    // Lexicographic walk over male-side index combinations.
    std::vector<Index> chosen(static_cast<std::size_t>(m));
    std::iota(chosen.begin(), chosen.end(), Index{0});
    const Index n = m + f;
    for (;;) {
      std::fill(in_male.begin(), in_male.end(), 0);
      for (Index c : chosen) in_male[static_cast<std::size_t>(c)] = 1;
      hits += statistic() >= threshold;
      ++draws;
      Index i = m - 1;
      while (i >= 0 && chosen[static_cast<std::size_t>(i)] == n - m + i) --i;
      if (i < 0) break;
      ++chosen[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < m; ++j)
        chosen[static_cast<std::size_t>(j)] = chosen[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    Rng rng(options.seed);
    std::vector<Index> order(static_cast<std::size_t>(m + f));
    for (std::size_t it = 0; it < options.iterations; ++it) {
      std::iota(order.begin(), order.end(), Index{0});
      for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
      std::fill(in_male.begin(), in_male.end(), 0);
      for (Index j = 0; j < m; ++j) in_male[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
      hits += statistic() >= threshold;
      ++draws;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

std::vector<WeatResult> bias_table(std::span<const WordSet> targets, const AttributePair& attrs,
                                   std::span<const EmbeddingMatrix> strata,
                                   const BiasTableOptions& options) {
  if (targets.empty() || strata.empty()) throw DataError("bias_table needs targets and strata");
  std::vector<WeatResult> out;
  out.reserve(targets.size() * strata.size());
  for (const auto& target : targets) {
    for (const auto& emb : strata) {
      WeatResult r;
      r.target_name = target.name();
      r.stratum_label = emb.stratum_label;
      auto coverage = resolve_wordset(target, emb);
      r.n_present = coverage.present.size();
      r.missing = std::move(coverage.missing);
      try {
        const ResolvedAttributes resolved(attrs, emb);
        if (r.n_present == 0)
          throw DataError("no word of target set '" + target.name() + "' is in the vocabulary");
        const auto scores = scores_of(target.words(), resolved, emb);
        r.sum_score = sum_of(scores);
        r.effect_size = effect_size_of(scores);
        if (options.with_p_value)
          r.p_value = permutation_pvalue(target, attrs, emb, options.permutation);
      } catch (const Error& e) {
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<WordSet> builtin_targets() {
  return {
      WordSet("Pleasant", {"joy", "wonderful", "love", "peace", "happy"}),
      WordSet("Unpleasant", {"terrible", "hatred", "nasty", "kill", "evil"}),
      WordSet("Appearance", {"thin", "gorgeous", "fat", "pretty", "beautiful", "handsome"}),
      WordSet("Intelligence", {"intelligent", "genius", "smart", "brilliant", "clever"}),
      WordSet("Strength", {"bold", "leader", "strong", "dominant", "power"}),
      WordSet("Weakness", {"loser", "failure", "weak", "surrender", "follow"}),
  };
}

AttributePair builtin_attributes() {
  return AttributePair(WordSet("Male", {"boy", "him", "father", "boyfriend", "dad", "he", "man"}),
                       WordSet("Female", {"girl", "her", "lady", "girlfriend", "mother", "she", "woman"}));
}

WordSetFile load_wordsets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read word-set file " + path.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError(path.string() + ": expected an object of word lists");

  WordSetFile out;
  std::optional<WordSet> male, female;
  for (const auto& [name, list] : doc.items()) {
    if (!list.is_array()) throw DataError(path.string() + ": '" + name + "' is not a list");
    std::vector<std::string> words;
    for (const auto& w : list) {
      if (!w.is_string()) throw DataError(path.string() + ": '" + name + "' has a non-string entry");
      auto word = w.get<std::string>();
      if (lowercase(word) != word)
        throw DataError(path.string() + ": word '" + word + "' in '" + name + "' is not lowercase");
      words.push_back(std::move(word));
    }
    WordSet set(name, std::move(words));
    const auto key = lowercase(name);
    if (key == "male") male = std::move(set);
    else if (key == "female") female = std::move(set);
    else out.targets.push_back(std::move(set));
  }
  if (male.has_value() != female.has_value())
    throw DataError(path.string() + ": 'male' and 'female' must be given together");
  if (male) out.attributes = AttributePair(std::move(*male), std::move(*female));
  return out;
}

void save_results_json(std::span<const WeatResult> results, const std::filesystem::path& path) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json obj;
    obj["target_set"] = r.target_name;
    obj["stratum"] = r.stratum_label;
    obj["n_present"] = r.n_present;
    obj["missing"] = r.missing;
    obj["sum_score"] = optional_number(r.sum_score);
    obj["effect_size"] = optional_number(r.effect_size);
    obj["p_value"] = optional_number(r.p_value);
    obj["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(obj));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << arr.dump(2) << '\n';
}

std::vector<WeatResult> load_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  std::vector<WeatResult> out;
  try {
    for (const auto& obj : arr) {
      WeatResult r;
      r.target_name = obj.at("target_set").get<std::string>();
      r.stratum_label = obj.at("stratum").get<std::string>();
      r.n_present = obj.at("n_present").get<std::size_t>();
      r.missing = obj.at("missing").get<std::vector<std::string>>();
      r.sum_score = read_optional_number(obj, "sum_score");
      r.effect_size = read_optional_number(obj, "effect_size");
      r.p_value = read_optional_number(obj, "p_value");
      if (auto it = obj.find("error"); it != obj.end() && !it->is_null()) r.error = it->get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed result: " + e.what());
  }
  return out;
}

}  // namespace biasbeam
