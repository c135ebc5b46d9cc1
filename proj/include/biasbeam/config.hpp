// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "biasbeam/corpus.hpp"
#include "biasbeam/embed.hpp"
#include "biasbeam/topics.hpp"

namespace biasbeam {

/// Everything one reproducible run needs. Loaded from an INI/TOML-style
/// file with [sections] and `key = value` lines; relative paths resolve
/// against the config file's directory.
struct RunConfig {
  struct CorpusSection {
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::Csv;
    std::string language = "en";
    GenreOverrides genre_overrides;
  };
  struct SamplingSection {
    std::size_t cap = 20000;
    std::uint64_t seed = 42;
  };
  struct TokenizerSection {
    std::optional<std::filesystem::path> stopwords;
  };
  struct EmbeddingSection {
    TrainParams params;
    /// Topic-within-genre strata below this many documents are refused.
    std::size_t min_topic_docs = 500;
    bool topic_strata = true;
    bool sample_only = false;
  };
  struct TopicsSection {
    TopicFitParams fit;
    /// External document vectors; unset means averaged word vectors.
    std::optional<std::filesystem::path> doc_vectors;
  };
  struct WeatSection {
    std::optional<std::filesystem::path> wordsets;
    std::size_t permutations = 0;
    std::uint64_t seed = 7;
  };

  CorpusSection corpus;
  SamplingSection sampling;
  TokenizerSection tokenizer;
  EmbeddingSection embedding;
  TopicsSection topics;
  WeatSection weat;
  std::filesystem::path out_dir = "out";

  /// FNV-1a of the config file bytes, hex.
  std::string hash;

  /// Seeds every stage from one value.
  void override_seed(std::uint64_t seed);
  std::uint64_t primary_seed() const { return sampling.seed; }

  /// Effective configuration, including command-line overrides.
  nlohmann::ordered_json to_json() const;
};

/// Throws UsageError for a missing file, unknown section/key, or a value
/// that fails validation.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace biasbeam
