// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "biasbeam/embed.hpp"
#include "biasbeam/text.hpp"
#include "oracles.hpp"

namespace test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> serial{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biasbeam-test-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Embedding whose input rows are exactly `rows`, one per word.
inline biasbeam::EmbeddingMatrix embedding_of(const std::vector<std::string>& words, const oracle::Rows& rows) {
  biasbeam::EmbeddingMatrix emb;
  emb.vocab = biasbeam::Vocabulary(words, std::vector<std::uint64_t>(words.size(), 1), 1);
  const auto dim = static_cast<biasbeam::Index>(rows.empty() ? 0 : rows[0].size());
  emb.input.resize(static_cast<biasbeam::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (biasbeam::Index j = 0; j < dim; ++j) emb.input(static_cast<biasbeam::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  emb.output = biasbeam::Matrix::Zero(emb.input.rows(), dim);
  emb.stratum_label = "fixture";
  return emb;
}

/// Random SC-WEAT fixture: words t*, m*, f* with Gaussian vectors.
struct WeatFixture {
  std::vector<std::string> targets, male, female;
  oracle::Rows target_rows, male_rows, female_rows;
  biasbeam::EmbeddingMatrix emb;
};

inline WeatFixture weat_fixture(std::mt19937_64& gen, std::size_t dim, std::size_t nt, std::size_t nm,
                                std::size_t nf) {
  WeatFixture fx;
  fx.target_rows = oracle::random_rows(gen, nt, dim);
  fx.male_rows = oracle::random_rows(gen, nm, dim);
  fx.female_rows = oracle::random_rows(gen, nf, dim);
  std::vector<std::string> words;
  oracle::Rows rows;
  auto add = [&](const char* prefix, std::size_t n, const oracle::Rows& r, std::vector<std::string>& names) {
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back(prefix + std::to_string(i));
      words.push_back(names.back());
      rows.push_back(r[i]);
    }
  };
  add("t", nt, fx.target_rows, fx.targets);
  add("m", nm, fx.male_rows, fx.male);
  add("f", nf, fx.female_rows, fx.female);
  fx.emb = embedding_of(words, rows);
  return fx;
}

/// Two vocabularies that never share a document: a0..a49 and b0..b49.
inline std::vector<biasbeam::TokenizedDoc> two_block_corpus(std::uint64_t seed, std::size_t docs_per_block = 100,
                                                            std::size_t words = 50, std::size_t doc_len = 20) {
  std::mt19937_64 gen(seed);
  std::vector<biasbeam::TokenizedDoc> docs;
  for (std::size_t d = 0; d < 2 * docs_per_block; ++d) {
    const char block = d % 2 == 0 ? 'a' : 'b';
    biasbeam::TokenizedDoc doc{"d" + std::to_string(d), {}};
    for (std::size_t i = 0; i < doc_len; ++i) doc.tokens.push_back(block + std::to_string(gen() % words));
    docs.push_back(std::move(doc));
  }
  return docs;
}

/// Mean pairwise input-vector cosine within blocks and across blocks.
inline std::pair<double, double> block_cosines(const biasbeam::EmbeddingMatrix& emb) {
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < emb.vocab.size(); ++i)
    for (std::size_t j = i + 1; j < emb.vocab.size(); ++j) {
      const auto a = emb.input.row(static_cast<biasbeam::Index>(i));
      const auto b = emb.input.row(static_cast<biasbeam::Index>(j));
      const double c = oracle::cos(oracle::Vec(a.data(), a.data() + a.size()), oracle::Vec(b.data(), b.data() + b.size()));
      if (emb.vocab.token(i)[0] == emb.vocab.token(j)[0]) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  return {intra / static_cast<double>(n_intra), inter / static_cast<double>(n_inter)};
}

inline biasbeam::TrainParams two_block_params() {
  biasbeam::TrainParams p;
  p.dim = 20;
  p.window = 3;
  p.negatives = 5;
  p.epochs = 5;
  p.min_count = 1;
  p.subsample_threshold = 1.0;
  p.seed = 2024;
  p.workers = 1;
  return p;
}

}  // namespace test
