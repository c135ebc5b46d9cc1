// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/embed.hpp"

#include <atomic>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "io_util.hpp"

namespace biasbeam {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Gradient step on one (center, context, negatives) sample. All dot
// products are read before any parameter is written, so the update is the
// exact gradient of the sample loss scaled by -lr.
double sgns_update(Matrix& input, Matrix& output, Index center, Index context,
                   std::span<const Index> negatives, double lr, std::vector<double>& g,
                   Vector& grad_center) {
  const std::size_t n = negatives.size() + 1;
  g.resize(n);
  auto target = [&](std::size_t t) { return t == 0 ? context : negatives[t - 1]; };

  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double f = output.row(target(t)).dot(input.row(center));
    if (t == 0) {
      g[t] = sigmoid(f) - 1.0;
      loss -= log_sigmoid(f);
    } else {
      g[t] = sigmoid(f);
      loss -= log_sigmoid(-f);
    }
  }
  grad_center.setZero(input.cols());
  for (std::size_t t = 0; t < n; ++t) grad_center += g[t] * output.row(target(t)).transpose();
  for (std::size_t t = 0; t < n; ++t) output.row(target(t)) -= (lr * g[t]) * input.row(center);
  input.row(center) -= lr * grad_center.transpose();
  return loss;
}

void check_sample(const Matrix& input, const Matrix& output, const SgnsSample& s) {
  auto in_range = [&](Index i) { return i >= 0 && i < input.rows() && i < output.rows(); };
  if (input.rows() != output.rows() || input.cols() != output.cols())
    throw DataError("sgns: input and output matrices differ in shape");
  if (!in_range(s.center) || !in_range(s.context))
    throw DataError("sgns: sample index out of range");
  for (Index n : s.negatives)
    if (!in_range(n)) throw DataError("sgns: negative index out of range");
}

constexpr char kEmbedMagic[8] = {'B', 'B', 'E', 'M', 'B', 'E', 'D', '\0'};
constexpr std::uint32_t kEmbedVersion = 1;

}  // namespace

using io::format_double;
using io::get;
using io::get_string;
using io::put;
using io::put_string;

void TrainParams::validate() const {
  if (dim < 2) throw UsageError("embedding dim must be at least 2");
  if (window < 1) throw UsageError("embedding window must be at least 1");
  if (negatives < 1) throw UsageError("embedding negatives must be at least 1");
  if (!(initial_lr > 0)) throw UsageError("embedding initial_lr must be positive");
  if (!(subsample_threshold > 0)) throw UsageError("embedding subsample_threshold must be positive");
  if (min_count < 1) throw UsageError("embedding min_count must be at least 1");
  if (workers < 1) throw UsageError("workers must be at least 1");
}

NegativeSamplingTable::NegativeSamplingTable(const Vocabulary& vocab, double power) {
  if (vocab.empty()) throw DataError("negative sampling table: empty vocabulary");
  const bool counts_known = vocab.total_count() > 0;
  cdf_.resize(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    total += counts_known ? std::pow(static_cast<double>(vocab.count(i)), power) : 1.0;
    cdf_[i] = total;
  }
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::size_t NegativeSamplingTable::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double NegativeSamplingTable::probability(std::size_t index) const {
  return index == 0 ? cdf_[0] : cdf_[index] - cdf_[index - 1];
}

double sgns_loss(const Matrix& input, const Matrix& output, const SgnsSample& sample) {
  check_sample(input, output, sample);
  const auto v = input.row(sample.center);
  double loss = -log_sigmoid(output.row(sample.context).dot(v));
  for (Index n : sample.negatives) loss -= log_sigmoid(-output.row(n).dot(v));
  return loss;
}

SgnsGradient sgns_gradient(const Matrix& input, const Matrix& output, const SgnsSample& sample) {
  check_sample(input, output, sample);
  SgnsGradient grad;
  const auto v = input.row(sample.center);
  grad.center = Vector::Zero(input.cols());
  auto accumulate = [&](Index row, double g) {
    grad.center += g * output.row(row).transpose();
    for (auto& [index, vec] : grad.output) {
      if (index == row) {
        vec += g * v.transpose();
        return;
      }
    }
    grad.output.emplace_back(row, g * v.transpose());
  };
  const double fc = output.row(sample.context).dot(v);
  grad.loss = -log_sigmoid(fc);
  accumulate(sample.context, sigmoid(fc) - 1.0);
  for (Index n : sample.negatives) {
    const double fn = output.row(n).dot(v);
    grad.loss -= log_sigmoid(-fn);
    accumulate(n, sigmoid(fn));
  }
  return grad;
}

double apply_sgns_step(Matrix& input, Matrix& output, const SgnsSample& sample, double lr) {
  check_sample(input, output, sample);
  std::vector<double> g;
  Vector grad_center;
  return sgns_update(input, output, sample.center, sample.context, sample.negatives, lr, g,
                     grad_center);
}

EmbeddingMatrix initialize_embedding(Vocabulary vocab, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw UsageError("embedding dim must be at least 2");
  EmbeddingMatrix emb;
  const auto rows = static_cast<Index>(vocab.size());
  const auto cols = static_cast<Index>(dim);
  emb.vocab = std::move(vocab);
  emb.input.resize(rows, cols);
  emb.output = Matrix::Zero(rows, cols);
  Rng rng(seed);
  const double half = 0.5 / static_cast<double>(dim);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) emb.input(i, j) = rng.uniform(-half, half);
  return emb;
}

TrainResult train_word2vec(std::span<const TokenizedDoc> docs, const TrainParams& params,
                           std::string stratum_label) {
  params.validate();
  return train_word2vec(docs, build_vocab(docs, params.min_count), params,
                        std::move(stratum_label));
}

TrainResult train_word2vec(std::span<const TokenizedDoc> docs, Vocabulary vocab,
                           const TrainParams& params, std::string stratum_label) {
  params.validate();
  if (vocab.empty()) throw DataError("train_word2vec: empty vocabulary");

  std::vector<std::vector<Index>> sentences;
  sentences.reserve(docs.size());
  std::uint64_t total_words = 0;
  for (const auto& doc : docs) {
    std::vector<Index> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& token : doc.tokens)
      if (auto i = vocab.find(token)) ids.push_back(static_cast<Index>(*i));
    total_words += ids.size();
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }
  if (total_words == 0) throw DataError("train_word2vec: no in-vocabulary tokens");

  const NegativeSamplingTable table(vocab);
  std::vector<double> keep(vocab.size(), 1.0);
  if (const auto vocab_total = vocab.total_count(); vocab_total > 0) {
    const double t = params.subsample_threshold;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double f = static_cast<double>(vocab.count(i)) / static_cast<double>(vocab_total);
      if (f > 0) keep[i] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
    }
  }

  TrainResult result;
  result.embedding = initialize_embedding(std::move(vocab), params.dim, params.seed);
  result.embedding.stratum_label = std::move(stratum_label);
  Matrix& input = result.embedding.input;
  Matrix& output = result.embedding.output;

  const double schedule_total =
      static_cast<double>(params.epochs) * static_cast<double>(total_words) + 1.0;
  const std::size_t workers = std::min(params.workers, sentences.size());
  std::atomic<std::uint64_t> processed{0};

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::vector<double> losses(workers, 0.0);
    std::vector<std::uint64_t> pairs(workers, 0);

    auto run = [&](std::size_t w) {
      Rng rng(mix_seed(params.seed, (epoch + 1) * 4096 + w));
      std::vector<Index> kept;
      std::vector<Index> negatives;
      std::vector<double> g;
      Vector grad_center;
      const std::size_t begin = sentences.size() * w / workers;
      const std::size_t end = sentences.size() * (w + 1) / workers;
      for (std::size_t s = begin; s < end; ++s) {
        const auto& sentence = sentences[s];
        const double progress = static_cast<double>(processed.load(std::memory_order_relaxed));
        const double lr = params.initial_lr * std::max(1.0 - progress / schedule_total, 1e-4);
        processed.fetch_add(sentence.size(), std::memory_order_relaxed);

        kept.clear();
        for (Index id : sentence)
          if (keep[static_cast<std::size_t>(id)] >= 1.0 ||
              rng.uniform() < keep[static_cast<std::size_t>(id)])
            kept.push_back(id);

        const auto n = static_cast<std::ptrdiff_t>(kept.size());
        for (std::ptrdiff_t i = 0; i < n; ++i) {
          const auto reach = static_cast<std::ptrdiff_t>(params.window - rng.below(params.window));
          for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - reach);
               j <= std::min(n - 1, i + reach); ++j) {
            if (j == i) continue;
            const Index context = kept[static_cast<std::size_t>(j)];
            negatives.clear();
            for (std::size_t k = 0; k < params.negatives; ++k) {
              const auto noise = static_cast<Index>(table.sample(rng));
              if (noise != context) negatives.push_back(noise);
            }
            losses[w] += sgns_update(input, output, kept[static_cast<std::size_t>(i)], context,
                                     negatives, lr, g, grad_center);
            ++pairs[w];
          }
        }
      }
    };

    if (workers == 1) {
      run(0);
    } else {
      // Lock-free asynchronous updates to the shared matrices.
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    }

    double loss_sum = 0.0;
    std::uint64_t pair_sum = 0;
    for (std::size_t w = 0; w < workers; ++w) {
      loss_sum += losses[w];
      pair_sum += pairs[w];
    }
    const double mean_loss = pair_sum ? loss_sum / static_cast<double>(pair_sum) : 0.0;
    if (!std::isfinite(mean_loss) || !input.allFinite() || !output.allFinite())
      throw Divergence("training diverged in epoch " + std::to_string(epoch + 1) +
                       " (non-finite loss)");
    result.epoch_losses.push_back(mean_loss);
    spdlog::debug("word2vec[{}] epoch {}: mean loss {:.6f} over {} pairs",
                  result.embedding.stratum_label, epoch + 1, mean_loss, pair_sum);
  }
  return result;
}

Vector doc_embed(const TokenizedDoc& doc, const EmbeddingMatrix& emb) {
  Vector sum = Vector::Zero(emb.dim());
  std::size_t n = 0;
  for (const auto& token : doc.tokens) {
    if (auto i = emb.vocab.find(token)) {
      sum += emb.input.row(static_cast<Index>(*i)).transpose();
      ++n;
    }
  }
  if (n == 0) throw DataError("doc_embed: no in-vocabulary tokens in document " + doc.doc_id);
  const Vector mean = sum / static_cast<double>(n);
  const double norm = mean.norm();
  if (norm == 0) throw NumericError("doc_embed: zero mean vector for document " + doc.doc_id);
  return mean / norm;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(std::string_view word,
                                                              const EmbeddingMatrix& emb,
                                                              std::size_t k) {
  const auto query = emb.vocab.find(word);
  if (!query) throw DataError("nearest_neighbors: word not in vocabulary: " + std::string(word));
  if (k == 0 || k >= emb.vocab.size())
    throw DataError("nearest_neighbors: k must be in [1, |V|)");
  const auto q = emb.input.row(static_cast<Index>(*query));

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(emb.vocab.size());
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) {
    if (i == *query) continue;
    const auto row = emb.input.row(static_cast<Index>(i));
    if (row.squaredNorm() == 0) continue;
    scored.emplace_back(cosine(q, row), i);
  }
  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < take; ++i)
    out.emplace_back(emb.vocab.token(scored[i].second), scored[i].first);
  return out;
}

void save_text(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << emb.input.rows() << ' ' << emb.input.cols() << '\n';
  for (Index i = 0; i < emb.input.rows(); ++i) {
    out << emb.vocab.token(static_cast<std::size_t>(i));
    for (Index j = 0; j < emb.input.cols(); ++j) out << ' ' << format_double(emb.input(i, j));
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

EmbeddingMatrix load_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  long long rows = 0, cols = 0;
  {
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> rows >> cols) || rows <= 0 || cols <= 0)
      throw DataError(path.string() + ": bad header, expected \"<vocab_size> <dim>\"");
  }
  std::vector<std::string> tokens;
  Matrix input(rows, cols);
  std::string line;
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": fewer rows than declared");
    const char* p = line.data();
    const char* end = p + line.size();
    const char* space = std::find(p, end, ' ');
    tokens.emplace_back(p, space);
    p = space;
    for (Index j = 0; j < cols; ++j) {
      while (p < end && *p == ' ') ++p;
      double v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw DataError(path.string() + ": bad number on row " + std::to_string(i + 2));
      input(i, j) = v;
      p = next;
    }
  }
  EmbeddingMatrix emb;
  emb.vocab = Vocabulary(std::move(tokens), std::vector<std::uint64_t>(static_cast<std::size_t>(rows), 0), 0);
  emb.input = std::move(input);
  emb.output = Matrix::Zero(rows, cols);
  emb.stratum_label = path.stem().string();
  return emb;
}

void save_binary(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kEmbedMagic, sizeof kEmbedMagic);
  put<std::uint32_t>(out, kEmbedVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, emb.vocab.size());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(emb.dim()));
  put<std::uint64_t>(out, emb.vocab.min_count());
  put_string(out, emb.stratum_label);
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) {
    put_string(out, emb.vocab.token(i));
    put<std::uint64_t>(out, emb.vocab.count(i));
  }
  const auto bytes = static_cast<std::streamsize>(emb.input.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(emb.input.data()), bytes);
  out.write(reinterpret_cast<const char*>(emb.output.data()), bytes);
  if (!out) throw DataError("failed writing " + path.string());
}

EmbeddingMatrix load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kEmbedMagic, sizeof magic) != 0)
    throw DataError(path.string() + ": not a biasbeam embedding file");
  if (const auto version = get<std::uint32_t>(in); version != kEmbedVersion)
    throw DataError(path.string() + ": unsupported version " + std::to_string(version));
  get<std::uint32_t>(in);
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  const auto min_count = get<std::uint64_t>(in);
  EmbeddingMatrix emb;
  emb.stratum_label = get_string(in);
  std::vector<std::string> tokens(rows);
  std::vector<std::uint64_t> counts(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    tokens[i] = get_string(in);
    counts[i] = get<std::uint64_t>(in);
  }
  emb.vocab = Vocabulary(std::move(tokens), std::move(counts), min_count);
  emb.input.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  emb.output.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  const auto bytes = static_cast<std::streamsize>(rows * cols * sizeof(double));
  in.read(reinterpret_cast<char*>(emb.input.data()), bytes);
  in.read(reinterpret_cast<char*>(emb.output.data()), bytes);
  if (!in) throw DataError(path.string() + ": truncated matrix data");
  return emb;
}

}  // namespace biasbeam
