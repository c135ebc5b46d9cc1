// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "biasbeam/error.hpp"

namespace biasbeam {
namespace {

namespace pt = boost::property_tree;

// TOML-style values: a double-quoted string, or a bare token optionally
// followed by a "# comment".
std::string unquote(std::string value) {
  if (!value.empty() && value.front() == '"') {
    const auto close = value.find('"', 1);
    if (close == std::string::npos) throw UsageError("unterminated string value: " + value);
    return value.substr(1, close - 1);
  }
  if (const auto hash = value.find(" #"); hash != std::string::npos) value.resize(hash);
  while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
  return value;
}

template <typename T>
T parse_number(const std::string& section, const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw UsageError("config [" + section + "] " + key + ": invalid number '" + text + "'");
  return v;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw UsageError("config [" + section + "] " + key + ": expected true or false, got '" + text + "'");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

using Setter = std::function<void(const std::string& value)>;

}  // namespace

void RunConfig::override_seed(std::uint64_t seed) {
  sampling.seed = seed;
  embedding.params.seed = seed;
  topics.fit.cluster.kmeans.seed = seed;
  weat.seed = seed;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("config file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  pt::ptree tree;
  try {
    std::istringstream parse_in(text);
    pt::ini_parser::read_ini(parse_in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("config " + path.string() + ": " + e.message() + " on line " +
                     std::to_string(e.line()));
  }

  RunConfig cfg;
  cfg.hash = fnv1a_hex(text);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base / p;
  };
  bool have_corpus_path = false;

  // section -> key -> setter
  std::map<std::string, std::map<std::string, std::function<void(const std::string&, const std::string&)>>>
      schema;
  auto& corpus = schema["corpus"];
  corpus["path"] = [&](auto&, const std::string& v) {
    cfg.corpus.path = resolve(v);
    have_corpus_path = true;
  };
  corpus["format"] = [&](auto&, const std::string& v) {
    auto f = parse_corpus_format(v);
    if (!f) throw UsageError("config [corpus] format: expected csv or jsonl, got '" + v + "'");
    cfg.corpus.format = *f;
  };
  corpus["language"] = [&](auto&, const std::string& v) { cfg.corpus.language = v; };

  auto& sampling = schema["sampling"];
  sampling["cap"] = [&](auto& k, const std::string& v) {
    cfg.sampling.cap = parse_number<std::size_t>("sampling", k, v);
  };
  sampling["seed"] = [&](auto& k, const std::string& v) {
    cfg.sampling.seed = parse_number<std::uint64_t>("sampling", k, v);
  };

  schema["tokenizer"]["stopwords"] = [&](auto&, const std::string& v) {
    cfg.tokenizer.stopwords = resolve(v);
  };

  auto& emb = schema["embedding"];
  auto& tp = cfg.embedding.params;
  emb["dim"] = [&](auto& k, const std::string& v) { tp.dim = parse_number<std::size_t>("embedding", k, v); };
  emb["window"] = [&](auto& k, const std::string& v) { tp.window = parse_number<std::size_t>("embedding", k, v); };
  emb["negatives"] = [&](auto& k, const std::string& v) { tp.negatives = parse_number<std::size_t>("embedding", k, v); };
  emb["epochs"] = [&](auto& k, const std::string& v) { tp.epochs = parse_number<std::size_t>("embedding", k, v); };
  emb["initial_lr"] = [&](auto& k, const std::string& v) { tp.initial_lr = parse_number<double>("embedding", k, v); };
  emb["subsample_threshold"] = [&](auto& k, const std::string& v) {
    tp.subsample_threshold = parse_number<double>("embedding", k, v);
  };
  emb["min_count"] = [&](auto& k, const std::string& v) { tp.min_count = parse_number<std::uint64_t>("embedding", k, v); };
  emb["seed"] = [&](auto& k, const std::string& v) { tp.seed = parse_number<std::uint64_t>("embedding", k, v); };
  emb["workers"] = [&](auto& k, const std::string& v) { tp.workers = parse_number<std::size_t>("embedding", k, v); };
  emb["min_topic_docs"] = [&](auto& k, const std::string& v) {
    cfg.embedding.min_topic_docs = parse_number<std::size_t>("embedding", k, v);
  };
  emb["topic_strata"] = [&](auto& k, const std::string& v) { cfg.embedding.topic_strata = parse_bool("embedding", k, v); };
  emb["sample_only"] = [&](auto& k, const std::string& v) { cfg.embedding.sample_only = parse_bool("embedding", k, v); };

  auto& topics = schema["topics"];
  auto& fit = cfg.topics.fit;
  topics["target_dim"] = [&](auto& k, const std::string& v) { fit.target_dim = parse_number<std::size_t>("topics", k, v); };
  topics["label_terms"] = [&](auto& k, const std::string& v) { fit.label_terms = parse_number<std::size_t>("topics", k, v); };
  topics["strategy"] = [&](auto&, const std::string& v) {
    if (v == "dbscan") fit.cluster.strategy = ClusterStrategy::Dbscan;
    else if (v == "kmeans") fit.cluster.strategy = ClusterStrategy::KMeans;
    else throw UsageError("config [topics] strategy: expected dbscan or kmeans, got '" + v + "'");
  };
  topics["eps"] = [&](auto& k, const std::string& v) { fit.cluster.dbscan.eps = parse_number<double>("topics", k, v); };
  topics["min_pts"] = [&](auto& k, const std::string& v) { fit.cluster.dbscan.min_pts = parse_number<std::size_t>("topics", k, v); };
  topics["k"] = [&](auto& k, const std::string& v) { fit.cluster.kmeans.k = parse_number<std::size_t>("topics", k, v); };
  topics["max_iters"] = [&](auto& k, const std::string& v) { fit.cluster.kmeans.max_iters = parse_number<std::size_t>("topics", k, v); };
  topics["seed"] = [&](auto& k, const std::string& v) { fit.cluster.kmeans.seed = parse_number<std::uint64_t>("topics", k, v); };
  topics["doc_vectors"] = [&](auto&, const std::string& v) { cfg.topics.doc_vectors = resolve(v); };

  auto& weat = schema["weat"];
  weat["wordsets"] = [&](auto&, const std::string& v) { cfg.weat.wordsets = resolve(v); };
  weat["permutations"] = [&](auto& k, const std::string& v) { cfg.weat.permutations = parse_number<std::size_t>("weat", k, v); };
  weat["seed"] = [&](auto& k, const std::string& v) { cfg.weat.seed = parse_number<std::uint64_t>("weat", k, v); };

  schema["output"]["dir"] = [&](auto&, const std::string& v) { cfg.out_dir = resolve(v); };

  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config: key '" + section + "' outside any section");
    if (section == "genres") {
      for (const auto& [raw, value] : body) {
        const auto name = unquote(value.data());
        auto genre = parse_genre_name(name);
        if (!genre) throw UsageError("config [genres] " + raw + ": unknown genre '" + name + "'");
        std::string key = unquote(raw);
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        cfg.corpus.genre_overrides[key] = *genre;
      }
      continue;
    }
    auto known = schema.find(section);
    if (known == schema.end()) throw UsageError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      auto setter = known->second.find(key);
      if (setter == known->second.end())
        throw UsageError("config: unknown key '" + key + "' in [" + section + "]");
      setter->second(key, unquote(value.data()));
    }
  }

  if (!have_corpus_path) throw UsageError("config: [corpus] path is required");
  if (cfg.sampling.cap == 0) throw UsageError("config [sampling] cap must be at least 1");
  if (fit.target_dim == 0) throw UsageError("config [topics] target_dim must be at least 1");
  if (fit.label_terms == 0) throw UsageError("config [topics] label_terms must be at least 1");
  if (fit.cluster.dbscan.eps && !(*fit.cluster.dbscan.eps > 0))
    throw UsageError("config [topics] eps must be positive");
  if (fit.cluster.dbscan.min_pts == 0) throw UsageError("config [topics] min_pts must be at least 1");
  if (fit.cluster.kmeans.k == 0) throw UsageError("config [topics] k must be at least 1");
  tp.validate();
  return cfg;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["corpus"]["path"] = corpus.path.string();
  j["corpus"]["format"] = corpus.format == CorpusFormat::Csv ? "csv" : "jsonl";
  j["corpus"]["language"] = corpus.language;
  nlohmann::ordered_json genres = nlohmann::ordered_json::object();
  for (const auto& [raw, g] : corpus.genre_overrides) genres[raw] = genre_name(g);
  j["genres"] = genres;
  j["sampling"]["cap"] = sampling.cap;
  j["sampling"]["seed"] = sampling.seed;
  j["tokenizer"]["stopwords"] = tokenizer.stopwords ? tokenizer.stopwords->string() : "";
  const auto& p = embedding.params;
  j["embedding"] = {{"dim", p.dim},
                    {"window", p.window},
                    {"negatives", p.negatives},
                    {"epochs", p.epochs},
                    {"initial_lr", p.initial_lr},
                    {"subsample_threshold", p.subsample_threshold},
                    {"min_count", p.min_count},
                    {"seed", p.seed},
                    {"workers", p.workers},
                    {"min_topic_docs", embedding.min_topic_docs},
                    {"topic_strata", embedding.topic_strata},
                    {"sample_only", embedding.sample_only}};
  const auto& c = topics.fit.cluster;
  j["topics"] = {{"target_dim", topics.fit.target_dim},
                 {"label_terms", topics.fit.label_terms},
                 {"strategy", c.strategy == ClusterStrategy::Dbscan ? "dbscan" : "kmeans"},
                 {"eps", c.dbscan.eps ? nlohmann::ordered_json(*c.dbscan.eps) : nlohmann::ordered_json("auto")},
                 {"min_pts", c.dbscan.min_pts},
                 {"k", c.kmeans.k},
                 {"max_iters", c.kmeans.max_iters},
                 {"seed", c.kmeans.seed},
                 {"doc_vectors", topics.doc_vectors ? topics.doc_vectors->string() : ""}};
  j["weat"] = {{"wordsets", weat.wordsets ? weat.wordsets->string() : ""},
               {"permutations", weat.permutations},
               {"seed", weat.seed}};
  j["output"]["dir"] = out_dir.string();
  return j;
}

}  // namespace biasbeam
