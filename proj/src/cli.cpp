// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <unordered_map>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "biasbeam/config.hpp"
#include "biasbeam/corpus.hpp"
#include "biasbeam/embed.hpp"
#include "biasbeam/error.hpp"
#include "biasbeam/random.hpp"
#include "biasbeam/report.hpp"
#include "biasbeam/text.hpp"
#include "biasbeam/topics.hpp"
#include "biasbeam/weat.hpp"

namespace biasbeam {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Where each stage reads and writes, relative to the output directory.
struct Layout {
  fs::path root;
  fs::path corpus() const { return root / "corpus.jsonl"; }
  fs::path ingest_report() const { return root / "ingest_report.json"; }
  fs::path sample() const { return root / "sample.jsonl"; }
  fs::path docvec_embedding() const { return root / "docvec_embedding.bin"; }
  fs::path topic_model() const { return root / "topic_model"; }
  fs::path assignments() const { return root / "topic_assignments.csv"; }
  fs::path embeddings() const { return root / "embeddings"; }
  fs::path strata() const { return embeddings() / "strata.json"; }
  fs::path bias_results() const { return root / "bias_results.json"; }
  fs::path report() const { return root / "report"; }
};

struct Options {
  fs::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<fs::path> out;
  std::optional<fs::path> report;
  bool sample_only = false;
  std::optional<std::string> stratum;
};

struct Context {
  RunConfig config;
  Layout layout;
  Options options;
  std::string started_at;
};

void require_file(const fs::path& path, std::string_view produced_by) {
  if (!fs::exists(path))
    throw UsageError(path.string() + " not found; run `" + std::string(produced_by) + "` first");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Corpus load_jsonl_corpus(const fs::path& path, std::string_view produced_by) {
  require_file(path, produced_by);
  return ingest(path, CorpusFormat::Jsonl).corpus;
}

std::vector<TokenizedDoc> tokenize_corpus(const Corpus& corpus) {
  std::vector<TokenizedDoc> docs;
  docs.reserve(corpus.size());
  for (const auto& record : corpus.records()) docs.push_back(tokenize_doc(record.id, record.lyrics));
  return docs;
}

StopwordSet stopwords_for(const RunConfig& config) {
  return config.tokenizer.stopwords ? load_stopwords(*config.tokenizer.stopwords) : default_stopwords();
}

/// Document vectors for the docs that have one; the rest are outliers.
DocVectorSet vectors_for(const Context& ctx, std::span<const TokenizedDoc> docs,
                         const EmbeddingMatrix* native) {
  DocVectorSet out;
  std::vector<Vector> rows;
  if (ctx.config.topics.doc_vectors) {
    const auto external = load_doc_vectors(*ctx.config.topics.doc_vectors);
    std::unordered_map<std::string, Index> index;
    for (std::size_t i = 0; i < external.size(); ++i) index.emplace(external.ids[i], static_cast<Index>(i));
    for (const auto& doc : docs) {
      auto it = index.find(doc.doc_id);
      if (it == index.end()) continue;
      out.ids.push_back(doc.doc_id);
      rows.push_back(external.vectors.row(it->second).transpose());
    }
    out.source = VectorSource::ExternalFile;
  } else {
    for (const auto& doc : docs) {
      bool any = false;
      for (const auto& token : doc.tokens) any = any || native->vocab.contains(token);
      if (!any) continue;
      out.ids.push_back(doc.doc_id);
      rows.push_back(doc_embed(doc, *native));
    }
    out.source = VectorSource::NativeAverage;
  }
  if (rows.empty()) throw DataError("no document has a vector");
  out.vectors.resize(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.vectors.row(static_cast<Index>(i)) = rows[i].transpose();
  if (out.size() < docs.size())
    spdlog::warn("{} of {} documents have no vector and are treated as outliers", docs.size() - out.size(),
                 docs.size());
  return out;
}

// ---- stages ----------------------------------------------------------------

Json stage_ingest(const Context& ctx) {
  IngestOptions options;
  options.genre_overrides = ctx.config.corpus.genre_overrides;
  options.keep_language = ctx.config.corpus.language;
  const auto result = ingest(ctx.config.corpus.path, ctx.config.corpus.format, options);
  fs::create_directories(ctx.layout.root);
  write_jsonl(result.corpus, ctx.layout.corpus());

  Json report;
  report["kept"] = result.report.kept;
  report["skipped"] = result.report.skipped;
  report["non_english"] = result.report.non_english;
  report["skip_reasons"] = result.report.skip_reasons;
  write_text(ctx.options.report.value_or(ctx.layout.ingest_report()), report.dump(2) + "\n");
  spdlog::info("ingest: kept {}, skipped {}, non-English {}", result.report.kept, result.report.skipped,
               result.report.non_english);

  Json summary{{"stage", "ingest"}};
  summary.update(report);
  return summary;
}

Json stage_sample(const Context& ctx) {
  const auto corpus = load_jsonl_corpus(ctx.layout.corpus(), "ingest");
  const auto sample = stratified_sample(corpus, ctx.config.sampling.cap, ctx.config.sampling.seed);
  write_jsonl(sample, ctx.layout.sample());
  Json sizes = Json::object();
  for (const auto& [genre, members] : sample.strata()) sizes[std::string(genre_name(genre))] = members.size();
  return {{"stage", "sample"}, {"documents", sample.size()}, {"strata", sizes}};
}

Json stage_topics_fit(const Context& ctx) {
  const auto sample = load_jsonl_corpus(ctx.layout.sample(), "sample");
  const auto docs = tokenize_corpus(sample);
  std::optional<EmbeddingMatrix> native;
  if (!ctx.config.topics.doc_vectors) {
    auto trained = train_word2vec(docs, ctx.config.embedding.params, "docvec");
    save_binary(trained.embedding, ctx.layout.docvec_embedding());
    native = std::move(trained.embedding);
  }
  const auto vectors = vectors_for(ctx, docs, native ? &*native : nullptr);
  const auto model = fit_topics(vectors, docs, stopwords_for(ctx.config), ctx.config.topics.fit);
  save_topic_model(model, ctx.layout.topic_model());
  return {{"stage", "topics-fit"},
          {"documents", vectors.size()},
          {"topics", model.topic_count()},
          {"outlier_share", model.assignments.outlier_share()}};
}

Json stage_topics_predict(const Context& ctx) {
  const auto corpus = load_jsonl_corpus(ctx.layout.corpus(), "ingest");
  require_file(ctx.layout.topic_model() / "projection.bin", "topics-fit");
  const auto model = load_topic_model(ctx.layout.topic_model());
  const auto docs = tokenize_corpus(corpus);
  std::optional<EmbeddingMatrix> native;
  if (!ctx.config.topics.doc_vectors) {
    require_file(ctx.layout.docvec_embedding(), "topics-fit");
    native = load_binary(ctx.layout.docvec_embedding());
  }
  const auto vectors = vectors_for(ctx, docs, native ? &*native : nullptr);
  const auto predicted = assign_topics(vectors, model);

  std::unordered_map<std::string, int> topic_of;
  for (std::size_t i = 0; i < predicted.size(); ++i) topic_of.emplace(predicted.doc_ids[i], predicted.topics[i]);
  Assignments all;
  for (const auto& record : corpus.records()) {
    auto it = topic_of.find(record.id);
    all.doc_ids.push_back(record.id);
    all.topics.push_back(it == topic_of.end() ? kOutlierTopic : it->second);
  }
  write_assignments(all, ctx.layout.assignments());
  return {{"stage", "topics-predict"}, {"documents", all.size()}, {"outlier_share", all.outlier_share()}};
}

struct StratumPlan {
  std::string label;
  std::string kind;
  Genre genre = Genre::Misc;
  std::optional<int> topic;
  std::vector<std::size_t> members;
};

std::string stratum_file_stem(const std::string& label) {
  std::string stem = label;
  for (char& c : stem)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return stem;
}

Json stage_train(const Context& ctx) {
  const auto& cfg = ctx.config;
  const bool sample_only = cfg.embedding.sample_only;
  const auto corpus = sample_only ? load_jsonl_corpus(ctx.layout.sample(), "sample")
                                  : load_jsonl_corpus(ctx.layout.corpus(), "ingest");

  std::vector<StratumPlan> plans;
  for (Genre genre : kAllGenres)
    plans.push_back({std::string(genre_name(genre)), "genre", genre, std::nullopt, corpus.stratum(genre)});
  if (cfg.embedding.topic_strata) {
    if (fs::exists(ctx.layout.assignments())) {
      const auto assignments = read_assignments(ctx.layout.assignments());
      std::unordered_map<std::string, int> topic_of;
      for (std::size_t i = 0; i < assignments.size(); ++i)
        topic_of.emplace(assignments.doc_ids[i], assignments.topics[i]);
      for (const auto& [genre, topic] : top_topic_per_genre(assignments, corpus)) {
        StratumPlan plan{std::string(genre_name(genre)) + "-topic" + std::to_string(topic), "topic", genre, topic,
                         {}};
        for (std::size_t i : corpus.stratum(genre)) {
          auto it = topic_of.find(corpus[i].id);
          if (it != topic_of.end() && it->second == topic) plan.members.push_back(i);
        }
        plans.push_back(std::move(plan));
      }
    } else {
      spdlog::warn("no topic assignments at {}; training genre strata only", ctx.layout.assignments().string());
    }
  }

  fs::create_directories(ctx.layout.embeddings());
  Json manifest = Json::array();
  std::size_t trained = 0;
  for (std::size_t s = 0; s < plans.size(); ++s) {
    const auto& plan = plans[s];
    Json entry{{"label", plan.label},
               {"kind", plan.kind},
               {"genre", std::string(genre_name(plan.genre))},
               {"topic", plan.topic ? Json(*plan.topic) : Json(nullptr)},
               {"documents", plan.members.size()}};
    std::optional<std::string> refusal;
    if (plan.members.empty()) {
      refusal = "stratum has no documents";
    } else if (plan.kind == "topic" && plan.members.size() < cfg.embedding.min_topic_docs) {
      refusal = "stratum has " + std::to_string(plan.members.size()) + " documents; minimum is " +
                std::to_string(cfg.embedding.min_topic_docs);
    }
    if (refusal) {
      spdlog::warn("stratum {} refused: {}", plan.label, *refusal);
      entry["status"] = "refused";
      entry["reason"] = *refusal;
      manifest.push_back(std::move(entry));
      continue;
    }

    std::vector<TokenizedDoc> docs;
    docs.reserve(plan.members.size());
    for (std::size_t i : plan.members) docs.push_back(tokenize_doc(corpus[i].id, corpus[i].lyrics));
    auto params = cfg.embedding.params;
    params.seed = mix_seed(params.seed, s);
    spdlog::info("training stratum {} on {} documents", plan.label, docs.size());
    auto result = train_word2vec(docs, params, plan.label);
    const auto stem = stratum_file_stem(plan.label);
    save_binary(result.embedding, ctx.layout.embeddings() / (stem + ".bin"));
    save_text(result.embedding, ctx.layout.embeddings() / (stem + ".vec"));
    entry["status"] = "trained";
    entry["file"] = stem + ".bin";
    entry["vocab_size"] = result.embedding.vocab.size();
    entry["epoch_losses"] = result.epoch_losses;
    manifest.push_back(std::move(entry));
    ++trained;
  }
  write_text(ctx.layout.strata(), Json{{"sample_only", sample_only}, {"strata", manifest}}.dump(2) + "\n");
  return {{"stage", "train"}, {"strata", plans.size()}, {"trained", trained}, {"refused", plans.size() - trained}};
}

Json stage_weat(const Context& ctx) {
  require_file(ctx.layout.strata(), "train");
  const auto manifest = read_json(ctx.layout.strata());
  const auto& strata = manifest.at("strata");

  std::vector<EmbeddingMatrix> embeddings;
  bool matched = false;
  for (const auto& entry : strata) {
    const auto label = entry.at("label").get<std::string>();
    if (ctx.options.stratum && *ctx.options.stratum != label) continue;
    matched = true;
    if (entry.at("status") != "trained") {
      const auto reason = entry.value("reason", std::string("not trained"));
      if (ctx.options.stratum) throw InsufficientStratum("stratum " + label + " was not trained: " + reason);
      spdlog::warn("skipping stratum {}: {}", label, reason);
      continue;
    }
    embeddings.push_back(load_binary(ctx.layout.embeddings() / entry.at("file").get<std::string>()));
  }
  if (ctx.options.stratum && !matched) throw UsageError("unknown stratum: " + *ctx.options.stratum);
  if (embeddings.empty()) throw InsufficientStratum("no trained strata to measure");

  std::vector<WordSet> targets = builtin_targets();
  AttributePair attributes = builtin_attributes();
  if (ctx.config.weat.wordsets) {
    auto file = load_wordsets(*ctx.config.weat.wordsets);
    if (!file.targets.empty()) targets = std::move(file.targets);
    if (file.attributes) attributes = std::move(*file.attributes);
  }

  BiasTableOptions options;
  options.with_p_value = ctx.config.weat.permutations > 0;
  options.permutation.iterations = ctx.config.weat.permutations;
  options.permutation.seed = ctx.config.weat.seed;
  const auto results = bias_table(targets, attributes, embeddings, options);
  save_results_json(results, ctx.layout.bias_results());

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.error.has_value();
  return {{"stage", "weat"},
          {"strata", embeddings.size()},
          {"targets", targets.size()},
          {"cells", results.size()},
          {"failed_cells", failed}};
}

Json stage_report(const Context& ctx) {
  const auto corpus = load_jsonl_corpus(ctx.layout.corpus(), "ingest");
  require_file(ctx.layout.topic_model() / "projection.bin", "topics-fit");
  require_file(ctx.layout.assignments(), "topics-predict");
  require_file(ctx.layout.bias_results(), "weat");
  const auto model = load_topic_model(ctx.layout.topic_model());
  const auto assignments = read_assignments(ctx.layout.assignments());
  const auto results = load_results_json(ctx.layout.bias_results());

  ReportBundle bundle;
  add_topic_tables(bundle, model, assignments, corpus);
  add_bias_tables(bundle, results);
  if (fs::exists(ctx.layout.strata())) {
    const auto manifest = read_json(ctx.layout.strata());
    for (const auto& entry : manifest.at("strata"))
      if (entry.at("status") != "trained")
        bundle.add_warning("stratum " + entry.at("label").get<std::string>() +
                           " not measured: " + entry.value("reason", std::string()));
  }
  bundle.metadata.config_hash = ctx.config.hash;
  bundle.metadata.seed = ctx.config.primary_seed();
  bundle.metadata.started_at = ctx.started_at;
  bundle.metadata.config = ctx.config.to_json();

  const auto written = bundle.write(ctx.layout.report());
  save_results_json(results, ctx.layout.report() / "bias_results.json");
  bundle.metadata.finished_at = timestamp();
  write_run_metadata(bundle.metadata, ctx.layout.report());
  return {{"stage", "report"},
          {"out_dir", ctx.layout.report().string()},
          {"files", written.size() + 2},
          {"warnings", bundle.warnings().size()}};
}

using Stage = Json (*)(const Context&);

const std::vector<std::pair<std::string, Stage>>& stages() {
  static const std::vector<std::pair<std::string, Stage>> table = {
      {"ingest", stage_ingest},         {"sample", stage_sample}, {"topics-fit", stage_topics_fit},
      {"topics-predict", stage_topics_predict}, {"train", stage_train},   {"weat", stage_weat},
      {"report", stage_report}};
  return table;
}

Json stage_pipeline(const Context& ctx) {
  Json summaries = Json::array();
  for (const auto& [name, stage] : stages()) {
    spdlog::info("stage {}", name);
    summaries.push_back(stage(ctx));
  }
  return {{"stage", "pipeline"}, {"stages", summaries}};
}

void configure_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("biasbeam");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  auto level = spdlog::level::info;
  if (const char* env = std::getenv("BIASBEAM_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
    // from_str maps unrecognised names to off; treat that as a typo, not a request.
    if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::info;
  }
  spdlog::set_level(level);
}

}  // namespace

int run_subcommand(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  configure_logging();

  CLI::App app{"Genre-stratified topic and gender-bias analysis of song lyrics", "biasbeam"};
  app.require_subcommand(1, 1);
  Options options;
  Stage selected = nullptr;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "run configuration file")->required();
    sub->add_option("--seed", options.seed, "override every seed in the config");
    sub->add_option("--workers", options.workers, "embedding training threads");
    sub->add_option("--out", options.out, "output directory");
    sub->add_flag("--sample-only", options.sample_only, "train embeddings on the stratified sample");
  };
  for (const auto& [name, stage] : stages()) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
    if (name == "ingest") sub->add_option("--report", options.report, "ingest report path");
    if (name == "weat") sub->add_option("--stratum", options.stratum, "measure one stratum only");
    sub->callback([&selected, stage = stage] { selected = stage; });
  }
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  add_common(pipeline);
  pipeline->add_option("--report", options.report, "ingest report path");
  pipeline->callback([&selected] { selected = stage_pipeline; });

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    Context ctx;
    ctx.started_at = timestamp();
    ctx.options = options;
    ctx.config = load_config(options.config_path);
    if (options.seed) ctx.config.override_seed(*options.seed);
    if (options.workers) ctx.config.embedding.params.workers = *options.workers;
    if (options.out) ctx.config.out_dir = *options.out;
    if (options.sample_only) ctx.config.embedding.sample_only = true;
    ctx.config.embedding.params.validate();
    ctx.layout.root = ctx.config.out_dir;
    out << selected(ctx).dump() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace biasbeam
