// Pipeline configuration and the stage functions behind the CLI subcommands.
// Each stage reads/writes files under out_dir so runs are resumable and every
// artifact is inspectable; given the same config and inputs, outputs are
// byte-identical.
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpscan/evaluation.hpp"
#include "pumpscan/explain.hpp"
#include "pumpscan/features.hpp"
#include "pumpscan/ingest.hpp"
#include "pumpscan/labeling.hpp"
#include "pumpscan/market_events.hpp"
#include "pumpscan/models.hpp"
#include "pumpscan/records.hpp"
#include "pumpscan/synth.hpp"
#include "pumpscan/text_pipeline.hpp"
#include "pumpscan/util.hpp"

#ifndef PUMPSCAN_DATA_DIR
#define PUMPSCAN_DATA_DIR "data"
#endif

namespace pumpscan {

struct PipelineConfig {
  struct Paths {
    std::string posts;
    std::string comments;
    std::string ohlcv_dir;
    std::string sector_map;  // optional; empty = everything Unknown
    std::string listings;
    std::string stopwords = std::string(PUMPSCAN_DATA_DIR) + "/stopwords.txt";
    std::string contractions = std::string(PUMPSCAN_DATA_DIR) + "/contractions.txt";
    std::string lemmas = std::string(PUMPSCAN_DATA_DIR) + "/lemmas.txt";
    std::string empath_words = std::string(PUMPSCAN_DATA_DIR) + "/empath_agreement_words.txt";
    std::string custom_words = std::string(PUMPSCAN_DATA_DIR) + "/custom_agreement_words.txt";
    std::string out_dir = "out";
  } paths;

  struct Market {
    double slope_threshold = kDefaultSlopeThreshold;
    double sigma_multiplier = kDefaultSigmaMultiplier;
  } market;

  struct Features {
    std::size_t min_count = 1;
    bool tfidf = false;
  } features;

  struct Model {
    std::string type = "mlp";
    TrainConfig train;
    bool auto_class_weights = true;
  } model;

  struct Eval {
    std::size_t k = 5;
    std::uint64_t seed = 42;
    std::string docs = "all";  // posts | all
  } eval;

  struct Explain {
    std::size_t samples = 2000;
    std::size_t background = 100;
    std::size_t instances = 25;
    std::size_t top_n = 30;
    std::uint64_t seed = 42;
    std::string checkpoint;  // defaults to out_dir/model.json
  } explain;

  int threads = 1;

  PipelineConfig() {
    model.train.hidden = {64};
    model.train.learning_rate = 0.05;
    model.train.epochs = 12;
    model.train.batch_size = 64;
    model.train.l2 = 1e-4;
    model.train.seed = 42;
  }

  void validate() const {
    if (eval.docs != "posts" && eval.docs != "all")
      throw ConfigError("eval.docs must be 'posts' or 'all'");
    if (model.type != "logreg" && model.type != "mlp")
      throw ConfigError("model.type must be 'logreg' or 'mlp'");
    if (eval.k < 2) throw ConfigError("eval.k must be >= 2");
    if (!(market.slope_threshold > 0)) throw ConfigError("slope_threshold must be > 0");
    if (!(market.sigma_multiplier > 0)) throw ConfigError("sigma_multiplier must be > 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    model.train.validate();
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.posts = p.value("posts", c.paths.posts);
      c.paths.comments = p.value("comments", c.paths.comments);
      c.paths.ohlcv_dir = p.value("ohlcv_dir", c.paths.ohlcv_dir);
      c.paths.sector_map = p.value("sector_map", c.paths.sector_map);
      c.paths.listings = p.value("listings", c.paths.listings);
      c.paths.stopwords = p.value("stopwords", c.paths.stopwords);
      c.paths.contractions = p.value("contractions", c.paths.contractions);
      c.paths.lemmas = p.value("lemmas", c.paths.lemmas);
      c.paths.empath_words = p.value("empath_words", c.paths.empath_words);
      c.paths.custom_words = p.value("custom_words", c.paths.custom_words);
      c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
    }
    if (j.contains("market")) {
      const auto& m = j.at("market");
      c.market.slope_threshold = m.value("slope_threshold", c.market.slope_threshold);
      c.market.sigma_multiplier = m.value("sigma_multiplier", c.market.sigma_multiplier);
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      c.features.min_count = f.value("min_count", c.features.min_count);
      c.features.tfidf = f.value("tfidf", c.features.tfidf);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.type = m.value("type", c.model.type);
      c.model.auto_class_weights = m.value("auto_class_weights", c.model.auto_class_weights);
      c.model.train.learning_rate = m.value("learning_rate", c.model.train.learning_rate);
      c.model.train.epochs = m.value("epochs", c.model.train.epochs);
      c.model.train.batch_size = m.value("batch_size", c.model.train.batch_size);
      c.model.train.seed = m.value("seed", c.model.train.seed);
      c.model.train.l2 = m.value("l2", c.model.train.l2);
      c.model.train.hidden = m.value("hidden", c.model.train.hidden);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.k = e.value("k", c.eval.k);
      c.eval.seed = e.value("seed", c.eval.seed);
      c.eval.docs = e.value("docs", c.eval.docs);
    }
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      c.explain.samples = e.value("samples", c.explain.samples);
      c.explain.background = e.value("background", c.explain.background);
      c.explain.instances = e.value("instances", c.explain.instances);
      c.explain.top_n = e.value("top_n", c.explain.top_n);
      c.explain.seed = e.value("seed", c.explain.seed);
      c.explain.checkpoint = e.value("checkpoint", c.explain.checkpoint);
    }
    c.threads = j.value("threads", c.threads);
    return c;
  }

  static PipelineConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed config " + path + ": " + e.what());
    }
    return from_json(j);
  }
};

namespace detail {

inline std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + ": " + path);
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

inline std::unordered_set<std::string> load_listings(const std::string& path) {
  auto in = open_input(path, "listings");
  std::unordered_set<std::string> listings;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string sym = trim(line);
    if (sym.empty()) continue;
    std::string upper;
    for (char ch : sym) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    listings.insert(upper);
  }
  return listings;
}

}  // namespace detail

inline TextPipeline load_text_pipeline(const PipelineConfig& cfg) {
  return TextPipeline::from_files(cfg.paths.stopwords, cfg.paths.contractions, cfg.paths.lemmas);
}

inline AgreementLexicon load_lexicon(const PipelineConfig& cfg) {
  return AgreementLexicon::from_files(cfg.paths.empath_words, cfg.paths.custom_words);
}

inline SectorMap load_sector_map(const PipelineConfig& cfg) {
  if (cfg.paths.sector_map.empty()) return SectorMap{};
  return SectorMap::parse_file(cfg.paths.sector_map);
}

inline std::vector<LabeledDocument> filter_docs(std::vector<LabeledDocument> docs,
                                                const std::string& mode) {
  if (mode == "all") return docs;
  std::vector<LabeledDocument> out;
  for (auto& d : docs)
    if (d.kind == DocKind::post) out.push_back(std::move(d));
  return out;
}

// ---- ingest ----------------------------------------------------------------

inline IngestStats stage_ingest(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  auto posts_in = detail::open_input(cfg.paths.posts, "posts");
  std::vector<Post> posts = parse_posts(posts_in);
  auto comments_in = detail::open_input(cfg.paths.comments, "comments");
  std::vector<Comment> comments = parse_comments(comments_in);
  const auto listings = detail::load_listings(cfg.paths.listings);

  IngestStats stats;
  stats.posts = posts.size();
  stats.comments = comments.size();

  std::unordered_map<std::string, std::vector<OhlcvBar>> bars_cache;
  auto bars_for = [&](const std::string& symbol) -> const std::vector<OhlcvBar>* {
    auto it = bars_cache.find(symbol);
    if (it != bars_cache.end()) return it->second.empty() ? nullptr : &it->second;
    const fs::path path = fs::path(cfg.paths.ohlcv_dir) / (symbol + ".csv");
    std::ifstream in(path);
    if (!in) {
      bars_cache.emplace(symbol, std::vector<OhlcvBar>{});
      return nullptr;
    }
    auto [pos, inserted] = bars_cache.emplace(symbol, parse_ohlcv(in));
    return pos->second.empty() ? nullptr : &pos->second;
  };

  std::vector<EventWindow> windows;
  for (auto& post : posts) {
    const auto symbols = extract_symbols(post.title + " " + post.body, listings);
    if (symbols.empty()) {
      ++stats.skipped_no_symbol;
      continue;
    }
    if (symbols.size() > 1) {
      ++stats.skipped_multi_symbol;
      continue;
    }
    post.symbol = *symbols.begin();
    const std::vector<OhlcvBar>* bars = bars_for(*post.symbol);
    std::optional<EventWindow> w = bars ? build_event_window(post, *bars) : std::nullopt;
    if (!w) {
      ++stats.skipped_insufficient_data;
      continue;
    }
    ++stats.windowed;
    windows.push_back(std::move(*w));
  }

  const fs::path out_dir(cfg.paths.out_dir);
  {
    auto out = detail::open_output(out_dir / "posts.norm.jsonl");
    write_posts(out, posts);
  }
  {
    auto out = detail::open_output(out_dir / "comments.norm.jsonl");
    write_comments(out, comments);
  }
  {
    auto out = detail::open_output(out_dir / "windows.jsonl");
    write_windows(out, windows);
  }
  {
    auto out = detail::open_output(out_dir / "ingest_stats.json");
    nlohmann::json j{{"posts", stats.posts},
                     {"comments", stats.comments},
                     {"windowed", stats.windowed},
                     {"skipped_no_symbol", stats.skipped_no_symbol},
                     {"skipped_multi_symbol", stats.skipped_multi_symbol},
                     {"skipped_insufficient_data", stats.skipped_insufficient_data}};
    out << j.dump(2) << '\n';
  }
  return stats;
}

// ---- label -----------------------------------------------------------------

struct LabelSummary {
  ClassReport report;
  std::size_t no_window_posts = 0;
  std::size_t pnd_shaped_windows = 0;
};

inline LabelSummary stage_label(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.paths.out_dir);
  auto posts_in = detail::open_input((out_dir / "posts.norm.jsonl").string(), "normalized posts (run ingest first)");
  std::vector<Post> posts = parse_posts(posts_in);
  auto comments_in =
      detail::open_input((out_dir / "comments.norm.jsonl").string(), "normalized comments (run ingest first)");
  std::vector<Comment> comments = parse_comments(comments_in);
  auto windows_in = detail::open_input((out_dir / "windows.jsonl").string(), "windows (run ingest first)");
  std::vector<EventWindow> windows = parse_windows(windows_in);

  std::unordered_map<std::string, AnomalyVerdict> verdicts;
  std::vector<VerdictRow> rows;
  rows.reserve(windows.size());
  LabelSummary summary;
  for (const auto& w : windows) {
    VerdictRow row;
    row.post_id = w.post_ref;
    row.symbol = w.symbol;
    row.stats = baseline_stats(w);
    row.verdict = classify_window(w, cfg.market.slope_threshold, cfg.market.sigma_multiplier);
    if (row.verdict.is_pnd_shape) ++summary.pnd_shaped_windows;
    verdicts.emplace(w.post_ref, row.verdict);
    rows.push_back(std::move(row));
  }

  const TextPipeline pipeline = load_text_pipeline(cfg);
  const AgreementLexicon lexicon = load_lexicon(cfg);
  const SectorMap sectors = load_sector_map(cfg);
  auto [docs, report] = assemble_dataset(posts, comments, verdicts, lexicon, pipeline, sectors);
  summary.report = report;
  for (const auto& d : docs)
    if (d.kind == DocKind::post && d.no_window) ++summary.no_window_posts;

  {
    auto out = detail::open_output(out_dir / "verdicts.csv");
    write_verdicts(out, rows);
  }
  {
    auto out = detail::open_output(out_dir / "corpus.tsv");
    write_corpus(out, docs);
  }
  {
    auto out = detail::open_output(out_dir / "label_report.json");
    nlohmann::json j{{"posts_pnd", report.posts_pnd},
                     {"posts_not", report.posts_not},
                     {"comments_pnd", report.comments_pnd},
                     {"comments_not", report.comments_not},
                     {"total", report.total()},
                     {"no_window_posts", summary.no_window_posts},
                     {"pnd_shaped_windows", summary.pnd_shaped_windows}};
    out << j.dump(2) << '\n';
  }
  return summary;
}

// ---- train -----------------------------------------------------------------

struct TrainSummary {
  std::size_t docs_used = 0;
  std::size_t vocab_size = 0;
  std::string vocab_hash;
  double initial_loss = 0;
  double final_loss = 0;
};

namespace detail {

inline std::vector<SparseVector> vectorize_all(const std::vector<LabeledDocument>& docs,
                                               const Vocabulary& vocab, bool tfidf) {
  std::vector<SparseVector> X;
  X.reserve(docs.size());
  for (const auto& d : docs) X.push_back(vectorize(d.tokens, vocab));
  if (tfidf) {
    const TfidfTransform t = TfidfTransform::fit(X, vocab.size());
    for (auto& x : X) x = t.apply(x);
  }
  return X;
}

}  // namespace detail

inline TrainSummary stage_train(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.paths.out_dir);
  std::vector<LabeledDocument> docs =
      filter_docs(parse_corpus_file((out_dir / "corpus.tsv").string()), cfg.eval.docs);

  std::vector<std::vector<std::string>> token_docs;
  token_docs.reserve(docs.size());
  for (const auto& d : docs) token_docs.push_back(d.tokens);
  const Vocabulary vocab = Vocabulary::build(token_docs, cfg.features.min_count);

  std::vector<SparseVector> X = detail::vectorize_all(docs, vocab, cfg.features.tfidf);
  std::vector<Label> y;
  y.reserve(docs.size());
  for (const auto& d : docs) y.push_back(d.label);

  TrainConfig train_cfg = cfg.model.train;
  if (cfg.model.auto_class_weights) {
    const ClassWeights w = class_weights(y);
    train_cfg.weight_not = w.weight_not;
    train_cfg.weight_pnd = w.weight_pnd;
  }

  TrainSummary s;
  s.docs_used = docs.size();
  s.vocab_size = vocab.size();
  s.vocab_hash = vocab.hash();

  AnyModel model;
  std::vector<double> history;
  if (cfg.model.type == "logreg") {
    TrainConfig lr_cfg = train_cfg;
    lr_cfg.hidden.clear();
    auto out = train_logreg(X, y, lr_cfg);
    history = std::move(out.loss_history);
    model = std::move(out.model);
    train_cfg = lr_cfg;
  } else {
    auto out = train_mlp(X, y, train_cfg);
    history = std::move(out.loss_history);
    model = std::move(out.model);
  }
  s.initial_loss = history.front();
  s.final_loss = history.back();

  {
    auto out = detail::open_output(out_dir / "vocab.tsv");
    vocab.write(out);
  }
  {
    auto out = detail::open_output(out_dir / "model.json");
    save_checkpoint(out, model, train_cfg, s.vocab_hash);
  }
  return s;
}

// ---- eval ------------------------------------------------------------------

inline FoldReport stage_eval(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.paths.out_dir);
  std::vector<LabeledDocument> docs =
      filter_docs(parse_corpus_file((out_dir / "corpus.tsv").string()), cfg.eval.docs);

  ModelSpec spec;
  spec.type = model_type_from(cfg.model.type);
  spec.config = cfg.model.train;
  if (spec.type == ModelSpec::Type::logreg) spec.config.hidden.clear();
  spec.auto_class_weights = cfg.model.auto_class_weights;
  spec.min_count = cfg.features.min_count;
  spec.use_tfidf = cfg.features.tfidf;

  const FoldReport report = cross_validate(docs, spec, cfg.eval.k, cfg.eval.seed, cfg.threads);
  {
    auto out = detail::open_output(out_dir / "eval_report.csv");
    write_fold_report_csv(out, report);
  }
  {
    auto out = detail::open_output(out_dir / "eval_report.txt");
    out << format_fold_report(report);
  }
  return report;
}

// ---- explain ----------------------------------------------------------------

struct ExplainSummary {
  std::size_t instances = 0;
  ImpactRanking ranking;
};

inline ExplainSummary stage_explain(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.paths.out_dir);
  std::vector<LabeledDocument> docs =
      filter_docs(parse_corpus_file((out_dir / "corpus.tsv").string()), cfg.eval.docs);
  if (docs.empty()) throw DataError("corpus is empty; nothing to explain");

  const Vocabulary vocab = Vocabulary::parse_file((out_dir / "vocab.tsv").string());
  const std::string checkpoint_path =
      cfg.explain.checkpoint.empty() ? (out_dir / "model.json").string() : cfg.explain.checkpoint;
  const Checkpoint checkpoint = load_checkpoint_file(checkpoint_path, vocab.hash());

  std::vector<SparseVector> X = detail::vectorize_all(docs, vocab, cfg.features.tfidf);

  // Background: a stratified sample; instances: the corpus head, so the same
  // documents are explained on every run.
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < docs.size(); ++i)
    (docs[i].label == Label::pnd ? pos : neg).push_back(i);
  Rng bg_rng(derive_seed(cfg.explain.seed, 7));
  shuffle_inplace(pos, bg_rng);
  shuffle_inplace(neg, bg_rng);
  std::vector<SparseVector> background;
  const std::size_t want = std::max<std::size_t>(1, std::min(cfg.explain.background, docs.size()));
  for (std::size_t i = 0; background.size() < want && (i < pos.size() || i < neg.size()); ++i) {
    if (i < neg.size()) background.push_back(X[neg[i]]);
    if (background.size() < want && i < pos.size()) background.push_back(X[pos[i]]);
  }

  const std::size_t n_instances = std::min(cfg.explain.instances, docs.size());
  ExplainSummary summary;
  summary.instances = n_instances;

  std::unordered_map<std::uint32_t, double> abs_sum;
  auto attributions_out = detail::open_output(out_dir / "attributions.csv");
  attributions_out << "doc_id,term,value\n";
  for (std::size_t n = 0; n < n_instances; ++n) {
    const Attribution att = shapley_attribute(checkpoint.model, X[n], background,
                                              cfg.explain.samples,
                                              derive_seed(cfg.explain.seed, n), cfg.threads);
    for (const auto& [f, v] : att.values) {
      abs_sum[f] += std::abs(v);
      if (v != 0)
        attributions_out << docs[n].id << ',' << vocab.term_of(f) << ',' << format_double(v)
                         << '\n';
    }
  }

  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(abs_sum.size());
  for (const auto& [f, s] : abs_sum)
    ranked.emplace_back(vocab.term_of(f), s / static_cast<double>(n_instances));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > cfg.explain.top_n) ranked.resize(cfg.explain.top_n);
  summary.ranking.terms = std::move(ranked);
  {
    auto out = detail::open_output(out_dir / "ranking.csv");
    write_ranking(out, summary.ranking);
  }
  return summary;
}

// ---- simulate ----------------------------------------------------------------

inline SynthCorpus stage_simulate(const PipelineConfig& cfg, const SynthConfig& synth,
                                  const std::string& dir) {
  const TextPipeline pipeline = load_text_pipeline(cfg);
  const AgreementLexicon lexicon = load_lexicon(cfg);
  const SynthCorpus corpus = generate_corpus(synth, lexicon_sample_pool(lexicon, pipeline));
  write_synth_corpus(corpus, dir, synth);
  return corpus;
}

// ---- stats -------------------------------------------------------------------

struct StatsSummary {
  std::vector<std::pair<std::string, std::size_t>> sector_counts;  // count desc
  std::vector<std::pair<std::string, std::size_t>> daily_counts;   // date asc
};

inline StatsSummary stage_stats(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  auto posts_in = detail::open_input(cfg.paths.posts, "posts");
  std::vector<Post> posts = parse_posts(posts_in);
  const auto listings = detail::load_listings(cfg.paths.listings);
  const SectorMap sectors = load_sector_map(cfg);

  std::map<std::string, std::size_t> by_sector;
  std::map<std::string, std::size_t> by_day;
  for (const auto& post : posts) {
    const auto symbols = extract_symbols(post.title + " " + post.body, listings);
    if (symbols.size() == 1)
      ++by_sector[sectors.sector(*symbols.begin())];
    else
      ++by_sector["Unresolved"];
    ++by_day[post.date().to_iso()];
  }

  StatsSummary s;
  s.sector_counts.assign(by_sector.begin(), by_sector.end());
  std::sort(s.sector_counts.begin(), s.sector_counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  s.daily_counts.assign(by_day.begin(), by_day.end());

  const fs::path out_dir(cfg.paths.out_dir);
  {
    auto out = detail::open_output(out_dir / "sector_histogram.csv");
    out << "sector,posts\n";
    for (const auto& [sector, n] : s.sector_counts) out << sector << ',' << n << '\n';
  }
  {
    auto out = detail::open_output(out_dir / "daily_counts.csv");
    out << "date,posts\n";
    for (const auto& [date, n] : s.daily_counts) out << date << ',' << n << '\n';
  }
  return s;
}

}  // namespace pumpscan
