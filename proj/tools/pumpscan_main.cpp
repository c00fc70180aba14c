// pumpscan: command line front end for the detection pipeline.
//
// Exit codes: 0 ok, 1 usage/config error, 2 malformed or missing data,
// 3 anything else.
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pumpscan/pipeline.hpp"

namespace {

using pumpscan::PipelineConfig;

void print_ingest(const pumpscan::IngestStats& s) {
  std::cout << "posts: " << s.posts << "\ncomments: " << s.comments
            << "\nwindowed: " << s.windowed << "\nskipped_no_symbol: " << s.skipped_no_symbol
            << "\nskipped_multi_symbol: " << s.skipped_multi_symbol
            << "\nskipped_insufficient_data: " << s.skipped_insufficient_data << '\n';
}

int run(int argc, char** argv) {
  // --config is applied before the rest of the flags so that explicit flags
  // always win over the file.
  PipelineConfig cfg;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") cfg = PipelineConfig::from_file(argv[i + 1]);

  CLI::App app{"pump-and-dump detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", cfg.paths.out_dir, "artifact directory")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (0 = all cores)")
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "resolve symbols and cut event windows");
  ingest->add_option("--posts", cfg.paths.posts, "posts JSONL")->required();
  ingest->add_option("--comments", cfg.paths.comments, "comments JSONL")->required();
  ingest->add_option("--ohlcv-dir", cfg.paths.ohlcv_dir, "directory of <SYMBOL>.csv bars")
      ->required();
  ingest->add_option("--listings", cfg.paths.listings, "exchange listings, one symbol per line")
      ->required();

  auto* label = app.add_subcommand("label", "classify windows and label the corpus");
  label->add_option("--sectors", cfg.paths.sector_map, "symbol,sector CSV");
  label->add_option("--slope-threshold", cfg.market.slope_threshold, "rising-slope cutoff")
      ->capture_default_str();
  label->add_option("--sigma-multiplier", cfg.market.sigma_multiplier, "anomaly sigma multiplier")
      ->capture_default_str();
  label->add_option("--stopwords", cfg.paths.stopwords, "stopword list")->capture_default_str();
  label->add_option("--contractions", cfg.paths.contractions, "contraction map")
      ->capture_default_str();
  label->add_option("--lemmas", cfg.paths.lemmas, "lemma map")->capture_default_str();
  label->add_option("--empath", cfg.paths.empath_words, "agreement word list")
      ->capture_default_str();
  label->add_option("--custom", cfg.paths.custom_words, "touting word list")
      ->capture_default_str();

  auto add_model_flags = [&cfg](CLI::App* sub) {
    sub->add_option("--model", cfg.model.type, "logreg | mlp")->capture_default_str();
    sub->add_option("--hidden", cfg.model.train.hidden, "hidden layer sizes")
        ->capture_default_str();
    sub->add_option("--lr", cfg.model.train.learning_rate, "learning rate")
        ->capture_default_str();
    sub->add_option("--epochs", cfg.model.train.epochs, "training epochs")->capture_default_str();
    sub->add_option("--batch-size", cfg.model.train.batch_size, "minibatch size")
        ->capture_default_str();
    sub->add_option("--l2", cfg.model.train.l2, "L2 penalty")->capture_default_str();
    sub->add_option("--seed", cfg.model.train.seed, "training seed")->capture_default_str();
    sub->add_option("--min-count", cfg.features.min_count, "vocabulary frequency floor")
        ->capture_default_str();
    sub->add_flag("--tfidf", cfg.features.tfidf, "tf-idf reweighting");
    sub->add_flag("!--no-auto-weights", cfg.model.auto_class_weights,
                  "disable automatic class weights");
    sub->add_option("--docs", cfg.eval.docs, "posts | all")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "fit a model on the labeled corpus");
  add_model_flags(train);

  auto* eval = app.add_subcommand("eval", "stratified cross-validation");
  add_model_flags(eval);
  eval->add_option("--k", cfg.eval.k, "number of folds")->capture_default_str();
  eval->add_option("--eval-seed", cfg.eval.seed, "fold assignment seed")->capture_default_str();

  auto* explain = app.add_subcommand("explain", "Shapley attributions for the trained model");
  explain->add_option("--samples", cfg.explain.samples, "permutation samples per document")
      ->capture_default_str();
  explain->add_option("--background", cfg.explain.background, "background set size")
      ->capture_default_str();
  explain->add_option("--instances", cfg.explain.instances, "documents to explain")
      ->capture_default_str();
  explain->add_option("--top-n", cfg.explain.top_n, "ranking length")->capture_default_str();
  explain->add_option("--seed", cfg.explain.seed, "sampling seed")->capture_default_str();
  explain->add_option("--checkpoint", cfg.explain.checkpoint, "model checkpoint path");
  explain->add_option("--docs", cfg.eval.docs, "posts | all")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic corpus");
  pumpscan::SynthConfig synth;
  std::string synth_dir;
  simulate->add_option("--n-posts", synth.n_posts, "number of posts")->required();
  simulate->add_option("--pnd-fraction", synth.pnd_fraction, "fraction of pump posts")
      ->capture_default_str();
  simulate->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  simulate->add_option("--dir", synth_dir, "output directory (default <out>/synth)");

  auto* stats = app.add_subcommand("stats", "corpus descriptive statistics");
  stats->add_option("--posts", cfg.paths.posts, "posts JSONL")->required();
  stats->add_option("--listings", cfg.paths.listings, "exchange listings")->required();
  stats->add_option("--sectors", cfg.paths.sector_map, "symbol,sector CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  cfg.validate();

  if (ingest->parsed()) {
    print_ingest(pumpscan::stage_ingest(cfg));
  } else if (label->parsed()) {
    const pumpscan::LabelSummary s = pumpscan::stage_label(cfg);
    std::cout << pumpscan::format_class_report(s.report);
    std::cout << "pnd_shaped_windows: " << s.pnd_shaped_windows << '\n'
              << "posts_without_window: " << s.no_window_posts << '\n';
  } else if (train->parsed()) {
    const pumpscan::TrainSummary s = pumpscan::stage_train(cfg);
    std::cout << "documents: " << s.docs_used << "\nvocabulary: " << s.vocab_size << " ("
              << s.vocab_hash << ")\nloss: " << pumpscan::format_double(s.initial_loss) << " -> "
              << pumpscan::format_double(s.final_loss) << '\n';
  } else if (eval->parsed()) {
    std::cout << pumpscan::format_fold_report(pumpscan::stage_eval(cfg));
  } else if (explain->parsed()) {
    const pumpscan::ExplainSummary s = pumpscan::stage_explain(cfg);
    std::cout << "explained " << s.instances << " documents\n";
    std::size_t rank = 1;
    for (const auto& [term, impact] : s.ranking.terms)
      std::cout << rank++ << ". " << term << ' ' << pumpscan::format_double(impact) << '\n';
  } else if (simulate->parsed()) {
    if (synth_dir.empty()) synth_dir = cfg.paths.out_dir + "/synth";
    const pumpscan::SynthCorpus corpus = pumpscan::stage_simulate(cfg, synth, synth_dir);
    std::size_t pnd = 0;
    for (const auto& t : corpus.post_truth)
      if (t.label == pumpscan::Label::pnd) ++pnd;
    std::cout << "posts: " << corpus.posts.size() << " (" << pnd << " pump)\ncomments: "
              << corpus.comments.size() << "\nsymbols: " << corpus.bars.size() << "\nwrote "
              << synth_dir << '\n';
  } else if (stats->parsed()) {
    const pumpscan::StatsSummary s = pumpscan::stage_stats(cfg);
    std::cout << "sectors:\n";
    for (const auto& [sector, n] : s.sector_counts)
      std::cout << "  " << sector << ": " << n << '\n';
    std::cout << "active days: " << s.daily_counts.size() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pumpscan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const pumpscan::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const pumpscan::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
