// Synthetic fixtures with known ground truth. Window construction is
// arithmetic, not search: spikes are placed a configured number of baseline
// sigmas above the two-sigma threshold plus a fixed fraction of the baseline
// mean, so they clear (or fail) their gates by design even when the baseline
// is perfectly flat. Each generated window is verified against the detector
// before it is returned; a spec that cannot clear its own kind's gates is a
// construction error.
//
// Window shapes per kind:
//   pnd          day-0 price and volume spike, then a decay (the dump) —
//                the rising region is the single peak day, slope 0
//   steep_news   strictly linear climb to the peak — normalized slope 1
//   normal       event days replay the baseline bars
//   price_only / volume_only  one spiking series, the other replays baseline
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpscan/ingest.hpp"
#include "pumpscan/labeling.hpp"
#include "pumpscan/market_events.hpp"
#include "pumpscan/records.hpp"
#include "pumpscan/text_pipeline.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

enum class ScenarioKind { pnd, normal, price_only_spike, volume_only_spike, steep_news };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::pnd: return "pnd";
    case ScenarioKind::normal: return "normal";
    case ScenarioKind::price_only_spike: return "price_only_spike";
    case ScenarioKind::volume_only_spike: return "volume_only_spike";
    case ScenarioKind::steep_news: return "steep_news";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from(std::string_view s, std::size_t line = 0) {
  if (s == "pnd") return ScenarioKind::pnd;
  if (s == "normal") return ScenarioKind::normal;
  if (s == "price_only_spike") return ScenarioKind::price_only_spike;
  if (s == "volume_only_spike") return ScenarioKind::volume_only_spike;
  if (s == "steep_news") return ScenarioKind::steep_news;
  throw ParseError(line, "unknown scenario kind '" + std::string(s) + "'");
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::normal;
  double base_price = 1.5;       // penny-stock range (0, 5)
  std::int64_t base_volume = 50000;
  double jitter = 0.02;          // fractional baseline noise
  double magnitude = 5.0;        // pump height in baseline sigmas
  int duration = 3;              // event days, 1..4
  double volume_multiplier = 10.0;
  double slope_threshold = kDefaultSlopeThreshold;
  double sigma_multiplier = kDefaultSigmaMultiplier;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(base_price > 0) || base_price >= 5)
      throw ConfigError("base_price must be in (0, 5) — penny stocks only");
    if (base_volume < 1) throw ConfigError("base_volume must be >= 1");
    if (jitter < 0 || jitter >= 0.5) throw ConfigError("jitter must be in [0, 0.5)");
    if (duration < 1 || duration > 4) throw ConfigError("duration must be 1..4 event days");
    if (!(slope_threshold > 0)) throw ConfigError("slope_threshold must be > 0");
    if (!(sigma_multiplier > 0)) throw ConfigError("sigma_multiplier must be > 0");
    const bool spikes_price = kind == ScenarioKind::pnd || kind == ScenarioKind::price_only_spike ||
                              kind == ScenarioKind::steep_news;
    const bool spikes_volume = kind == ScenarioKind::pnd ||
                               kind == ScenarioKind::volume_only_spike ||
                               kind == ScenarioKind::steep_news;
    if ((spikes_price || spikes_volume) && magnitude <= sigma_multiplier)
      throw ConfigError("pump magnitude must exceed the sigma multiplier to clear the gate");
    if (spikes_volume && volume_multiplier <= 1)
      throw ConfigError("volume_multiplier must be > 1");
    if (kind == ScenarioKind::steep_news && duration < 2)
      throw ConfigError("steep_news needs at least 2 event days to show a climb");
    if (kind == ScenarioKind::steep_news && slope_threshold >= 0.999)
      throw ConfigError("steep_news cannot exceed a slope threshold this close to 1");
  }
};

struct GeneratedWindow {
  EventWindow window;
  ScenarioKind kind = ScenarioKind::normal;
  Label truth = Label::not_pnd;
};

namespace detail {

inline OhlcvBar make_bar(Date date, double price, std::int64_t volume) {
  OhlcvBar b;
  b.date = date;
  b.open = b.close = price;
  b.high = price * 1.002;
  b.low = price * 0.998;
  b.volume = volume;
  return b;
}

inline Date add_business_days(Date d, int n) {
  if (!d.is_business_day()) d = d.next_business_day();
  for (int i = 0; i < n; ++i) d = d.next_business_day();
  return d;
}

}  // namespace detail

inline GeneratedWindow generate_window(const ScenarioSpec& spec,
                                       Date start = Date::from_ymd(2020, 3, 2)) {
  spec.validate();
  Rng rng(spec.seed);

  EventWindow w;
  w.symbol = "SYNTH";
  Date d = detail::add_business_days(start, 0);
  for (int i = 0; i < 5; ++i) {
    const double price = spec.base_price * (1.0 + spec.jitter * uniform_range(rng, -1.0, 1.0));
    const double vol =
        static_cast<double>(spec.base_volume) * (1.0 + spec.jitter * uniform_range(rng, -1.0, 1.0));
    w.baseline.push_back(detail::make_bar(d, price, std::max<std::int64_t>(1, std::llround(vol))));
    d = d.next_business_day();
  }
  const BaselineStats stats = baseline_stats(w);

  // Spike levels: past the threshold by a margin proportional to the baseline
  // mean, so they survive zero-sigma baselines and bar rounding alike.
  const double price_spike = stats.bap * 1.5 + spec.magnitude * stats.sigma_price;
  const double volume_spike =
      stats.bav * spec.volume_multiplier + spec.magnitude * stats.sigma_volume;

  for (int t = 0; t < spec.duration; ++t) {
    OhlcvBar bar;
    switch (spec.kind) {
      case ScenarioKind::pnd:
        bar = detail::make_bar(d, price_spike * (1.0 - 0.25 * t),
                               std::llround(volume_spike * (1.0 - 0.2 * t)));
        break;
      case ScenarioKind::normal:
        bar = w.baseline[static_cast<std::size_t>(t)];
        bar.date = d;
        break;
      case ScenarioKind::price_only_spike:
        bar = detail::make_bar(d, price_spike * (1.0 - 0.25 * t),
                               w.baseline[static_cast<std::size_t>(t)].volume);
        break;
      case ScenarioKind::volume_only_spike:
        bar = w.baseline[static_cast<std::size_t>(t)];
        bar.date = d;
        bar.volume = std::llround(volume_spike * (1.0 - 0.2 * t));
        break;
      case ScenarioKind::steep_news: {
        const double frac = static_cast<double>(t) / static_cast<double>(spec.duration - 1);
        bar = detail::make_bar(d, stats.bap + (price_spike - stats.bap) * frac,
                               std::llround(volume_spike));
        break;
      }
    }
    w.event.push_back(bar);
    d = d.next_business_day();
  }

  const AnomalyVerdict v = classify_window(w, spec.slope_threshold, spec.sigma_multiplier);
  bool expect_price = false, expect_volume = false, expect_pnd = false;
  switch (spec.kind) {
    case ScenarioKind::pnd: expect_price = expect_volume = expect_pnd = true; break;
    case ScenarioKind::normal: break;
    case ScenarioKind::price_only_spike: expect_price = true; break;
    case ScenarioKind::volume_only_spike: expect_volume = true; break;
    case ScenarioKind::steep_news: expect_price = expect_volume = true; break;
  }
  if (v.price_anomaly != expect_price || v.volume_anomaly != expect_volume ||
      v.is_pnd_shape != expect_pnd)
    throw DataError(std::string("scenario '") + to_string(spec.kind) +
                    "' failed to produce its designed gate outcome");

  return {std::move(w), spec.kind, expect_pnd ? Label::pnd : Label::not_pnd};
}

struct SynthConfig {
  std::size_t n_posts = 0;
  double pnd_fraction = 0.09;
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  struct PostTruth {
    std::string post_id;
    ScenarioKind kind = ScenarioKind::normal;
    Label label = Label::not_pnd;
  };
  struct CommentTruth {
    std::string comment_id;
    Label label = Label::not_pnd;
    LabelSource source = LabelSource::inherited_negative;
  };

  std::vector<Post> posts;
  std::vector<Comment> comments;
  std::vector<std::pair<std::string, std::vector<OhlcvBar>>> bars;  // per symbol
  std::vector<std::pair<std::string, std::string>> sectors;
  std::vector<std::string> listings;
  std::vector<PostTruth> post_truth;
  std::vector<CommentTruth> comment_truth;

  ClassReport expected_report() const {
    ClassReport r;
    for (const auto& t : post_truth) (t.label == Label::pnd ? r.posts_pnd : r.posts_not) += 1;
    for (const auto& t : comment_truth)
      (t.label == Label::pnd ? r.comments_pnd : r.comments_not) += 1;
    return r;
  }
};

namespace detail {

// Filler vocabulary for the negative class: preprocessing fixed points,
// disjoint from the stopword list and the agreement lexicon (asserted in the
// test suite).
inline const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words = {
      "chart",    "report",   "quarter",  "revenue",  "filing",   "guidance", "sector",
      "analyst",  "coverage", "dividend", "earnings", "forecast", "headline", "insider",
      "liquidity", "margin",  "offering", "patent",   "pipeline", "product",  "research",
      "session",  "shares",   "spread",   "ticker",   "trading",  "update",   "valuation",
      "warrant",  "outlook",  "balance",  "contract", "customer", "demand",   "supply",
      "exchange", "float",    "interest", "listing",  "merger"};
  return words;
}

inline std::string nth_symbol(std::size_t i) {
  std::string s(4, 'A');
  for (int p = 3; p >= 0; --p) {
    s[static_cast<std::size_t>(p)] = static_cast<char>('A' + i % 26);
    i /= 26;
  }
  return s;
}

inline std::vector<std::string> sample_distinct(const std::vector<std::string>& pool,
                                                std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle_inplace(idx, rng);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k && i < idx.size(); ++i) out.push_back(pool[idx[i]]);
  return out;
}

inline std::string join_words(const std::vector<std::string>& ws) {
  std::string s;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i) s += ' ';
    s += ws[i];
  }
  return s;
}

}  // namespace detail

// Terms usable as planted agreement signals: single-token preprocessing fixed
// points of the lexicon, so a planted word is still a distinct lexicon hit
// after cleanup.
inline std::vector<std::string> lexicon_sample_pool(const AgreementLexicon& lexicon,
                                                    const TextPipeline& pipeline) {
  std::set<std::string> pool;
  for (const auto& term : lexicon.terms()) {
    const auto tokens = pipeline.preprocess(term);
    if (tokens.size() == 1 && tokens[0] == term) pool.insert(term);
  }
  return {pool.begin(), pool.end()};
}

// P&D posts get pump-flavored language and a window that trips the detector;
// the other four kinds get neutral language and windows failing exactly their
// designed gates. Comments under P&D posts cycle lexicon-agreement,
// same-author, and neutral; everything else is neutral. The corpus is
//ingestible through the standard file formats.
inline SynthCorpus generate_corpus(const SynthConfig& cfg,
                                   const std::vector<std::string>& lexicon_pool) {
  if (!(cfg.pnd_fraction > 0) || !(cfg.pnd_fraction < 1))
    throw ConfigError("pnd_fraction must be in (0, 1)");
  if (cfg.n_posts > 0 && lexicon_pool.size() < 4)
    throw ConfigError("lexicon pool too small to plant agreement signals");

  static const char* kSectors[8] = {"Healthcare",            "Technology", "Healthcare",
                                    "Energy",                "Healthcare", "Finance",
                                    "CommunicationServices", "Utilities"};
  static const ScenarioKind kOtherKinds[4] = {ScenarioKind::normal, ScenarioKind::price_only_spike,
                                              ScenarioKind::volume_only_spike,
                                              ScenarioKind::steep_news};

  const std::size_t n_pnd =
      static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_posts) * cfg.pnd_fraction));
  std::vector<ScenarioKind> kinds(cfg.n_posts);
  for (std::size_t i = 0; i < cfg.n_posts; ++i)
    kinds[i] = i < n_pnd ? ScenarioKind::pnd : kOtherKinds[(i - n_pnd) % 4];
  Rng kind_rng(derive_seed(cfg.seed, 0xC0));
  shuffle_inplace(kinds, kind_rng);

  SynthCorpus corpus;
  const auto& neutral = detail::neutral_words();
  const Date epoch = Date::from_ymd(2020, 1, 6);

  for (std::size_t i = 0; i < cfg.n_posts; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const ScenarioKind kind = kinds[i];
    const std::string symbol = detail::nth_symbol(i);

    ScenarioSpec spec;
    spec.kind = kind;
    spec.seed = derive_seed(cfg.seed, 0x10000 + i);
    spec.base_price = uniform_range(rng, 0.5, 4.5);
    spec.base_volume = 20000 + static_cast<std::int64_t>(uniform_index(rng, 80001));
    spec.duration = kind == ScenarioKind::steep_news
                        ? 2 + static_cast<int>(uniform_index(rng, 3))
                        : 1 + static_cast<int>(uniform_index(rng, 4));
    const Date start = detail::add_business_days(epoch, static_cast<int>(i % 120));
    GeneratedWindow gw = generate_window(spec, start);

    Post post;
    post.id = "p" + std::to_string(i);
    post.author = "user" + std::to_string(uniform_index(rng, std::max<std::size_t>(1, cfg.n_posts)));
    post.created = static_cast<std::int64_t>(gw.window.event.front().date.days) * 86400 +
                   9 * 3600 + static_cast<std::int64_t>(i % 7) * 3600;
    const bool pumpy = kind == ScenarioKind::pnd;
    post.title = symbol + " " +
                 detail::join_words(detail::sample_distinct(pumpy ? lexicon_pool : neutral, 3, rng));
    post.body = pumpy ? detail::join_words(detail::sample_distinct(lexicon_pool, 4, rng)) + " " +
                            detail::join_words(detail::sample_distinct(neutral, 4, rng))
                      : detail::join_words(detail::sample_distinct(neutral, 8, rng));

    const std::size_t n_comments = uniform_index(rng, 4);
    for (std::size_t j = 0; j < n_comments; ++j) {
      Comment c;
      c.id = "c" + std::to_string(i) + "_" + std::to_string(j);
      c.post_id = post.id;
      c.created = post.created + static_cast<std::int64_t>(j + 1) * 3600;
      SynthCorpus::CommentTruth truth{c.id, Label::not_pnd, LabelSource::inherited_negative};
      if (kind == ScenarioKind::pnd) {
        switch (j % 3) {
          case 0:  // lexicon agreement: three distinct planted terms
            c.author = "cuser" + std::to_string(i) + "_" + std::to_string(j);
            c.body = detail::join_words(detail::sample_distinct(lexicon_pool, 3, rng)) + " " +
                     detail::join_words(detail::sample_distinct(neutral, 2, rng));
            truth.label = Label::pnd;
            truth.source = LabelSource::lexicon_rule;
            break;
          case 1:  // original poster replying to their own thread
            c.author = post.author;
            c.body = detail::join_words(detail::sample_distinct(lexicon_pool, 3, rng));
            truth.label = Label::pnd;
            truth.source = LabelSource::author_rule;
            break;
          default:  // bystander, no agreement signal
            c.author = "cuser" + std::to_string(i) + "_" + std::to_string(j);
            c.body = detail::join_words(detail::sample_distinct(neutral, 5, rng));
            break;
        }
      } else {
        // Same-author comments under unflagged posts stay negative; covered
        // here so labeling precedence gets exercised end to end.
        c.author = (j % 3 == 1) ? post.author
                                : "cuser" + std::to_string(i) + "_" + std::to_string(j);
        c.body = detail::join_words(detail::sample_distinct(neutral, 5, rng));
      }
      corpus.comments.push_back(std::move(c));
      corpus.comment_truth.push_back(std::move(truth));
    }

    corpus.post_truth.push_back({post.id, kind, gw.truth});
    corpus.posts.push_back(std::move(post));
    std::vector<OhlcvBar> series = gw.window.baseline;
    series.insert(series.end(), gw.window.event.begin(), gw.window.event.end());
    corpus.bars.emplace_back(symbol, std::move(series));
    corpus.sectors.emplace_back(symbol, kSectors[i % 8]);
    corpus.listings.push_back(symbol);
  }
  std::sort(corpus.listings.begin(), corpus.listings.end());
  return corpus;
}

inline void write_synth_corpus(const SynthCorpus& corpus, const std::string& dir,
                               const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "ohlcv");
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
  };

  {
    auto out = open(fs::path(dir) / "posts.jsonl");
    write_posts(out, corpus.posts);
  }
  {
    auto out = open(fs::path(dir) / "comments.jsonl");
    write_comments(out, corpus.comments);
  }
  for (const auto& [symbol, series] : corpus.bars) {
    auto out = open(fs::path(dir) / "ohlcv" / (symbol + ".csv"));
    write_ohlcv(out, series);
  }
  {
    auto out = open(fs::path(dir) / "sectors.csv");
    out << "symbol,sector\n";
    for (const auto& [sym, sec] : corpus.sectors) out << sym << ',' << sec << '\n';
  }
  {
    auto out = open(fs::path(dir) / "listings.txt");
    for (const auto& sym : corpus.listings) out << sym << '\n';
  }
  {
    auto out = open(fs::path(dir) / "truth_posts.csv");
    out << "post_id,kind,label\n";
    for (const auto& t : corpus.post_truth)
      out << t.post_id << ',' << to_string(t.kind) << ',' << to_string(t.label) << '\n';
  }
  {
    auto out = open(fs::path(dir) / "truth_comments.csv");
    out << "comment_id,label,source\n";
    for (const auto& t : corpus.comment_truth)
      out << t.comment_id << ',' << to_string(t.label) << ',' << to_string(t.source) << '\n';
  }
  {
    auto out = open(fs::path(dir) / "config.json");
    nlohmann::json j{{"n_posts", cfg.n_posts}, {"pnd_fraction", cfg.pnd_fraction},
                     {"seed", cfg.seed}};
    out << j.dump(2) << '\n';
  }
}

struct TruthRecords {
  std::vector<SynthCorpus::PostTruth> posts;
  std::vector<SynthCorpus::CommentTruth> comments;
};

inline std::vector<SynthCorpus::PostTruth> parse_truth_posts(std::istream& in) {
  std::vector<SynthCorpus::PostTruth> out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return out;
  ++lineno;
  if (trim(line) != "post_id,kind,label") throw ParseError(lineno, "bad truth_posts header");
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 3) throw ParseError(lineno, "expected 3 columns");
    out.push_back({cols[0], scenario_kind_from(cols[1], lineno), label_from(cols[2], lineno)});
  }
  return out;
}

inline std::vector<SynthCorpus::CommentTruth> parse_truth_comments(std::istream& in) {
  std::vector<SynthCorpus::CommentTruth> out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return out;
  ++lineno;
  if (trim(line) != "comment_id,label,source") throw ParseError(lineno, "bad truth_comments header");
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 3) throw ParseError(lineno, "expected 3 columns");
    SynthCorpus::CommentTruth t;
    t.comment_id = cols[0];
    t.label = label_from(cols[1], lineno);
    if (cols[2] == "author-rule") t.source = LabelSource::author_rule;
    else if (cols[2] == "lexicon-rule") t.source = LabelSource::lexicon_rule;
    else if (cols[2] == "inherited-negative") t.source = LabelSource::inherited_negative;
    else if (cols[2] == "market-shape") t.source = LabelSource::market_shape;
    else throw ParseError(lineno, "unknown label source '" + cols[2] + "'");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace pumpscan
