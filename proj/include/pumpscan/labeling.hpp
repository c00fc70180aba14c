// Label assignment. Posts take their label from the market verdict; comments
// take theirs from the agreement model: same author as the post, or at least
// two distinct agreement-lexicon terms, and only under a flagged post.
#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pumpscan/market_events.hpp"
#include "pumpscan/records.hpp"
#include "pumpscan/text_pipeline.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

class AgreementLexicon {
 public:
  AgreementLexicon() = default;
  AgreementLexicon(const std::vector<std::string>& empath, const std::vector<std::string>& custom)
      : empath_(empath.begin(), empath.end()), custom_(custom.begin(), custom.end()) {
    union_.insert(empath_.begin(), empath_.end());
    union_.insert(custom_.begin(), custom_.end());
  }

  static AgreementLexicon from_files(const std::string& empath_path,
                                     const std::string& custom_path) {
    return AgreementLexicon(load_word_list_file(empath_path), load_word_list_file(custom_path));
  }

  bool contains(const std::string& term) const { return union_.count(term) > 0; }
  const std::unordered_set<std::string>& terms() const { return union_; }
  std::size_t empath_size() const { return empath_.size(); }
  std::size_t custom_size() const { return custom_.size(); }

  // Repeats do not count: "buy buy buy" is one hit.
  std::size_t distinct_hits(const std::vector<std::string>& tokens) const {
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens)
      if (union_.count(t)) seen.insert(t);
    return seen.size();
  }

 private:
  std::unordered_set<std::string> empath_;
  std::unordered_set<std::string> custom_;
  std::unordered_set<std::string> union_;
};

enum class LabelSource { market_shape, author_rule, lexicon_rule, inherited_negative };

inline const char* to_string(LabelSource s) {
  switch (s) {
    case LabelSource::market_shape: return "market-shape";
    case LabelSource::author_rule: return "author-rule";
    case LabelSource::lexicon_rule: return "lexicon-rule";
    case LabelSource::inherited_negative: return "inherited-negative";
  }
  return "?";
}

struct LabeledDocument {
  std::string id;
  DocKind kind = DocKind::post;
  std::vector<std::string> tokens;
  Label label = Label::not_pnd;
  LabelSource source = LabelSource::market_shape;
  bool no_window = false;  // post had no usable event window
};

// verdict == nullptr means the post's window was skipped; such posts cannot
// show the market pattern and default to the negative class.
inline LabeledDocument label_post(const Post& post, std::vector<std::string> tokens,
                                  const AnomalyVerdict* verdict) {
  LabeledDocument d;
  d.id = post.id;
  d.kind = DocKind::post;
  d.tokens = std::move(tokens);
  d.source = LabelSource::market_shape;
  if (verdict == nullptr) {
    d.label = Label::not_pnd;
    d.no_window = true;
  } else {
    d.label = verdict->is_pnd_shape ? Label::pnd : Label::not_pnd;
  }
  return d;
}

inline LabeledDocument label_comment(const Comment& comment, std::vector<std::string> tokens,
                                     Label parent_label, const std::string& parent_author,
                                     const AgreementLexicon& lexicon) {
  LabeledDocument d;
  d.id = comment.id;
  d.kind = DocKind::comment;
  d.label = Label::not_pnd;
  d.source = LabelSource::inherited_negative;
  if (parent_label == Label::pnd) {
    if (comment.author == parent_author) {
      d.label = Label::pnd;
      d.source = LabelSource::author_rule;
    } else if (lexicon.distinct_hits(tokens) >= 2) {
      d.label = Label::pnd;
      d.source = LabelSource::lexicon_rule;
    }
  }
  d.tokens = std::move(tokens);
  return d;
}

struct ClassReport {
  std::size_t posts_pnd = 0, posts_not = 0;
  std::size_t comments_pnd = 0, comments_not = 0;

  std::size_t posts_total() const { return posts_pnd + posts_not; }
  std::size_t comments_total() const { return comments_pnd + comments_not; }
  std::size_t pnd_total() const { return posts_pnd + comments_pnd; }
  std::size_t not_total() const { return posts_not + comments_not; }
  std::size_t total() const { return pnd_total() + not_total(); }

  bool operator==(const ClassReport&) const = default;
};

inline std::string format_count(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  std::size_t lead = digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && i >= lead && (i - lead) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

// Class-distribution table: rows posts/comments/total, columns P&D / not / total.
inline std::string format_class_report(const ClassReport& r) {
  const char* row_names[3] = {"Posts", "Comments", "Total"};
  std::size_t cells[3][3] = {
      {r.posts_pnd, r.posts_not, r.posts_total()},
      {r.comments_pnd, r.comments_not, r.comments_total()},
      {r.pnd_total(), r.not_total(), r.total()},
  };
  std::string text[3][3];
  std::size_t width[3] = {0, 0, 0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      text[i][j] = format_count(cells[i][j]);
      width[j] = std::max(width[j], text[i][j].size());
    }
  const std::string headers[3] = {"P&D", "Not P&D", "Total"};
  for (int j = 0; j < 3; ++j) width[j] = std::max(width[j], headers[j].size());

  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };
  std::string out = pad_left("", 8);
  for (int j = 0; j < 3; ++j) out += "  " + pad_left(headers[j], width[j]);
  out += '\n';
  for (int i = 0; i < 3; ++i) {
    out += row_names[i] + std::string(8 - std::string(row_names[i]).size(), ' ');
    for (int j = 0; j < 3; ++j) out += "  " + pad_left(text[i][j], width[j]);
    out += '\n';
  }
  return out;
}

// Labels every post and comment exactly once: posts in file order, then
// comments in file order. Comments whose post_id resolves to nothing are a
// data error, reported all at once.
inline std::pair<std::vector<LabeledDocument>, ClassReport> assemble_dataset(
    const std::vector<Post>& posts, const std::vector<Comment>& comments,
    const std::unordered_map<std::string, AnomalyVerdict>& verdicts,
    const AgreementLexicon& lexicon, const TextPipeline& pipeline, const SectorMap& sectors) {
  std::vector<LabeledDocument> docs;
  docs.reserve(posts.size() + comments.size());
  ClassReport report;

  struct PostInfo {
    Label label;
    std::string author;
    std::string symbol;  // empty when unresolved
  };
  std::unordered_map<std::string, PostInfo> by_id;
  by_id.reserve(posts.size());

  for (const auto& post : posts) {
    std::vector<std::string> tokens = pipeline.preprocess(post.title + " " + post.body);
    if (post.symbol) tokens = sector_substitute(std::move(tokens), *post.symbol, sectors);
    auto vit = verdicts.find(post.id);
    LabeledDocument d =
        label_post(post, std::move(tokens), vit == verdicts.end() ? nullptr : &vit->second);
    by_id[post.id] = {d.label, post.author, post.symbol.value_or("")};
    (d.label == Label::pnd ? report.posts_pnd : report.posts_not) += 1;
    docs.push_back(std::move(d));
  }

  std::vector<std::string> dangling;
  for (const auto& comment : comments) {
    auto pit = by_id.find(comment.post_id);
    if (pit == by_id.end()) {
      dangling.push_back(comment.id);
      continue;
    }
    std::vector<std::string> tokens = pipeline.preprocess(comment.body);
    if (!pit->second.symbol.empty())
      tokens = sector_substitute(std::move(tokens), pit->second.symbol, sectors);
    LabeledDocument d =
        label_comment(comment, std::move(tokens), pit->second.label, pit->second.author, lexicon);
    (d.label == Label::pnd ? report.comments_pnd : report.comments_not) += 1;
    docs.push_back(std::move(d));
  }
  if (!dangling.empty()) {
    std::string msg = "comments reference unknown posts:";
    for (const auto& id : dangling) msg += " " + id;
    throw DataError(msg);
  }
  return {std::move(docs), report};
}

// Processed-corpus records: id<TAB>kind<TAB>label<TAB>space-joined tokens.
// The label column may be empty for unlabeled corpora.
inline void write_corpus(std::ostream& out, const std::vector<LabeledDocument>& docs) {
  for (const auto& d : docs) {
    out << d.id << '\t' << to_string(d.kind) << '\t' << to_string(d.label) << '\t';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) out << ' ';
      out << d.tokens[i];
    }
    out << '\n';
  }
}

inline std::vector<LabeledDocument> parse_corpus(std::istream& in) {
  std::vector<LabeledDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols = split(line, '\t');
    if (cols.size() != 4) throw ParseError(lineno, "expected 4 tab-separated columns");
    LabeledDocument d;
    d.id = cols[0];
    try {
      d.kind = doc_kind_from(cols[1]);
      if (!cols[2].empty()) d.label = label_from(cols[2]);
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (!cols[3].empty()) d.tokens = split(cols[3], ' ');
    docs.push_back(std::move(d));
  }
  return docs;
}

inline std::vector<LabeledDocument> parse_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path);
  return parse_corpus(in);
}

}  // namespace pumpscan
