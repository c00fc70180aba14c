// Text normalization: the eight-step cleanup (URLs, contractions, HTML,
// punctuation, whitespace, numbers, lemmas, stopwords), ticker extraction
// against an exchange listing set, and sector-dummy substitution.
//
// Everything here is deterministic dictionary lookup; the word lists ship as
// data files so tuning them is a data change, not a code change.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

struct TokenSeq {
  std::string source_id;
  DocKind kind = DocKind::post;
  std::vector<std::string> tokens;
};

// One term per line, '#' starts a comment, blank lines ignored.
inline std::vector<std::string> load_word_list(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string w = trim(line);
    if (!w.empty()) words.push_back(to_lower(w));
  }
  return words;
}

inline std::vector<std::string> load_word_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word list: " + path);
  return load_word_list(in);
}

// key<TAB>value pairs, same comment rules.
inline std::vector<std::pair<std::string, std::string>> load_pair_list(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(lineno, "expected key<TAB>value");
    std::string k = trim(line.substr(0, tab));
    std::string v = trim(line.substr(tab + 1));
    if (k.empty() || v.empty()) throw ParseError(lineno, "empty key or value");
    pairs.emplace_back(to_lower(k), to_lower(v));
  }
  return pairs;
}

inline std::vector<std::pair<std::string, std::string>> load_pair_list_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair list: " + path);
  return load_pair_list(in);
}

class TextPipeline {
 public:
  TextPipeline() = default;
  TextPipeline(std::vector<std::string> stopwords,
               std::vector<std::pair<std::string, std::string>> contractions,
               std::vector<std::pair<std::string, std::string>> lemmas) {
    for (auto& w : stopwords) stopwords_.insert(std::move(w));
    for (auto& [k, v] : contractions) contractions_.emplace(std::move(k), std::move(v));
    for (auto& [k, v] : lemmas) lemmas_.emplace(std::move(k), std::move(v));
  }

  static TextPipeline from_files(const std::string& stopwords_path,
                                 const std::string& contractions_path,
                                 const std::string& lemmas_path) {
    return TextPipeline(load_word_list_file(stopwords_path), load_pair_list_file(contractions_path),
                        load_pair_list_file(lemmas_path));
  }

  const std::unordered_set<std::string>& stopwords() const { return stopwords_; }

  std::string lemma(const std::string& token) const {
    auto it = lemmas_.find(token);
    return it == lemmas_.end() ? token : it->second;
  }

  // Cleanup order: lowercase, strip URLs, expand contractions, strip HTML
  // tags/entities, then a single scan that treats anything outside [a-z] as a
  // separator (covering punctuation, whitespace and digit removal at once),
  // then lemmatize and drop stopwords.
  std::vector<std::string> preprocess(const std::string& raw) const {
    std::string s = normalize_lower(raw);
    s = strip_urls(s);
    s = expand_contractions(s);
    s = strip_html(s);
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
      if (cur.empty()) return;
      std::string t = lemma(cur);
      if (!stopwords_.count(t)) out.push_back(std::move(t));
      cur.clear();
    };
    for (char c : s) {
      if (c >= 'a' && c <= 'z')
        cur.push_back(c);
      else
        flush();
    }
    flush();
    return out;
  }

 private:
  // ASCII lowercase; the one non-ASCII character handled is the curly
  // apostrophe (U+2019), folded to ' so contractions copy-pasted from forums
  // still expand.
  static std::string normalize_lower(const std::string& raw) {
    std::string s;
    s.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      unsigned char c = static_cast<unsigned char>(raw[i]);
      if (c == 0xE2 && i + 2 < raw.size() &&
          static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
          static_cast<unsigned char>(raw[i + 2]) == 0x99) {
        s.push_back('\'');
        i += 2;
      } else if (c >= 'A' && c <= 'Z') {
        s.push_back(static_cast<char>(c - 'A' + 'a'));
      } else {
        s.push_back(static_cast<char>(c));
      }
    }
    return s;
  }

  static bool starts_url(const std::string& s, std::size_t i) {
    return s.compare(i, 7, "http://") == 0 || s.compare(i, 8, "https://") == 0 ||
           s.compare(i, 4, "www.") == 0;
  }

  static std::string strip_urls(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      if (starts_url(s, i)) {
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      } else {
        out.push_back(s[i++]);
      }
    }
    return out;
  }

  std::string expand_contractions(const std::string& s) const {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    auto is_word = [](char c) { return (c >= 'a' && c <= 'z') || c == '\''; };
    while (i < s.size()) {
      if (is_word(s[i])) {
        std::size_t j = i;
        while (j < s.size() && is_word(s[j])) ++j;
        std::string word = s.substr(i, j - i);
        auto it = contractions_.find(word);
        out += (it == contractions_.end()) ? word : it->second;
        i = j;
      } else {
        out.push_back(s[i++]);
      }
    }
    return out;
  }

  // A '<'...'>' span is treated as a tag only when it opens with a tag-like
  // character and contains no nested '<', so "price < 5 and > 2" survives.
  // Entities are '&' + up to 8 [a-z0-9#] + ';'.
  static std::string strip_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      if (s[i] == '<') {
        std::size_t close = s.find_first_of("<>", i + 1);
        if (close != std::string::npos && s[close] == '>' && close > i + 1) {
          char first = s[i + 1];
          if ((first >= 'a' && first <= 'z') || first == '/' || first == '!') {
            i = close + 1;
            continue;
          }
        }
        out.push_back(s[i++]);
      } else if (s[i] == '&') {
        std::size_t j = i + 1;
        while (j < s.size() && j - i <= 8 &&
               ((s[j] >= 'a' && s[j] <= 'z') || (s[j] >= '0' && s[j] <= '9') || s[j] == '#'))
          ++j;
        if (j < s.size() && s[j] == ';' && j > i + 1) {
          out.push_back(' ');
          i = j + 1;
        } else {
          out.push_back(s[i++]);
        }
      } else {
        out.push_back(s[i++]);
      }
    }
    return out;
  }

  std::unordered_set<std::string> stopwords_;
  std::unordered_map<std::string, std::string> contractions_;
  std::unordered_map<std::string, std::string> lemmas_;
};

// Ticker candidates in raw (pre-cleanup) text: $-prefixed words in any case,
// or bare 1-5 letter all-caps words. Candidates count only when listed on an
// exchange, which is what separates $AYTU from $LOL.
inline std::set<std::string> extract_symbols(const std::string& raw,
                                             const std::unordered_set<std::string>& listings) {
  std::set<std::string> found;
  std::size_t i = 0;
  auto is_alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  while (i < raw.size()) {
    if (std::isspace(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    std::size_t b = i, e = j;
    i = j;
    bool dollar = false;
    while (b < e && !is_alpha(raw[b])) {
      if (raw[b] == '$') dollar = true;
      ++b;
    }
    while (e > b && !is_alpha(raw[e - 1])) --e;
    if (b >= e) continue;
    std::string word = raw.substr(b, e - b);
    bool alpha = true, caps = true;
    for (char c : word) {
      if (!is_alpha(c)) alpha = false;
      if (!(c >= 'A' && c <= 'Z')) caps = false;
    }
    if (!alpha) continue;
    if (!dollar && !(caps && word.size() <= 5)) continue;
    std::string sym;
    for (char c : word) sym.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (listings.count(sym)) found.insert(sym);
  }
  return found;
}

class SectorMap {
 public:
  SectorMap() = default;

  void add(const std::string& symbol, const std::string& sector) {
    entries_[upper(symbol)] = sector;
  }

  // Unmapped symbols resolve to Unknown rather than failing: delisted and OTC
  // tickers are common in this corpus.
  std::string sector(const std::string& symbol) const {
    auto it = entries_.find(upper(symbol));
    return it == entries_.end() ? std::string("Unknown") : it->second;
  }

  std::size_t size() const { return entries_.size(); }

  // Two-column table `symbol,sector` with a header row.
  static SectorMap parse(std::istream& in) {
    SectorMap m;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) return m;
    ++lineno;
    if (trim(line) != "symbol,sector") throw ParseError(lineno, "expected header symbol,sector");
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError(lineno, "expected symbol,sector");
      std::string sym = trim(line.substr(0, comma));
      std::string sec = trim(line.substr(comma + 1));
      if (sym.empty() || sec.empty()) throw ParseError(lineno, "empty symbol or sector");
      m.add(sym, sec);
    }
    return m;
  }

  static SectorMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sector map: " + path);
    return parse(in);
  }

  void write(std::ostream& out) const {
    out << "symbol,sector\n";
    std::map<std::string, std::string> sorted(entries_.begin(), entries_.end());
    for (const auto& [sym, sec] : sorted) out << sym << ',' << sec << '\n';
  }

 private:
  static std::string upper(const std::string& s) {
    std::string u;
    u.reserve(s.size());
    for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return u;
  }

  std::unordered_map<std::string, std::string> entries_;
};

// The dummy token is "sector" + the sector name with non-letters dropped,
// e.g. Healthcare -> sectorhealthcare, so it passes back through preprocess
// unchanged.
inline std::string sector_token(const std::string& sector_name) {
  std::string t = "sector";
  for (char c : sector_name) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) t.push_back(static_cast<char>(std::tolower(u)));
  }
  return t;
}

inline std::vector<std::string> sector_substitute(std::vector<std::string> tokens,
                                                  const std::string& symbol,
                                                  const SectorMap& map) {
  std::string sym_lower = to_lower(symbol);
  std::string dummy = sector_token(map.sector(symbol));
  for (auto& t : tokens)
    if (t == sym_lower) t = dummy;
  return tokens;
}

}  // namespace pumpscan
