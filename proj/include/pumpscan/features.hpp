// Bag-of-words features: vocabulary with a deterministic order (frequency
// descending, then lexicographic), sparse count vectors, balanced class
// weights, and an optional tf-idf reweighting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly ascending index
  std::uint32_t dim = 0;

  double total() const {
    double s = 0;
    for (const auto& [i, v] : entries) s += v;
    return s;
  }
};

class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const { return terms_.size(); }
  std::size_t min_count() const { return min_count_; }
  const std::string& term_of(std::size_t index) const { return terms_.at(index); }
  std::size_t count_of(std::size_t index) const { return counts_.at(index); }

  std::optional<std::uint32_t> find(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  template <typename DocRange>
  static Vocabulary build(const DocRange& docs, std::size_t min_count = 1) {
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& doc : docs)
      for (const auto& t : doc) ++freq[t];
    std::vector<std::pair<std::string, std::size_t>> kept;
    kept.reserve(freq.size());
    for (auto& [term, n] : freq)
      if (n >= min_count) kept.emplace_back(term, n);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocabulary v;
    v.min_count_ = min_count;
    v.terms_.reserve(kept.size());
    v.counts_.reserve(kept.size());
    for (auto& [term, n] : kept) {
      v.index_.emplace(term, static_cast<std::uint32_t>(v.terms_.size()));
      v.terms_.push_back(std::move(term));
      v.counts_.push_back(n);
    }
    return v;
  }

  // FNV-1a over "term\tindex\n" lines; identifies the vocabulary a model was
  // trained against without storing it in the checkpoint.
  std::string hash() const {
    std::string buf;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      buf += terms_[i];
      buf += '\t';
      buf += std::to_string(i);
      buf += '\n';
    }
    return to_hex(fnv1a64(buf));
  }

  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < terms_.size(); ++i)
      out << terms_[i] << '\t' << i << '\t' << counts_[i] << '\n';
  }

  static Vocabulary parse(std::istream& in) {
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string> cols = split(line, '\t');
      if (cols.size() != 3) throw ParseError(lineno, "expected term<TAB>index<TAB>count");
      std::size_t index = static_cast<std::size_t>(parse_int(cols[1], lineno, "index"));
      if (index != v.terms_.size())
        throw ParseError(lineno, "vocabulary indices must be contiguous");
      if (!v.index_.emplace(cols[0], static_cast<std::uint32_t>(index)).second)
        throw ParseError(lineno, "duplicate term in vocabulary");
      v.terms_.push_back(cols[0]);
      v.counts_.push_back(static_cast<std::size_t>(parse_int(cols[2], lineno, "count")));
    }
    return v;
  }

  static Vocabulary parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary: " + path);
    return parse(in);
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t min_count_ = 1;
};

inline SparseVector vectorize(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokens)
    if (auto idx = vocab.find(t)) counts[*idx] += 1.0;
  SparseVector v;
  v.dim = static_cast<std::uint32_t>(vocab.size());
  v.entries.assign(counts.begin(), counts.end());
  return v;
}

struct ClassWeights {
  double weight_not = 1.0;
  double weight_pnd = 1.0;

  double of(Label l) const { return l == Label::pnd ? weight_pnd : weight_not; }
};

// Balanced scheme w_c = N / (2 * N_c), so the weighted sizes of both classes
// match and sum back to N.
inline ClassWeights class_weights(const std::vector<Label>& labels) {
  std::size_t n_pnd = 0;
  for (Label l : labels)
    if (l == Label::pnd) ++n_pnd;
  std::size_t n_not = labels.size() - n_pnd;
  if (n_pnd == 0 || n_not == 0) throw DataError("class weights need both classes present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(n_not)), n / (2.0 * static_cast<double>(n_pnd))};
}

// Optional reweighting; disabled by default since raw counts are the baseline
// representation. idf is the smoothed form ln((1+N)/(1+df)) + 1, which stays
// finite when a term never occurs in the fitting corpus.
class TfidfTransform {
 public:
  TfidfTransform() = default;

  static TfidfTransform fit(const std::vector<SparseVector>& corpus, std::size_t vocab_size) {
    TfidfTransform t;
    std::vector<std::size_t> df(vocab_size, 0);
    for (const auto& v : corpus)
      for (const auto& [i, count] : v.entries)
        if (count > 0) ++df[i];
    const double n = static_cast<double>(corpus.size());
    t.idf_.resize(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i)
      t.idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
    return t;
  }

  SparseVector apply(const SparseVector& v) const {
    SparseVector out = v;
    for (auto& [i, value] : out.entries) value *= idf_[i];
    return out;
  }

  const std::vector<double>& idf() const { return idf_; }

 private:
  std::vector<double> idf_;
};

}  // namespace pumpscan
