// Stratified k-fold cross-validation and the metric suite: accuracy,
// precision, recall, F1 as percentages, with per-fold mean and sample
// standard deviation, plus the confusion totals across folds.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "pumpscan/features.hpp"
#include "pumpscan/labeling.hpp"
#include "pumpscan/models.hpp"
#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

// P&D is the positive class throughout.
inline ConfusionMatrix confusion(const std::vector<Label>& predictions,
                                 const std::vector<Label>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion: prediction/label length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == Label::pnd;
    const bool truth = labels[i] == Label::pnd;
    if (pred && truth) ++cm.tp;
    else if (pred && !truth) ++cm.fp;
    else if (!pred && truth) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;  // percentages
  // Zero-denominator ratios are reported as 0 and flagged.
  bool undefined_precision = false, undefined_recall = false, undefined_f1 = false;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
  Metrics m;
  m.accuracy = 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp == 0) m.undefined_precision = true;
  else m.precision = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn == 0) m.undefined_recall = true;
  else m.recall = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (m.precision + m.recall == 0) m.undefined_f1 = true;
  else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline double false_positive_rate(const ConfusionMatrix& cm) {
  if (cm.fp + cm.tn == 0) return 0;
  return 100.0 * static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn);
}

// Per-class shuffle, then a round-robin deal staggered by class so fold sizes
// stay balanced. Every fold ends up within one record of the global class
// proportions.
inline std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<Label>& labels,
                                                              std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2");
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i] == Label::pnd ? 1 : 0].push_back(i);
  for (std::size_t c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw DataError("class with " + std::to_string(by_class[c].size()) +
                      " records cannot be split into " + std::to_string(k) + " folds");
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, c));
    shuffle_inplace(by_class[c], rng);
    for (std::size_t i = 0; i < by_class[c].size(); ++i)
      folds[(i + c) % k].push_back(by_class[c][i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct FoldReport {
  std::vector<Metrics> folds;
  std::vector<ConfusionMatrix> fold_confusions;
  Metrics mean;
  Metrics stddev;  // sample std, k-1 divisor
  ConfusionMatrix total;
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& stddev) {
  mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  stddev = 0;
  if (xs.size() > 1) {
    double s = 0;
    for (double x : xs) s += (x - mean) * (x - mean);
    stddev = std::sqrt(s / static_cast<double>(xs.size() - 1));
  }
}

}  // namespace detail

inline void aggregate_folds(FoldReport& report) {
  auto collect = [&](auto member) {
    std::vector<double> xs;
    for (const auto& m : report.folds) xs.push_back(m.*member);
    return xs;
  };
  detail::mean_std(collect(&Metrics::accuracy), report.mean.accuracy, report.stddev.accuracy);
  detail::mean_std(collect(&Metrics::precision), report.mean.precision, report.stddev.precision);
  detail::mean_std(collect(&Metrics::recall), report.mean.recall, report.stddev.recall);
  detail::mean_std(collect(&Metrics::f1), report.mean.f1, report.stddev.f1);
  report.total = ConfusionMatrix{};
  for (const auto& cm : report.fold_confusions) {
    report.total.tp += cm.tp;
    report.total.fp += cm.fp;
    report.total.tn += cm.tn;
    report.total.fn += cm.fn;
  }
}

struct ModelSpec {
  enum class Type { logreg, mlp };
  Type type = Type::mlp;
  TrainConfig config;
  bool auto_class_weights = true;  // recompute weights from each training fold
  std::size_t min_count = 1;
  bool use_tfidf = false;
};

inline ModelSpec::Type model_type_from(const std::string& s) {
  if (s == "logreg") return ModelSpec::Type::logreg;
  if (s == "mlp") return ModelSpec::Type::mlp;
  throw ConfigError("unknown model type: " + s + " (expected logreg or mlp)");
}

// Train on k-1 folds, evaluate the held-out fold. The vocabulary is rebuilt
// from each training split so no test-fold terms leak into the features.
// Folds are independent and run in parallel when threads > 1; results are
// identical either way.
inline FoldReport cross_validate(const std::vector<LabeledDocument>& docs, const ModelSpec& spec,
                                 std::size_t k, std::uint64_t seed, int threads = 1) {
  std::vector<Label> labels(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) labels[i] = docs[i].label;
  const auto folds = stratified_kfold(labels, k, seed);

  FoldReport report;
  report.folds.resize(k);
  report.fold_confusions.resize(k);

  parallel_for(k, threads, [&](std::size_t f) {
    std::vector<std::size_t> train_idx, test_idx = folds[f];
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());

    std::vector<std::vector<std::string>> train_tokens;
    train_tokens.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_tokens.push_back(docs[i].tokens);
    const Vocabulary vocab = Vocabulary::build(train_tokens, spec.min_count);

    std::vector<SparseVector> X_train, X_test;
    std::vector<Label> y_train, y_test;
    X_train.reserve(train_idx.size());
    for (std::size_t i : train_idx) {
      X_train.push_back(vectorize(docs[i].tokens, vocab));
      y_train.push_back(docs[i].label);
    }
    for (std::size_t i : test_idx) {
      X_test.push_back(vectorize(docs[i].tokens, vocab));
      y_test.push_back(docs[i].label);
    }
    if (spec.use_tfidf) {
      const TfidfTransform tfidf = TfidfTransform::fit(X_train, vocab.size());
      for (auto& x : X_train) x = tfidf.apply(x);
      for (auto& x : X_test) x = tfidf.apply(x);
    }

    TrainConfig cfg = spec.config;
    if (spec.auto_class_weights) {
      const ClassWeights w = class_weights(y_train);
      cfg.weight_not = w.weight_not;
      cfg.weight_pnd = w.weight_pnd;
    }

    AnyModel model;
    if (spec.type == ModelSpec::Type::logreg)
      model = train_logreg(X_train, y_train, cfg).model;
    else
      model = train_mlp(X_train, y_train, cfg).model;

    std::vector<Label> preds;
    preds.reserve(X_test.size());
    for (const auto& x : X_test)
      preds.push_back(predict(model, x) > 0.5 ? Label::pnd : Label::not_pnd);
    report.fold_confusions[f] = confusion(preds, y_test);
    report.folds[f] = metrics(report.fold_confusions[f]);
  });

  aggregate_folds(report);
  return report;
}

inline std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Human-readable table: one row per fold, then mean (± std) and the summed
// confusion counts.
inline std::string format_fold_report(const FoldReport& r) {
  std::string out =
      "Fold    TP      FP      TN      FN      Accuracy   Precision  Recall     F1\n";
  auto row = [](const std::string& name, const ConfusionMatrix& cm, const Metrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-7s %-7zu %-7zu %-7zu %-7zu %-10.2f %-10.2f %-10.2f %-10.2f\n",
                  name.c_str(), cm.tp, cm.fp, cm.tn, cm.fn, m.accuracy, m.precision, m.recall,
                  m.f1);
    return std::string(buf);
  };
  for (std::size_t f = 0; f < r.folds.size(); ++f)
    out += row(std::to_string(f + 1), r.fold_confusions[f], r.folds[f]);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%-7s %-7zu %-7zu %-7zu %-7zu %.2f (±%.2f)  %.2f (±%.2f)  %.2f (±%.2f)  "
                "%.2f (±%.2f)\n",
                "total", r.total.tp, r.total.fp, r.total.tn, r.total.fn, r.mean.accuracy,
                r.stddev.accuracy, r.mean.precision, r.stddev.precision, r.mean.recall,
                r.stddev.recall, r.mean.f1, r.stddev.f1);
  out += buf;
  return out;
}

inline void write_fold_report_csv(std::ostream& out, const FoldReport& r) {
  out << "fold,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto& cm = r.fold_confusions[f];
    const auto& m = r.folds[f];
    out << (f + 1) << ',' << cm.tp << ',' << cm.fp << ',' << cm.tn << ',' << cm.fn << ','
        << format_pct(m.accuracy) << ',' << format_pct(m.precision) << ',' << format_pct(m.recall)
        << ',' << format_pct(m.f1) << '\n';
  }
  out << "mean,,,,," << format_pct(r.mean.accuracy) << ',' << format_pct(r.mean.precision) << ','
      << format_pct(r.mean.recall) << ',' << format_pct(r.mean.f1) << '\n';
  out << "std,,,,," << format_pct(r.stddev.accuracy) << ',' << format_pct(r.stddev.precision)
      << ',' << format_pct(r.stddev.recall) << ',' << format_pct(r.stddev.f1) << '\n';
  out << "total," << r.total.tp << ',' << r.total.fp << ',' << r.total.tn << ',' << r.total.fn
      << ",,,,\n";
}

}  // namespace pumpscan
