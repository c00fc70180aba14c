#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>
#include <vector>

#include "pumpscan/evaluation.hpp"

using namespace pumpscan;

namespace {

LabeledDocument doc(std::string id, std::vector<std::string> tokens, Label label) {
  LabeledDocument d;
  d.id = std::move(id);
  d.kind = DocKind::post;
  d.tokens = std::move(tokens);
  d.label = label;
  return d;
}

// A corpus a linear model separates perfectly: P&D docs talk about pumps,
// the rest about earnings, with one shared token so the vocab overlaps.
std::vector<LabeledDocument> separable_corpus(std::size_t n_pos, std::size_t n_neg) {
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n_pos; ++i)
    docs.push_back(doc("p" + std::to_string(i), {"pump", "moon", "stock"}, Label::pnd));
  for (std::size_t i = 0; i < n_neg; ++i)
    docs.push_back(doc("n" + std::to_string(i), {"hold", "earnings", "stock"}, Label::not_pnd));
  return docs;
}

bool same_metrics(const Metrics& a, const Metrics& b) {
  return a.accuracy == b.accuracy && a.precision == b.precision && a.recall == b.recall &&
         a.f1 == b.f1;
}

}  // namespace

TEST_CASE("confusion matrix counts the four cells") {
  const std::vector<Label> truth = {Label::pnd, Label::pnd, Label::not_pnd, Label::not_pnd,
                                    Label::pnd};
  const std::vector<Label> pred = {Label::pnd, Label::not_pnd, Label::pnd, Label::not_pnd,
                                   Label::pnd};
  const ConfusionMatrix cm = confusion(pred, truth);
  CHECK(cm.tp == 2);
  CHECK(cm.fn == 1);
  CHECK(cm.fp == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.total() == 5);
  CHECK_THROWS_AS(confusion({Label::pnd}, {}), std::invalid_argument);
}

TEST_CASE("metrics reproduce the published post-classifier numbers") {
  // logistic regression on posts
  const Metrics lr = metrics({2304, 2068, 13481, 702});
  CHECK_THAT(lr.accuracy, Catch::Matchers::WithinAbs(85.07, 0.005));
  CHECK_THAT(lr.precision, Catch::Matchers::WithinAbs(52.70, 0.005));
  CHECK_THAT(lr.recall, Catch::Matchers::WithinAbs(76.65, 0.005));
  CHECK_THAT(lr.f1, Catch::Matchers::WithinAbs(62.46, 0.005));
  CHECK_THAT(false_positive_rate({2304, 2068, 13481, 702}),
             Catch::Matchers::WithinAbs(13.30, 0.005));

  // the neural net does better across the board
  const Metrics nn = metrics({2382, 1718, 13831, 624});
  CHECK_THAT(nn.accuracy, Catch::Matchers::WithinAbs(87.38, 0.005));
  CHECK_THAT(nn.precision, Catch::Matchers::WithinAbs(58.10, 0.005));
  CHECK_THAT(nn.recall, Catch::Matchers::WithinAbs(79.24, 0.005));
  CHECK_THAT(nn.f1, Catch::Matchers::WithinAbs(67.04, 0.005));
}

TEST_CASE("zero denominators flag instead of dividing") {
  // no positive predictions at all
  const Metrics no_pos_pred = metrics({0, 0, 8, 2});
  CHECK(no_pos_pred.undefined_precision);
  CHECK(no_pos_pred.precision == 0);
  CHECK_FALSE(no_pos_pred.undefined_recall);
  CHECK(no_pos_pred.undefined_f1);
  CHECK(no_pos_pred.f1 == 0);

  // no positive records in the fold
  const Metrics no_pos_truth = metrics({0, 3, 7, 0});
  CHECK(no_pos_truth.undefined_recall);
  CHECK(no_pos_truth.recall == 0);
  CHECK_FALSE(no_pos_truth.undefined_precision);

  CHECK(false_positive_rate({1, 0, 0, 1}) == 0);
  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("f1 is zero exactly when there are no true positives") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    ConfusionMatrix cm;
    cm.tp = uniform_index(rng, 4);  // 0..3, zero often
    cm.fp = uniform_index(rng, 5);
    cm.tn = uniform_index(rng, 5);
    cm.fn = uniform_index(rng, 5);
    if (cm.total() == 0) continue;
    const Metrics m = metrics(cm);
    INFO("tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn << " fn=" << cm.fn);
    CHECK((m.f1 == 0) == (cm.tp == 0));
    CHECK((m.f1 > 0) == (cm.tp > 0));
  }
}

TEST_CASE("metrics are invariant to scaling all counts") {
  const ConfusionMatrix base{23, 17, 131, 9};
  const Metrics m1 = metrics(base);
  for (std::size_t k : {2, 7, 1000}) {
    const Metrics mk = metrics({base.tp * k, base.fp * k, base.tn * k, base.fn * k});
    CHECK_THAT(mk.accuracy, Catch::Matchers::WithinAbs(m1.accuracy, 1e-9));
    CHECK_THAT(mk.precision, Catch::Matchers::WithinAbs(m1.precision, 1e-9));
    CHECK_THAT(mk.recall, Catch::Matchers::WithinAbs(m1.recall, 1e-9));
    CHECK_THAT(mk.f1, Catch::Matchers::WithinAbs(m1.f1, 1e-9));
  }
}

TEST_CASE("stratified folds balance both classes") {
  SECTION("ten records, five folds, one of each class per fold") {
    std::vector<Label> labels;
    for (int i = 0; i < 5; ++i) labels.push_back(Label::pnd);
    for (int i = 0; i < 5; ++i) labels.push_back(Label::not_pnd);
    const auto folds = stratified_kfold(labels, 5, 1);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) {
      REQUIRE(f.size() == 2);
      int pos = 0;
      for (std::size_t i : f) pos += labels[i] == Label::pnd;
      CHECK(pos == 1);
    }
  }
  SECTION("nine percent positives split five ways") {
    std::vector<Label> labels;
    for (int i = 0; i < 1000; ++i) labels.push_back(i < 90 ? Label::pnd : Label::not_pnd);
    const auto folds = stratified_kfold(labels, 5, 42);
    for (const auto& f : folds) {
      CHECK(f.size() == 200);
      std::size_t pos = 0;
      for (std::size_t i : f) pos += labels[i] == Label::pnd;
      CHECK(pos == 18);
    }
  }
}

TEST_CASE("stratified folds partition the records") {
  std::vector<Label> labels;
  for (int i = 0; i < 137; ++i) labels.push_back(i % 4 == 0 ? Label::pnd : Label::not_pnd);
  const auto folds = stratified_kfold(labels, 4, 7);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& f : folds) {
    CHECK(std::is_sorted(f.begin(), f.end()));
    for (std::size_t i : f) {
      CHECK(i < labels.size());
      seen.insert(i);
    }
    total += f.size();
  }
  CHECK(total == labels.size());
  CHECK(seen.size() == labels.size());  // disjoint and complete
}

TEST_CASE("fold assignment is seeded") {
  std::vector<Label> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i % 3 == 0 ? Label::pnd : Label::not_pnd);
  CHECK(stratified_kfold(labels, 5, 9) == stratified_kfold(labels, 5, 9));
  CHECK(stratified_kfold(labels, 5, 9) != stratified_kfold(labels, 5, 10));
}

TEST_CASE("fold construction rejects impossible splits") {
  std::vector<Label> labels(10, Label::not_pnd);
  labels[0] = labels[1] = labels[2] = Label::pnd;
  CHECK_THROWS_AS(stratified_kfold(labels, 1, 0), ConfigError);
  CHECK_THROWS_AS(stratified_kfold(labels, 5, 0), DataError);  // only 3 positives
  CHECK_NOTHROW(stratified_kfold(labels, 3, 0));
}

TEST_CASE("aggregation computes mean, sample std and summed confusion") {
  FoldReport r;
  r.fold_confusions = {{1, 0, 1, 0}, {0, 1, 0, 1}, {2, 1, 3, 0}};
  for (const auto& cm : r.fold_confusions) r.folds.push_back(metrics(cm));
  aggregate_folds(r);
  CHECK(r.total.tp == 3);
  CHECK(r.total.fp == 2);
  CHECK(r.total.tn == 4);
  CHECK(r.total.fn == 1);

  // accuracies are 100, 0, 5/6*100; mean and k-1 std by hand
  const double a0 = 100.0, a1 = 0.0, a2 = 500.0 / 6.0;
  const double mean = (a0 + a1 + a2) / 3.0;
  const double var =
      ((a0 - mean) * (a0 - mean) + (a1 - mean) * (a1 - mean) + (a2 - mean) * (a2 - mean)) / 2.0;
  CHECK_THAT(r.mean.accuracy, Catch::Matchers::WithinAbs(mean, 1e-9));
  CHECK_THAT(r.stddev.accuracy, Catch::Matchers::WithinAbs(std::sqrt(var), 1e-9));
}

TEST_CASE("identical folds aggregate to zero spread") {
  FoldReport r;
  for (int i = 0; i < 4; ++i) r.fold_confusions.push_back({5, 1, 10, 2});
  for (const auto& cm : r.fold_confusions) r.folds.push_back(metrics(cm));
  aggregate_folds(r);
  CHECK(r.stddev.accuracy == 0);
  CHECK(r.stddev.precision == 0);
  CHECK(r.stddev.recall == 0);
  CHECK(r.stddev.f1 == 0);
  CHECK(r.mean.f1 == r.folds[0].f1);
  CHECK(r.total.tp == 20);
}

TEST_CASE("model type names parse") {
  CHECK(model_type_from("logreg") == ModelSpec::Type::logreg);
  CHECK(model_type_from("mlp") == ModelSpec::Type::mlp);
  CHECK_THROWS_AS(model_type_from("forest"), ConfigError);
}

TEST_CASE("cross validation nails a separable corpus") {
  const auto docs = separable_corpus(30, 70);
  ModelSpec spec;
  spec.type = ModelSpec::Type::logreg;
  spec.config.epochs = 40;
  spec.config.learning_rate = 0.5;
  spec.config.batch_size = 16;
  const FoldReport r = cross_validate(docs, spec, 5, 42);
  REQUIRE(r.folds.size() == 5);
  CHECK(r.mean.accuracy > 99.0);
  CHECK(r.mean.f1 > 99.0);
  CHECK(r.total.total() == docs.size());  // every record scored exactly once
  CHECK(r.total.tp + r.total.fn == 30);
}

TEST_CASE("cross validation results do not depend on the thread count") {
  const auto docs = separable_corpus(20, 40);
  ModelSpec spec;
  spec.type = ModelSpec::Type::mlp;
  spec.config.hidden = {4};
  spec.config.epochs = 15;
  spec.config.batch_size = 8;
  const FoldReport serial = cross_validate(docs, spec, 4, 7, 1);
  const FoldReport parallel = cross_validate(docs, spec, 4, 7, 4);
  REQUIRE(serial.folds.size() == parallel.folds.size());
  for (std::size_t f = 0; f < serial.folds.size(); ++f) {
    CHECK(same_metrics(serial.folds[f], parallel.folds[f]));
    CHECK(serial.fold_confusions[f].tp == parallel.fold_confusions[f].tp);
    CHECK(serial.fold_confusions[f].fp == parallel.fold_confusions[f].fp);
    CHECK(serial.fold_confusions[f].tn == parallel.fold_confusions[f].tn);
    CHECK(serial.fold_confusions[f].fn == parallel.fold_confusions[f].fn);
  }
  CHECK(same_metrics(serial.mean, parallel.mean));
  CHECK(same_metrics(serial.stddev, parallel.stddev));
}

TEST_CASE("fold report renders text and csv") {
  FoldReport r;
  r.fold_confusions = {{1, 1, 1, 1}, {2, 0, 2, 0}};
  for (const auto& cm : r.fold_confusions) r.folds.push_back(metrics(cm));
  aggregate_folds(r);

  const std::string text = format_fold_report(r);
  CHECK(text.find("Fold    TP      FP      TN      FN      Accuracy   Precision  Recall     F1") ==
        0);
  CHECK(text.find("\ntotal") != std::string::npos);
  CHECK(text.find("±") != std::string::npos);

  std::ostringstream csv;
  write_fold_report_csv(csv, r);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "fold,tp,fp,tn,fn,accuracy,precision,recall,f1");
  std::getline(lines, line);
  CHECK(line == "1,1,1,1,1,50.00,50.00,50.00,50.00");
  std::getline(lines, line);
  CHECK(line == "2,2,0,2,0,100.00,100.00,100.00,100.00");
  std::getline(lines, line);
  CHECK(line == "mean,,,,,75.00,75.00,75.00,75.00");
  std::getline(lines, line);
  CHECK(line.rfind("std,,,,,", 0) == 0);
  std::getline(lines, line);
  CHECK(line == "total,3,1,3,1,,,,");
}
