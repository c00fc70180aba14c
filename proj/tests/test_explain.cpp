#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "pumpscan/explain.hpp"

using namespace pumpscan;

namespace {

SparseVector sv(std::uint32_t dim, std::vector<std::pair<std::uint32_t, double>> entries) {
  SparseVector x;
  x.dim = dim;
  x.entries = std::move(entries);
  return x;
}

LogRegModel linear(std::vector<double> w, double bias) {
  LogRegModel m;
  m.weights = std::move(w);
  m.bias = bias;
  return m;
}

Vocabulary abc_vocab() {
  const std::vector<std::vector<std::string>> docs = {{"alpha"}, {"beta"}, {"gamma"}};
  return Vocabulary::build(docs, 1);
}

}  // namespace

TEST_CASE("linear models decompose exactly") {
  const AnyModel model = linear({2.0, -1.5, 0.5, 3.0}, 0.7);
  const SparseVector x = sv(4, {{0, 1.0}, {1, 2.0}, {3, 0.5}});
  const std::vector<SparseVector> background = {
      sv(4, {{0, 0.2}}), sv(4, {{1, 1.0}, {2, 4.0}}), sv(4, {})};

  // any multiple of the background size telescopes exactly
  const Attribution att = shapley_attribute(model, x, background, 6, 99);

  const double xb[4] = {1.0, 2.0, 0.0, 0.5};
  const double bbar[4] = {0.2 / 3, 1.0 / 3, 4.0 / 3, 0.0};
  const double w[4] = {2.0, -1.5, 0.5, 3.0};
  for (std::uint32_t f = 0; f < 4; ++f) {
    INFO("feature " << f);
    CHECK_THAT(att.value_of(f), Catch::Matchers::WithinAbs(w[f] * (xb[f] - bbar[f]), 1e-12));
  }
  CHECK_THAT(att.sum(), Catch::Matchers::WithinAbs(att.output - att.base, 1e-9));
  CHECK(att.output == decision_score(AnyModel{model}, x));
}

TEST_CASE("explaining an instance against itself yields nothing") {
  const AnyModel model = linear({1.0, 2.0}, -0.3);
  const SparseVector x = sv(2, {{0, 3.0}, {1, 1.0}});
  const Attribution att = shapley_attribute(model, x, {x}, 8, 5);
  for (const auto& [i, v] : att.values) CHECK(v == 0.0);
  CHECK(att.base == att.output);
}

TEST_CASE("monte carlo matches exhaustive shapley on a small mlp") {
  MlpModel mlp = init_mlp(3, {4}, 3);
  for (auto& layer : mlp.biases)
    for (std::size_t j = 0; j < layer.size(); ++j) layer[j] = 0.1 * (double(j) - 1.0);
  const AnyModel model = mlp;

  const double xv[3] = {1.0, 2.0, 0.5};
  const double bv[3] = {0.4, 0.0, 1.5};
  const SparseVector x = sv(3, {{0, xv[0]}, {1, xv[1]}, {2, xv[2]}});
  const SparseVector b = sv(3, {{0, bv[0]}, {2, bv[2]}});

  // coalition value: features in the mask take x's value, the rest keep b's
  auto f = [&](unsigned mask) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::uint32_t j = 0; j < 3; ++j)
      entries.emplace_back(j, (mask >> j & 1) ? xv[j] : bv[j]);
    return decision_score(model, sv(3, entries));
  };
  const double fact[4] = {1, 1, 2, 6};
  double exact[3];
  for (std::uint32_t i = 0; i < 3; ++i) {
    double phi = 0;
    for (unsigned mask = 0; mask < 8; ++mask) {
      const int s = __builtin_popcount(mask);
      if ((mask >> i & 1) || s > 2) continue;
      phi += fact[s] * fact[2 - s] / fact[3] * (f(mask | (1u << i)) - f(mask));
    }
    exact[i] = phi;
  }

  const Attribution att = shapley_attribute(model, x, {b}, 6000, 17);
  for (std::uint32_t i = 0; i < 3; ++i) {
    INFO("feature " << i << " exact " << exact[i]);
    CHECK_THAT(att.value_of(i), Catch::Matchers::WithinAbs(exact[i], 0.05));
  }
  // efficiency holds exactly regardless of sampling noise
  CHECK_THAT(att.sum(), Catch::Matchers::WithinAbs(att.output - att.base, 1e-9));
  CHECK_THAT(exact[0] + exact[1] + exact[2],
             Catch::Matchers::WithinAbs(att.output - att.base, 1e-9));
}

TEST_CASE("efficiency survives deep models and many backgrounds") {
  MlpModel mlp = init_mlp(6, {5, 3}, 11);
  const AnyModel model = mlp;
  Rng rng(23);
  const SparseVector x = sv(6, {{0, 1.0}, {2, 2.0}, {5, 0.25}});
  std::vector<SparseVector> background;
  for (int n = 0; n < 5; ++n) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::uint32_t j = 0; j < 6; ++j)
      if (uniform_double(rng) < 0.5) entries.emplace_back(j, uniform_range(rng, 0.0, 2.0));
    background.push_back(sv(6, entries));
  }
  const Attribution att = shapley_attribute(model, x, background, 2000, 31);
  CHECK_THAT(att.sum(), Catch::Matchers::WithinAbs(att.output - att.base,
                                                   1e-3 * std::abs(att.output - att.base) + 1e-6));
}

TEST_CASE("symmetric features earn equal credit") {
  // identical weights, identical values, identical background -> exact tie
  const AnyModel model = linear({1.7, 1.7, -0.4}, 0.0);
  const SparseVector x = sv(3, {{0, 2.0}, {1, 2.0}, {2, 1.0}});
  const std::vector<SparseVector> background = {sv(3, {{2, 3.0}})};
  const Attribution att = shapley_attribute(model, x, background, 10, 1);
  CHECK(att.value_of(0) == att.value_of(1));

  // mlp whose first layer treats features 0 and 1 identically
  MlpModel mlp = init_mlp(3, {3}, 7);
  const int n_in = 3;
  for (int j = 0; j < 3; ++j) mlp.weights[0][j * n_in + 1] = mlp.weights[0][j * n_in + 0];
  const AnyModel sym = mlp;
  const Attribution matt = shapley_attribute(sym, x, background, 6000, 2);
  CHECK_THAT(matt.value_of(0), Catch::Matchers::WithinAbs(matt.value_of(1), 0.02));
}

TEST_CASE("features the model ignores get zero attribution") {
  const AnyModel model = linear({3.0, 0.0, 1.0}, 0.5);
  const SparseVector x = sv(3, {{0, 1.0}, {1, 5.0}, {2, 2.0}});
  const std::vector<SparseVector> background = {sv(3, {}), sv(3, {{1, 9.0}})};
  const Attribution att = shapley_attribute(model, x, background, 20, 3);
  CHECK(att.value_of(1) == 0.0);

  MlpModel mlp = init_mlp(3, {2}, 5);
  for (std::size_t j = 0; j < 2; ++j) mlp.weights[0][j * 3 + 1] = 0.0;
  const Attribution matt = shapley_attribute(AnyModel{mlp}, x, background, 20, 3);
  CHECK(matt.value_of(1) == 0.0);
}

TEST_CASE("attributions do not depend on the thread count") {
  MlpModel mlp = init_mlp(5, {4}, 13);
  const AnyModel model = mlp;
  const SparseVector x = sv(5, {{0, 1.0}, {1, 2.0}, {3, 1.5}, {4, 0.5}});
  const std::vector<SparseVector> background = {sv(5, {{2, 1.0}}), sv(5, {}),
                                                sv(5, {{0, 0.5}, {4, 2.0}})};
  const Attribution serial = shapley_attribute(model, x, background, 99, 7, 1);
  const Attribution parallel = shapley_attribute(model, x, background, 99, 7, 4);
  REQUIRE(serial.values.size() == parallel.values.size());
  for (std::size_t p = 0; p < serial.values.size(); ++p) {
    CHECK(serial.values[p].first == parallel.values[p].first);
    CHECK(serial.values[p].second == parallel.values[p].second);  // bitwise
  }
}

TEST_CASE("attribution input validation") {
  const AnyModel model = linear({1.0, 1.0}, 0.0);
  const SparseVector x = sv(2, {{0, 1.0}});
  CHECK_THROWS_AS(shapley_attribute(model, x, {sv(3, {})}, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(shapley_attribute(model, x, {}, 10, 0), ConfigError);
  CHECK_THROWS_AS(shapley_attribute(model, x, {sv(2, {})}, 0, 0), ConfigError);

  // empty support: nothing to explain, base and output still reported
  const Attribution att = shapley_attribute(model, sv(2, {}), {sv(2, {})}, 4, 0);
  CHECK(att.values.empty());
  CHECK(att.sum() == 0.0);
  CHECK(att.base == 0.0);
}

TEST_CASE("attribution lookup helpers") {
  Attribution att;
  att.values = {{1, -2.5}, {4, 0.5}};
  CHECK(att.value_of(1) == -2.5);
  CHECK(att.value_of(4) == 0.5);
  CHECK(att.value_of(0) == 0.0);
  CHECK(att.value_of(9) == 0.0);
  CHECK(att.sum() == -2.0);
}

TEST_CASE("impact ranking surfaces the heavy feature first") {
  const AnyModel model = linear({0.1, 0.0, 5.0}, 0.0);
  const Vocabulary vocab = abc_vocab();
  REQUIRE(vocab.term_of(0) == "alpha");
  REQUIRE(vocab.term_of(2) == "gamma");

  std::vector<SparseVector> instances = {sv(3, {{0, 1.0}, {1, 1.0}, {2, 1.0}}),
                                         sv(3, {{0, 2.0}, {2, 0.5}})};
  const std::vector<SparseVector> background = {sv(3, {})};
  const ImpactRanking full =
      rank_impact(model, instances, background, 10, 42, 10, vocab);
  REQUIRE(full.terms.size() == 3);
  CHECK(full.terms[0].first == "gamma");
  CHECK(full.terms[1].first == "alpha");
  CHECK(full.terms[2].first == "beta");
  CHECK(full.terms[2].second == 0.0);
  // mean |value| over both instances: gamma = (5*1 + 5*0.5)/2
  CHECK_THAT(full.terms[0].second, Catch::Matchers::WithinAbs(3.75, 1e-9));

  const ImpactRanking top2 = rank_impact(model, instances, background, 10, 42, 2, vocab);
  REQUIRE(top2.terms.size() == 2);
  CHECK(top2.terms[0].first == "gamma");

  CHECK_THROWS_AS(rank_impact(model, {}, background, 10, 42, 2, vocab), ConfigError);
}

TEST_CASE("attribution and ranking files") {
  const Vocabulary vocab = abc_vocab();
  Attribution att;
  att.values = {{0, 0.5}, {1, -2.5}, {2, 1.0}};
  std::ostringstream out;
  write_attribution(out, att, vocab);
  CHECK(out.str() == "term,value\nbeta,-2.5\ngamma,1\nalpha,0.5\n");

  ImpactRanking ranking;
  ranking.terms = {{"gamma", 3.75}, {"alpha", 0.15}};
  std::ostringstream rout;
  write_ranking(rout, ranking);
  CHECK(rout.str() == "rank,term,mean_abs_value\n1,gamma,3.75\n2,alpha,0.15\n");
}
