// Monte Carlo Shapley attribution of the decision score (the pre-sigmoid
// logit, so linear models decompose exactly into w_i * (x_i - b_i)).
//
// Each sample walks one random permutation of the union support of x and the
// background set, flipping features from a background instance's value to
// x's value and recording the marginal score change. Background instances are
// cycled round-robin, which keeps the telescoped sum equal to
// f(x) - mean f(b) whenever samples is a multiple of the background size.
// Sample s always uses the seed derived for s, so results do not depend on
// the thread count.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pumpscan/features.hpp"
#include "pumpscan/models.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

struct Attribution {
  std::vector<std::pair<std::uint32_t, double>> values;  // ascending feature index
  double base = 0;    // mean decision score over the full background set
  double output = 0;  // decision score at x

  double value_of(std::uint32_t feature) const {
    auto it = std::lower_bound(values.begin(), values.end(), feature,
                               [](const auto& p, std::uint32_t f) { return p.first < f; });
    return (it != values.end() && it->first == feature) ? it->second : 0.0;
  }

  double sum() const {
    double s = 0;
    for (const auto& [i, v] : values) s += v;
    return s;
  }
};

namespace detail {

// Incremental decision-score evaluation under single-feature flips. For the
// MLP only the first layer touches the input, so a flip is a rank-one update
// of the first pre-activation vector followed by a dense pass through the
// (small) upper layers.
class ScoreEvaluator {
 public:
  explicit ScoreEvaluator(const AnyModel& model) : model_(&model) {}

  void reset(const std::vector<std::uint32_t>& features, const std::vector<double>& values) {
    if (const auto* lr = std::get_if<LogRegModel>(model_)) {
      z_ = lr->bias;
      for (std::size_t p = 0; p < features.size(); ++p) z_ += lr->weights[features[p]] * values[p];
    } else {
      const auto& mlp = std::get<MlpModel>(*model_);
      z1_ = mlp.biases[0];
      const int n_in = mlp.sizes[0];
      for (std::size_t p = 0; p < features.size(); ++p) {
        const double v = values[p];
        if (v == 0) continue;
        for (std::size_t j = 0; j < z1_.size(); ++j)
          z1_[j] += mlp.weights[0][j * n_in + features[p]] * v;
      }
    }
  }

  void update(std::uint32_t feature, double delta) {
    if (const auto* lr = std::get_if<LogRegModel>(model_)) {
      z_ += lr->weights[feature] * delta;
    } else {
      const auto& mlp = std::get<MlpModel>(*model_);
      const int n_in = mlp.sizes[0];
      for (std::size_t j = 0; j < z1_.size(); ++j)
        z1_[j] += mlp.weights[0][j * n_in + feature] * delta;
    }
  }

  double score() const {
    if (std::holds_alternative<LogRegModel>(*model_)) return z_;
    const auto& mlp = std::get<MlpModel>(*model_);
    std::vector<double> act(z1_.size());
    for (std::size_t j = 0; j < z1_.size(); ++j) act[j] = z1_[j] > 0 ? z1_[j] : 0.0;
    for (std::size_t l = 1; l < mlp.weights.size(); ++l) {
      const int n_out = mlp.sizes[l + 1];
      const int n_in = mlp.sizes[l];
      std::vector<double> z(mlp.biases[l]);
      for (int j = 0; j < n_out; ++j) {
        const double* row = mlp.weights[l].data() + static_cast<std::size_t>(j) * n_in;
        double s = z[j];
        for (int i = 0; i < n_in; ++i) s += row[i] * act[i];
        z[j] = s;
      }
      if (l + 1 < mlp.weights.size()) {
        act.resize(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) act[j] = z[j] > 0 ? z[j] : 0.0;
      } else {
        act = z;
      }
    }
    return act[0];
  }

 private:
  const AnyModel* model_;
  double z_ = 0;              // logreg running score
  std::vector<double> z1_;    // mlp first-layer pre-activations
};

inline std::vector<double> densify(const SparseVector& x,
                                   const std::vector<std::uint32_t>& support) {
  std::vector<double> out(support.size(), 0.0);
  std::size_t p = 0;
  for (const auto& [i, v] : x.entries) {
    while (p < support.size() && support[p] < i) ++p;
    if (p < support.size() && support[p] == i) out[p] = v;
  }
  return out;
}

}  // namespace detail

inline Attribution shapley_attribute(const AnyModel& model, const SparseVector& x,
                                     const std::vector<SparseVector>& background,
                                     std::size_t samples, std::uint64_t seed, int threads = 1) {
  if (samples < 1) throw ConfigError("shapley needs samples >= 1");
  if (background.empty()) throw ConfigError("shapley needs a non-empty background set");
  for (const auto& b : background)
    if (b.dim != x.dim) throw std::invalid_argument("background dimension mismatch");

  std::vector<std::uint32_t> support;
  {
    std::vector<bool> seen(x.dim, false);
    for (const auto& [i, v] : x.entries) seen[i] = true;
    for (const auto& b : background)
      for (const auto& [i, v] : b.entries) seen[i] = true;
    for (std::uint32_t i = 0; i < x.dim; ++i)
      if (seen[i]) support.push_back(i);
  }

  Attribution att;
  att.output = decision_score(model, x);
  att.base = 0;
  for (const auto& b : background) att.base += decision_score(model, b);
  att.base /= static_cast<double>(background.size());
  if (support.empty()) return att;

  const std::vector<double> x_vals = detail::densify(x, support);
  std::vector<std::vector<double>> b_vals;
  b_vals.reserve(background.size());
  for (const auto& b : background) b_vals.push_back(detail::densify(b, support));

  std::vector<std::vector<double>> per_sample(samples);
  parallel_for(samples, threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    std::vector<std::size_t> perm(support.size());
    for (std::size_t p = 0; p < perm.size(); ++p) perm[p] = p;
    shuffle_inplace(perm, rng);

    const std::vector<double>& b0 = b_vals[s % b_vals.size()];
    std::vector<double> cur = b0;
    detail::ScoreEvaluator eval(model);
    eval.reset(support, cur);
    double prev = eval.score();

    std::vector<double> contrib(support.size(), 0.0);
    for (std::size_t p : perm) {
      const double delta = x_vals[p] - cur[p];
      if (delta != 0) {
        eval.update(support[p], delta);
        cur[p] = x_vals[p];
        const double now = eval.score();
        contrib[p] = now - prev;
        prev = now;
      }
    }
    per_sample[s] = std::move(contrib);
  });

  std::vector<double> totals(support.size(), 0.0);
  for (const auto& contrib : per_sample)
    for (std::size_t p = 0; p < totals.size(); ++p) totals[p] += contrib[p];
  att.values.reserve(support.size());
  for (std::size_t p = 0; p < support.size(); ++p)
    att.values.emplace_back(support[p], totals[p] / static_cast<double>(samples));
  return att;
}

struct ImpactRanking {
  std::vector<std::pair<std::string, double>> terms;  // descending mean |value|
};

inline ImpactRanking rank_impact(const AnyModel& model, const std::vector<SparseVector>& instances,
                                 const std::vector<SparseVector>& background, std::size_t samples,
                                 std::uint64_t seed, std::size_t top_n, const Vocabulary& vocab,
                                 int threads = 1) {
  if (instances.empty()) throw ConfigError("rank_impact needs at least one instance");
  std::unordered_map<std::uint32_t, double> abs_sum;
  for (std::size_t n = 0; n < instances.size(); ++n) {
    Attribution att =
        shapley_attribute(model, instances[n], background, samples, derive_seed(seed, n), threads);
    for (const auto& [i, v] : att.values) abs_sum[i] += std::abs(v);
  }
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(abs_sum.size());
  for (const auto& [i, s] : abs_sum)
    ranked.emplace_back(vocab.term_of(i), s / static_cast<double>(instances.size()));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_n) ranked.resize(top_n);
  return {std::move(ranked)};
}

// term,value rows ordered by |value| descending (ties by term).
inline void write_attribution(std::ostream& out, const Attribution& att, const Vocabulary& vocab) {
  out << "term,value\n";
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(att.values.size());
  for (const auto& [i, v] : att.values) rows.emplace_back(vocab.term_of(i), v);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.second) != std::abs(b.second)) return std::abs(a.second) > std::abs(b.second);
    return a.first < b.first;
  });
  for (const auto& [term, v] : rows) out << term << ',' << format_double(v) << '\n';
}

inline void write_ranking(std::ostream& out, const ImpactRanking& ranking) {
  out << "rank,term,mean_abs_value\n";
  for (std::size_t r = 0; r < ranking.terms.size(); ++r)
    out << (r + 1) << ',' << ranking.terms[r].first << ','
        << format_double(ranking.terms[r].second) << '\n';
}

}  // namespace pumpscan
