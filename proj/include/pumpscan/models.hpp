// Classifiers over sparse count vectors: weighted logistic regression and a
// rectifier MLP with a sigmoid output, both trained by mini-batch gradient
// descent on class-weighted cross-entropy plus L2 on the weight matrices.
//
// Batch losses are normalized by the batch's weight sum, which makes
// duplicating a sample equivalent to doubling its weight. The corpus matrix is
// never densified; the input layer consumes sparse vectors directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pumpscan/features.hpp"
#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 42;
  double weight_not = 1.0;
  double weight_pnd = 1.0;
  double l2 = 0.0;
  std::vector<int> hidden;  // empty for logreg

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(weight_not > 0) || !(weight_pnd > 0)) throw ConfigError("class weights must be > 0");
    if (l2 < 0) throw ConfigError("l2 must be >= 0");
    for (int h : hidden)
      if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of sigmoid(z) against y in {0,1}, computed from the logit so
// large |z| cannot produce log(0).
inline double bce_from_logit(double z, double y) {
  const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  return softplus - y * z;
}

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0;

  double decision_score(const SparseVector& x) const {
    if (x.dim != weights.size()) throw std::invalid_argument("feature dimension mismatch");
    double z = bias;
    for (const auto& [i, v] : x.entries) z += weights[i] * v;
    return z;
  }
};

struct MlpModel {
  std::vector<int> sizes;                    // input, hidden..., 1
  std::vector<std::vector<double>> weights;  // per layer, row-major [out][in]
  std::vector<std::vector<double>> biases;   // per layer, [out]

  std::size_t layer_count() const { return weights.size(); }

  double decision_score(const SparseVector& x) const {
    if (sizes.empty() || x.dim != static_cast<std::uint32_t>(sizes.front()))
      throw std::invalid_argument("feature dimension mismatch");
    std::vector<double> a;
    forward(x, nullptr, &a);
    return a[0];
  }

  // Forward pass; when `pre` is given it receives the pre-activation vector of
  // every layer (needed for backprop). `out` receives the final layer's
  // pre-activation (the decision score lives before the sigmoid).
  void forward(const SparseVector& x, std::vector<std::vector<double>>* pre,
               std::vector<double>* out) const {
    std::vector<double> act;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const int n_out = sizes[l + 1];
      const int n_in = sizes[l];
      std::vector<double> z(biases[l]);
      const std::vector<double>& w = weights[l];
      if (l == 0) {
        for (const auto& [i, v] : x.entries)
          for (int j = 0; j < n_out; ++j) z[j] += w[static_cast<std::size_t>(j) * n_in + i] * v;
      } else {
        for (int j = 0; j < n_out; ++j) {
          double s = z[j];
          const double* row = w.data() + static_cast<std::size_t>(j) * n_in;
          for (int i = 0; i < n_in; ++i) s += row[i] * act[i];
          z[j] = s;
        }
      }
      if (pre) pre->push_back(z);
      if (l + 1 < weights.size()) {
        act.resize(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) act[j] = z[j] > 0 ? z[j] : 0.0;
      } else {
        act = z;
      }
    }
    if (out) *out = act;
  }
};

inline double predict(const LogRegModel& m, const SparseVector& x) {
  return sigmoid(m.decision_score(x));
}
inline double predict(const MlpModel& m, const SparseVector& x) {
  return sigmoid(m.decision_score(x));
}

using AnyModel = std::variant<LogRegModel, MlpModel>;

inline double decision_score(const AnyModel& m, const SparseVector& x) {
  return std::visit([&](const auto& model) { return model.decision_score(x); }, m);
}
inline double predict(const AnyModel& m, const SparseVector& x) {
  return sigmoid(decision_score(m, x));
}

struct LogRegGrad {
  std::vector<double> weights;
  double bias = 0;
};

struct MlpGrad {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

namespace detail {

inline double weight_sum(const std::vector<double>& ws, const std::vector<std::size_t>& idx) {
  double s = 0;
  for (std::size_t i : idx) s += ws[i];
  return s;
}

}  // namespace detail

// Weighted batch loss Σ w_i l_i / Σ w_i + (l2/2)‖w‖², gradient optional.
// Exposed (rather than buried in the trainer) so it can be checked against
// finite differences.
inline double logreg_loss(const LogRegModel& m, const std::vector<SparseVector>& X,
                          const std::vector<double>& y, const std::vector<double>& ws,
                          const std::vector<std::size_t>& idx, double l2,
                          LogRegGrad* grad = nullptr) {
  if (grad) {
    grad->weights.assign(m.weights.size(), 0.0);
    grad->bias = 0;
  }
  const double sum_w = detail::weight_sum(ws, idx);
  double loss = 0;
  for (std::size_t i : idx) {
    const double z = m.decision_score(X[i]);
    const double scale = ws[i] / sum_w;
    loss += scale * bce_from_logit(z, y[i]);
    if (grad) {
      const double dz = scale * (sigmoid(z) - y[i]);
      for (const auto& [f, v] : X[i].entries) grad->weights[f] += dz * v;
      grad->bias += dz;
    }
  }
  if (l2 > 0) {
    double sq = 0;
    for (double w : m.weights) sq += w * w;
    loss += 0.5 * l2 * sq;
    if (grad)
      for (std::size_t f = 0; f < m.weights.size(); ++f) grad->weights[f] += l2 * m.weights[f];
  }
  return loss;
}

inline double mlp_loss(const MlpModel& m, const std::vector<SparseVector>& X,
                       const std::vector<double>& y, const std::vector<double>& ws,
                       const std::vector<std::size_t>& idx, double l2, MlpGrad* grad = nullptr) {
  if (grad) {
    grad->weights.clear();
    grad->biases.clear();
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      grad->weights.emplace_back(m.weights[l].size(), 0.0);
      grad->biases.emplace_back(m.biases[l].size(), 0.0);
    }
  }
  const double sum_w = detail::weight_sum(ws, idx);
  const std::size_t L = m.weights.size();
  double loss = 0;
  std::vector<std::vector<double>> pre;
  for (std::size_t i : idx) {
    pre.clear();
    m.forward(X[i], &pre, nullptr);
    const double z_out = pre.back()[0];
    const double scale = ws[i] / sum_w;
    loss += scale * bce_from_logit(z_out, y[i]);
    if (!grad) continue;

    // delta[l] = dL/d(pre-activation of layer l), walked backwards.
    std::vector<double> delta{scale * (sigmoid(z_out) - y[i])};
    for (std::size_t l = L; l-- > 0;) {
      const int n_out = m.sizes[l + 1];
      const int n_in = m.sizes[l];
      std::vector<double>& gw = grad->weights[l];
      std::vector<double>& gb = grad->biases[l];
      if (l == 0) {
        for (const auto& [f, v] : X[i].entries)
          for (int j = 0; j < n_out; ++j) gw[static_cast<std::size_t>(j) * n_in + f] += delta[j] * v;
      } else {
        const std::vector<double>& z_prev = pre[l - 1];
        for (int j = 0; j < n_out; ++j) {
          const double d = delta[j];
          double* row = gw.data() + static_cast<std::size_t>(j) * n_in;
          for (int k = 0; k < n_in; ++k)
            if (z_prev[k] > 0) row[k] += d * z_prev[k];
        }
      }
      for (int j = 0; j < n_out; ++j) gb[j] += delta[j];
      if (l == 0) break;
      std::vector<double> next(n_in, 0.0);
      const std::vector<double>& w = m.weights[l];
      const std::vector<double>& z_prev = pre[l - 1];
      for (int j = 0; j < n_out; ++j) {
        const double d = delta[j];
        const double* row = w.data() + static_cast<std::size_t>(j) * n_in;
        for (int k = 0; k < n_in; ++k)
          if (z_prev[k] > 0) next[k] += d * row[k];
      }
      delta = std::move(next);
    }
  }
  if (l2 > 0) {
    double sq = 0;
    for (const auto& w : m.weights)
      for (double v : w) sq += v * v;
    loss += 0.5 * l2 * sq;
    if (grad)
      for (std::size_t l = 0; l < m.weights.size(); ++l)
        for (std::size_t k = 0; k < m.weights[l].size(); ++k)
          grad->weights[l][k] += l2 * m.weights[l][k];
  }
  return loss;
}

namespace detail {

inline void check_training_inputs(const std::vector<SparseVector>& X,
                                  const std::vector<Label>& y) {
  if (X.size() != y.size()) throw DataError("feature/label count mismatch");
  if (X.size() < 2) throw DataError("training needs at least 2 samples");
  bool pos = false, neg = false;
  for (Label l : y) (l == Label::pnd ? pos : neg) = true;
  if (!pos || !neg) throw DataError("training needs both classes present");
}

inline std::vector<double> targets_of(const std::vector<Label>& y) {
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == Label::pnd ? 1.0 : 0.0;
  return t;
}

inline std::vector<double> sample_weights_of(const std::vector<Label>& y, const TrainConfig& cfg) {
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    w[i] = y[i] == Label::pnd ? cfg.weight_pnd : cfg.weight_not;
  return w;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace detail

template <typename M>
struct TrainOutput {
  M model;
  // Full-dataset loss before training and after each epoch (epochs + 1 values).
  std::vector<double> loss_history;
};

template <typename M, typename LossFn, typename Grad, typename ApplyFn>
TrainOutput<M> run_sgd(M model, const std::vector<SparseVector>& X, const std::vector<Label>& y,
                       const TrainConfig& cfg, const LossFn& loss_fn, const ApplyFn& apply_step) {
  const std::vector<double> targets = detail::targets_of(y);
  const std::vector<double> ws = detail::sample_weights_of(y, cfg);
  const std::vector<std::size_t> all = detail::all_indices(X.size());

  TrainOutput<M> out;
  out.model = std::move(model);
  out.loss_history.push_back(loss_fn(out.model, X, targets, ws, all, cfg.l2, nullptr));

  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order = all;
  Grad grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_inplace(order, shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
      const double batch_loss = loss_fn(out.model, X, targets, ws, batch, cfg.l2, &grad);
      if (!std::isfinite(batch_loss))
        throw DataError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                        " (learning rate too high or bad inputs)");
      apply_step(out.model, grad, cfg.learning_rate);
    }
    out.loss_history.push_back(loss_fn(out.model, X, targets, ws, all, cfg.l2, nullptr));
  }
  if (!std::isfinite(out.loss_history.back()))
    throw DataError("non-finite loss after training");
  return out;
}

inline TrainOutput<LogRegModel> train_logreg(const std::vector<SparseVector>& X,
                                             const std::vector<Label>& y, const TrainConfig& cfg) {
  cfg.validate();
  detail::check_training_inputs(X, y);
  LogRegModel m;
  m.weights.assign(X.front().dim, 0.0);
  m.bias = 0;
  auto loss = [](const LogRegModel& model, const std::vector<SparseVector>& Xs,
                 const std::vector<double>& t, const std::vector<double>& w,
                 const std::vector<std::size_t>& idx, double l2, LogRegGrad* g) {
    return logreg_loss(model, Xs, t, w, idx, l2, g);
  };
  auto step = [](LogRegModel& model, const LogRegGrad& g, double lr) {
    for (std::size_t i = 0; i < model.weights.size(); ++i) model.weights[i] -= lr * g.weights[i];
    model.bias -= lr * g.bias;
  };
  return run_sgd<LogRegModel, decltype(loss), LogRegGrad, decltype(step)>(std::move(m), X, y, cfg,
                                                                          loss, step);
}

// He-uniform init on every layer (rectifier fan-in scaling); biases start at 0.
inline MlpModel init_mlp(std::uint32_t input_dim, const std::vector<int>& hidden,
                         std::uint64_t seed) {
  MlpModel m;
  m.sizes.push_back(static_cast<int>(input_dim));
  for (int h : hidden) m.sizes.push_back(h);
  m.sizes.push_back(1);
  Rng rng(derive_seed(seed, 0));
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const int n_in = m.sizes[l], n_out = m.sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in));
    std::vector<double> w(static_cast<std::size_t>(n_in) * n_out);
    for (double& v : w) v = uniform_range(rng, -limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(n_out, 0.0);
  }
  return m;
}

inline TrainOutput<MlpModel> train_mlp(const std::vector<SparseVector>& X,
                                       const std::vector<Label>& y, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.hidden.empty()) throw ConfigError("MLP needs at least one hidden layer; use logreg");
  detail::check_training_inputs(X, y);
  MlpModel m = init_mlp(X.front().dim, cfg.hidden, cfg.seed);
  auto loss = [](const MlpModel& model, const std::vector<SparseVector>& Xs,
                 const std::vector<double>& t, const std::vector<double>& w,
                 const std::vector<std::size_t>& idx, double l2, MlpGrad* g) {
    return mlp_loss(model, Xs, t, w, idx, l2, g);
  };
  auto step = [](MlpModel& model, const MlpGrad& g, double lr) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      for (std::size_t k = 0; k < model.weights[l].size(); ++k)
        model.weights[l][k] -= lr * g.weights[l][k];
      for (std::size_t k = 0; k < model.biases[l].size(); ++k)
        model.biases[l][k] -= lr * g.biases[l][k];
    }
  };
  return run_sgd<MlpModel, decltype(loss), MlpGrad, decltype(step)>(std::move(m), X, y, cfg, loss,
                                                                    step);
}

// ---- checkpoints ----------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

inline nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate}, {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},       {"seed", cfg.seed},
          {"weight_not", cfg.weight_not},       {"weight_pnd", cfg.weight_pnd},
          {"l2", cfg.l2},                       {"hidden", cfg.hidden}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.weight_not = j.at("weight_not").get<double>();
  cfg.weight_pnd = j.at("weight_pnd").get<double>();
  cfg.l2 = j.at("l2").get<double>();
  cfg.hidden = j.at("hidden").get<std::vector<int>>();
  return cfg;
}

struct Checkpoint {
  AnyModel model;
  TrainConfig config;
  std::string vocab_hash;
};

inline void save_checkpoint(std::ostream& out, const AnyModel& model, const TrainConfig& cfg,
                            const std::string& vocab_hash) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["vocab_hash"] = vocab_hash;
  j["config"] = config_to_json(cfg);
  if (const auto* lr = std::get_if<LogRegModel>(&model)) {
    j["model_type"] = "logreg";
    j["params"] = {{"weights", lr->weights}, {"bias", lr->bias}};
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    j["model_type"] = "mlp";
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < mlp.weights.size(); ++l)
      layers.push_back({{"weights", mlp.weights[l]}, {"biases", mlp.biases[l]}});
    j["params"] = {{"sizes", mlp.sizes}, {"layers", layers}};
  }
  out << j.dump(2) << '\n';
}

// expected_vocab_hash empty = caller does not know the vocabulary yet and
// will check separately.
inline Checkpoint load_checkpoint(std::istream& in, const std::string& expected_vocab_hash = "") {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw DataError("unsupported checkpoint format version");
    Checkpoint c;
    c.vocab_hash = j.at("vocab_hash").get<std::string>();
    if (!expected_vocab_hash.empty() && c.vocab_hash != expected_vocab_hash)
      throw DataError("checkpoint vocabulary hash mismatch: expected " + expected_vocab_hash +
                      ", found " + c.vocab_hash);
    c.config = config_from_json(j.at("config"));
    const std::string type = j.at("model_type").get<std::string>();
    const nlohmann::json& p = j.at("params");
    if (type == "logreg") {
      LogRegModel m;
      m.weights = p.at("weights").get<std::vector<double>>();
      m.bias = p.at("bias").get<double>();
      c.model = std::move(m);
    } else if (type == "mlp") {
      MlpModel m;
      m.sizes = p.at("sizes").get<std::vector<int>>();
      for (const auto& layer : p.at("layers")) {
        m.weights.push_back(layer.at("weights").get<std::vector<double>>());
        m.biases.push_back(layer.at("biases").get<std::vector<double>>());
      }
      if (m.weights.size() + 1 != m.sizes.size()) throw DataError("checkpoint layer count mismatch");
      for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        if (m.weights[l].size() !=
                static_cast<std::size_t>(m.sizes[l]) * static_cast<std::size_t>(m.sizes[l + 1]) ||
            m.biases[l].size() != static_cast<std::size_t>(m.sizes[l + 1]))
          throw DataError("checkpoint layer shape mismatch");
      }
      c.model = std::move(m);
    } else {
      throw DataError("unknown model_type in checkpoint: " + type);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline Checkpoint load_checkpoint_file(const std::string& path,
                                       const std::string& expected_vocab_hash = "") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return load_checkpoint(in, expected_vocab_hash);
}

}  // namespace pumpscan
