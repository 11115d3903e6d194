#include "livf/router_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "livf/parallel.hpp"
#include "livf/rng.hpp"

namespace livf {

namespace {

std::size_t one_hot_label(std::span<const std::uint8_t> relevance) {
  std::size_t label = relevance.size();
  for (std::size_t j = 0; j < relevance.size(); ++j) {
    if (relevance[j] > 1) {
      throw InvalidLabelError("relevance entries must be 0 or 1");
    }
    if (relevance[j] == 1) {
      if (label != relevance.size()) {
        throw InvalidLabelError("relevance row is not one-hot");
      }
      label = j;
    }
  }
  if (label == relevance.size()) {
    throw InvalidLabelError("relevance row has no positive entry");
  }
  return label;
}

void check_binary_with_positive(std::span<const std::uint8_t> relevance) {
  bool any = false;
  for (std::uint8_t b : relevance) {
    if (b > 1) {
      throw InvalidLabelError("relevance entries must be 0 or 1");
    }
    any = any || b == 1;
  }
  if (!any) {
    throw InvalidLabelError("relevance row has no positive entry");
  }
}

double log_sum_exp(std::span<const double> s) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : s) {
    m = std::max(m, x);
  }
  double den = 0.0;
  for (double x : s) {
    den += std::exp(x - m);
  }
  return m + std::log(den);
}

// Per-cluster target weights from one binary relevance row: entry j weighs
// 2^b_j - gamma_j, normalized over the row.
void topk_weights(std::span<const std::uint8_t> relevance,
                  std::span<const double> gamma, std::span<double> w_out) {
  double denom = 0.0;
  for (std::size_t j = 0; j < relevance.size(); ++j) {
    if (relevance[j] > 1) {
      throw InvalidLabelError("relevance entries must be 0 or 1");
    }
    if (!(gamma[j] >= 0.0 && gamma[j] <= 1.0)) {
      throw InvalidParamError("gamma entries must lie in [0, 1]");
    }
    w_out[j] = (relevance[j] == 1 ? 2.0 : 1.0) - gamma[j];
    denom += w_out[j];
  }
  if (denom <= 0.0) {
    throw InvalidLabelError("relevance row gives zero total weight");
  }
  for (std::size_t j = 0; j < relevance.size(); ++j) {
    w_out[j] /= denom;
  }
}

// Soft cross-entropy of weights w against softmax(s); writes the score
// gradient softmax(s) - w into gs_out and returns the loss.
double soft_ce_and_grad(std::span<const double> s, std::span<const double> w,
                        std::span<double> gs_out) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : s) {
    m = std::max(m, x);
  }
  double den = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    gs_out[j] = std::exp(s[j] - m);
    den += gs_out[j];
  }
  const double lse = m + std::log(den);
  double loss = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    loss += w[j] * (lse - s[j]);
    gs_out[j] = gs_out[j] / den - w[j];
  }
  return loss;
}

void check_pair_shapes(const std::vector<TrainingPair>& pairs, std::size_t L,
                       std::size_t dim, LossMode mode, const char* part) {
  for (const TrainingPair& p : pairs) {
    if (p.query.dim() != dim) {
      throw DimensionError(std::string(part) + " pair query dimension " +
                           std::to_string(p.query.dim()) + " does not match " +
                           std::to_string(dim));
    }
    if (p.relevance.size() != L) {
      throw DimensionError(std::string(part) + " pair relevance length " +
                           std::to_string(p.relevance.size()) +
                           " does not match cluster count " + std::to_string(L));
    }
    if (mode == LossMode::Top1) {
      (void)one_hot_label(p.relevance);
    } else {
      check_binary_with_positive(p.relevance);
    }
  }
}

void check_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw InvalidParamError("learning rate must be positive");
  }
  if (cfg.batch_size == 0) {
    throw InvalidParamError("batch size must be positive");
  }
  if (cfg.max_epochs == 0) {
    throw InvalidParamError("max_epochs must be positive");
  }
}

// Fills the per-pair target weights for the active mode. TopK draws one
// fresh gamma per entry from `gamma_rng`.
void pair_weights(std::span<const std::uint8_t> relevance, LossMode mode,
                  Rng& gamma_rng, std::span<double> gamma_buf,
                  std::span<double> w_out) {
  if (mode == LossMode::Top1) {
    const std::size_t label = one_hot_label(relevance);
    std::fill(w_out.begin(), w_out.end(), 0.0);
    w_out[label] = 1.0;
    return;
  }
  for (std::size_t j = 0; j < relevance.size(); ++j) {
    gamma_buf[j] = gamma_rng.next_double();
  }
  topk_weights(relevance, gamma_buf, w_out);
}

}  // namespace

std::vector<TrainingPair> build_training_pairs(const VectorSet& queries,
                                               const IvfIndex& index) {
  return build_topk_training_pairs(queries, index, 1);
}

std::vector<TrainingPair> build_topk_training_pairs(const VectorSet& queries,
                                                    const IvfIndex& index,
                                                    std::size_t k) {
  if (k == 0) {
    throw InvalidParamError("k must be positive");
  }
  if (queries.dim() != index.dim) {
    throw DimensionError("query dimension " + std::to_string(queries.dim()) +
                         " does not match index dimension " +
                         std::to_string(index.dim));
  }
  const std::size_t n = queries.size();
  const std::size_t L = index.num_clusters;
  std::vector<TrainingPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs.push_back(TrainingPair{queries.vec(i), std::vector<std::uint8_t>(L, 0)});
  }
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const TopKResult top = exact_top_k(pairs[i].query, index.docs, k,
                                         Metric::InnerProduct);
      for (std::uint32_t id : top.ids) {
        pairs[i].relevance[index.doc_to_cluster[id]] = 1;
      }
    }
  });
  return pairs;
}

SplitDataset split_dataset(std::vector<TrainingPair> pairs, std::uint64_t seed) {
  const std::size_t n = pairs.size();
  if (n < 5) {
    throw InvalidParamError("need at least 5 pairs to split, got " +
                            std::to_string(n));
  }
  Rng rng(seed);
  rng.shuffle(pairs);
  const std::size_t n_train = 3 * n / 5;  // floor(0.6 n)
  const std::size_t n_val = n / 5;        // floor(0.2 n)
  SplitDataset split;
  split.train.assign(std::make_move_iterator(pairs.begin()),
                     std::make_move_iterator(pairs.begin() + n_train));
  split.val.assign(std::make_move_iterator(pairs.begin() + n_train),
                   std::make_move_iterator(pairs.begin() + n_train + n_val));
  split.test.assign(std::make_move_iterator(pairs.begin() + n_train + n_val),
                    std::make_move_iterator(pairs.end()));
  return split;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) {
    throw InvalidParamError("softmax needs at least one score");
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double x : scores) {
    m = std::max(m, x);
  }
  std::vector<double> out(scores.size());
  double den = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = std::exp(scores[j] - m);
    den += out[j];
  }
  for (double& x : out) {
    x /= den;
  }
  return out;
}

double ce_loss(std::span<const double> scores,
               std::span<const std::uint8_t> relevance) {
  if (scores.size() != relevance.size()) {
    throw DimensionError("scores and relevance lengths differ");
  }
  if (scores.empty()) {
    throw InvalidParamError("ce_loss needs at least one score");
  }
  const std::size_t label = one_hot_label(relevance);
  return log_sum_exp(scores) - scores[label];
}

double ce_loss_mean(const std::vector<std::vector<double>>& scores,
                    const std::vector<std::vector<std::uint8_t>>& relevance) {
  if (scores.empty()) {
    throw InvalidParamError("ce_loss_mean needs a non-empty batch");
  }
  if (scores.size() != relevance.size()) {
    throw DimensionError("batch sizes differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += ce_loss(scores[i], relevance[i]);
  }
  return total / static_cast<double>(scores.size());
}

double topk_ce_loss(const std::vector<std::vector<double>>& scores,
                    const std::vector<std::vector<std::uint8_t>>& relevance,
                    const std::vector<std::vector<double>>& gamma) {
  if (scores.empty()) {
    throw InvalidParamError("topk_ce_loss needs a non-empty batch");
  }
  if (scores.size() != relevance.size() || scores.size() != gamma.size()) {
    throw DimensionError("batch sizes differ");
  }
  double total = 0.0;
  std::vector<double> w;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.size() != relevance[i].size() || s.size() != gamma[i].size()) {
      throw DimensionError("row lengths differ in batch entry " + std::to_string(i));
    }
    if (s.empty()) {
      throw InvalidParamError("topk_ce_loss rows must be non-empty");
    }
    w.resize(s.size());
    topk_weights(relevance[i], gamma[i], w);
    const double lse = log_sum_exp(s);
    double loss = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      loss += w[j] * (lse - s[j]);
    }
    total += loss;
  }
  return total / static_cast<double>(scores.size());
}

std::vector<double> grad_scores(std::span<const double> scores,
                                std::span<const double> weights) {
  if (scores.size() != weights.size()) {
    throw DimensionError("scores and weights lengths differ");
  }
  std::vector<double> g = softmax(scores);
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] -= weights[j];
  }
  return g;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double learning_rate) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("parameter, gradient and state sizes differ");
  }
  if (!(learning_rate > 0.0)) {
    throw InvalidParamError("learning rate must be positive");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

std::size_t MlpShape::param_count() const {
  return mlp_param_count(dim, hidden, num_clusters);
}

std::vector<double> mlp_forward_flat(const MlpShape& shape,
                                     std::span<const double> params,
                                     std::span<const double> query) {
  const std::size_t n = shape.dim, h = shape.hidden, L = shape.num_clusters;
  if (params.size() != shape.param_count()) {
    throw DimensionError("parameter count does not match the mlp shape");
  }
  if (query.size() != n) {
    throw DimensionError("query dimension does not match the mlp shape");
  }
  const double* w1 = params.data();
  const double* b1 = w1 + h * n;
  const double* w2 = b1 + h;
  const double* b2 = w2 + L * h;
  std::vector<double> act(h);
  for (std::size_t u = 0; u < h; ++u) {
    double acc = b1[u];
    const double* row = w1 + u * n;
    for (std::size_t j = 0; j < n; ++j) {
      acc += row[j] * query[j];
    }
    act[u] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> scores(L);
  for (std::size_t c = 0; c < L; ++c) {
    double acc = b2[c];
    const double* row = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) {
      acc += row[u] * act[u];
    }
    scores[c] = acc;
  }
  return scores;
}

namespace {

// Forward pass keeping pre-activations, then backprop of the soft
// cross-entropy. Accumulates the parameter gradient (unscaled) and returns
// the pair's loss.
double mlp_pair_loss_grad(const MlpShape& shape, std::span<const double> params,
                          std::span<const double> query,
                          std::span<const double> weights,
                          std::span<double> grad_acc, std::vector<double>& pre,
                          std::vector<double>& act, std::vector<double>& s,
                          std::vector<double>& gs, std::vector<double>& dz) {
  const std::size_t n = shape.dim, h = shape.hidden, L = shape.num_clusters;
  const double* w1 = params.data();
  const double* b1 = w1 + h * n;
  const double* w2 = b1 + h;
  const double* b2 = w2 + L * h;
  double* g_w1 = grad_acc.data();
  double* g_b1 = g_w1 + h * n;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + L * h;

  for (std::size_t u = 0; u < h; ++u) {
    double acc = b1[u];
    const double* row = w1 + u * n;
    for (std::size_t j = 0; j < n; ++j) {
      acc += row[j] * query[j];
    }
    pre[u] = acc;
    act[u] = acc > 0.0 ? acc : 0.0;
  }
  for (std::size_t c = 0; c < L; ++c) {
    double acc = b2[c];
    const double* row = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) {
      acc += row[u] * act[u];
    }
    s[c] = acc;
  }

  const double loss = soft_ce_and_grad(s, weights, gs);

  std::fill(dz.begin(), dz.end(), 0.0);
  for (std::size_t c = 0; c < L; ++c) {
    const double g = gs[c];
    g_b2[c] += g;
    double* g_row = g_w2 + c * h;
    const double* row = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) {
      g_row[u] += g * act[u];
      dz[u] += g * row[u];
    }
  }
  for (std::size_t u = 0; u < h; ++u) {
    if (pre[u] <= 0.0) {
      continue;
    }
    g_b1[u] += dz[u];
    double* g_row = g_w1 + u * n;
    for (std::size_t j = 0; j < n; ++j) {
      g_row[j] += dz[u] * query[j];
    }
  }
  return loss;
}

}  // namespace

double mlp_ce_loss_flat(const MlpShape& shape, std::span<const double> params,
                        std::span<const TrainingPair> pairs) {
  if (pairs.empty()) {
    throw InvalidParamError("loss needs at least one pair");
  }
  double total = 0.0;
  for (const TrainingPair& p : pairs) {
    const std::vector<double> s = mlp_forward_flat(shape, params, p.query.span());
    total += ce_loss(s, p.relevance);
  }
  return total / static_cast<double>(pairs.size());
}

double mlp_ce_grad_flat(const MlpShape& shape, std::span<const double> params,
                        std::span<const TrainingPair> pairs,
                        std::span<double> grad_out) {
  if (pairs.empty()) {
    throw InvalidParamError("gradient needs at least one pair");
  }
  if (grad_out.size() != shape.param_count()) {
    throw DimensionError("gradient buffer does not match the mlp shape");
  }
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  const std::size_t h = shape.hidden, L = shape.num_clusters;
  std::vector<double> pre(h), act(h), s(L), gs(L), dz(h), w(L);
  double total = 0.0;
  for (const TrainingPair& p : pairs) {
    const std::size_t label = one_hot_label(p.relevance);
    std::fill(w.begin(), w.end(), 0.0);
    w[label] = 1.0;
    total += mlp_pair_loss_grad(shape, params, p.query.span(), w, grad_out, pre,
                                act, s, gs, dz);
  }
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (double& g : grad_out) {
    g *= scale;
  }
  return total * scale;
}

namespace {

// Validation loss for the current parameters. TopK mode re-derives the same
// gamma stream every epoch so that epochs stay comparable.
template <typename ForwardFn>
double validation_loss(const std::vector<TrainingPair>& val, LossMode mode,
                       std::uint64_t seed, std::size_t L, ForwardFn&& forward) {
  Rng val_gamma(derive_seed(seed, "val-gamma"));
  std::vector<double> w(L), gamma(L);
  double total = 0.0;
  for (const TrainingPair& p : val) {
    const std::vector<double> s = forward(p.query);
    if (mode == LossMode::Top1) {
      total += ce_loss(s, p.relevance);
    } else {
      for (std::size_t j = 0; j < L; ++j) {
        gamma[j] = val_gamma.next_double();
      }
      topk_weights(p.relevance, gamma, w);
      const double lse = log_sum_exp(s);
      double loss = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        loss += w[j] * (lse - s[j]);
      }
      total += loss;
    }
  }
  return total / static_cast<double>(val.size());
}

struct EpochLoop {
  std::vector<std::size_t> order;
  Rng gamma_rng;
  std::size_t n_train;

  EpochLoop(std::size_t n, std::uint64_t seed)
      : gamma_rng(derive_seed(seed, "gamma")), n_train(n) {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      order[i] = i;
    }
  }

  void shuffle(std::uint64_t seed, std::size_t epoch) {
    Rng rng(derive_seed(seed, "epoch-shuffle", epoch));
    rng.shuffle(order);
  }
};

}  // namespace

LinearRouterModel train_linear_router(const SplitDataset& split,
                                      std::size_t num_clusters, std::size_t dim,
                                      const TrainConfig& cfg,
                                      TrainHistory* history) {
  if (num_clusters == 0 || dim == 0) {
    throw InvalidParamError("router shape must be positive");
  }
  check_train_config(cfg);
  if (split.train.empty() || split.val.empty()) {
    throw InvalidParamError("training and validation parts must be non-empty");
  }
  check_pair_shapes(split.train, num_clusters, dim, cfg.loss_mode, "train");
  check_pair_shapes(split.val, num_clusters, dim, cfg.loss_mode, "validation");

  const std::size_t L = num_clusters, n = dim;
  const std::size_t n_params = L * n;
  std::vector<double> params(n_params);
  {
    Rng init_rng(derive_seed(cfg.seed, "router-init"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& p : params) {
      p = init_rng.uniform(-bound, bound);
    }
  }
  AdamState state(n_params);
  EpochLoop loop(split.train.size(), cfg.seed);

  std::vector<double> grad(n_params), s(L), w(L), gs(L), gamma(L);
  std::vector<double> best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  if (history != nullptr) {
    history->epochs.clear();
  }

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    loop.shuffle(cfg.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < loop.n_train; start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, loop.n_train - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t t = 0; t < bsz; ++t) {
        const TrainingPair& p = split.train[loop.order[start + t]];
        const std::span<const double> q = p.query.span();
        for (std::size_t c = 0; c < L; ++c) {
          const double* row = params.data() + c * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            acc += row[j] * q[j];
          }
          s[c] = acc;
        }
        pair_weights(p.relevance, cfg.loss_mode, loop.gamma_rng, gamma, w);
        batch_loss += soft_ce_and_grad(s, w, gs);
        for (std::size_t c = 0; c < L; ++c) {
          double* g_row = grad.data() + c * n;
          const double g = gs[c];
          for (std::size_t j = 0; j < n; ++j) {
            g_row[j] += g * q[j];
          }
        }
      }
      batch_loss /= static_cast<double>(bsz);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training loss became non-finite");
      }
      const double scale = 1.0 / static_cast<double>(bsz);
      for (double& g : grad) {
        g *= scale;
      }
      adam_step(params, grad, state, cfg.learning_rate);
      epoch_loss += batch_loss * static_cast<double>(bsz);
    }
    const double train_loss = epoch_loss / static_cast<double>(loop.n_train);
    const double val_loss = validation_loss(
        split.val, cfg.loss_mode, cfg.seed, L, [&](const Vector& q) {
          std::vector<double> scores(L);
          for (std::size_t c = 0; c < L; ++c) {
            const double* row = params.data() + c * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              acc += row[j] * q[j];
            }
            scores[c] = acc;
          }
          return scores;
        });
    if (!std::isfinite(val_loss)) {
      throw NumericError("validation loss became non-finite");
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      best_epoch = epoch;
    }
    if (history != nullptr) {
      history->epochs.push_back(EpochStats{epoch, train_loss, val_loss});
    }
  }

  if (history != nullptr) {
    history->best_epoch = best_epoch;
  }
  LinearRouterModel model;
  model.num_clusters = static_cast<std::uint32_t>(L);
  model.dim = static_cast<std::uint32_t>(n);
  model.weights.resize(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    model.weights[i] = static_cast<float>(best_params[i]);
  }
  return model;
}

MlpRouterModel train_mlp_router(const SplitDataset& split, std::size_t num_clusters,
                                std::size_t dim, std::size_t hidden,
                                const TrainConfig& cfg, TrainHistory* history) {
  if (num_clusters == 0 || dim == 0 || hidden == 0) {
    throw InvalidParamError("router shape must be positive");
  }
  check_train_config(cfg);
  if (split.train.empty() || split.val.empty()) {
    throw InvalidParamError("training and validation parts must be non-empty");
  }
  check_pair_shapes(split.train, num_clusters, dim, cfg.loss_mode, "train");
  check_pair_shapes(split.val, num_clusters, dim, cfg.loss_mode, "validation");

  const MlpShape shape{dim, hidden, num_clusters};
  const std::size_t n_params = shape.param_count();
  const std::size_t L = num_clusters, n = dim, h = hidden;
  std::vector<double> params(n_params, 0.0);
  {
    // Both weight matrices draw from the same +-1/sqrt(dim) window; biases
    // start at zero.
    Rng init_rng(derive_seed(cfg.seed, "router-init"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < h * n; ++i) {
      params[i] = init_rng.uniform(-bound, bound);
    }
    double* w2 = params.data() + h * n + h;
    for (std::size_t i = 0; i < L * h; ++i) {
      w2[i] = init_rng.uniform(-bound, bound);
    }
  }
  AdamState state(n_params);
  EpochLoop loop(split.train.size(), cfg.seed);

  std::vector<double> grad(n_params), pre(h), act(h), s(L), gs(L), dz(h), w(L),
      gamma(L);
  std::vector<double> best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  if (history != nullptr) {
    history->epochs.clear();
  }

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    loop.shuffle(cfg.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < loop.n_train; start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, loop.n_train - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t t = 0; t < bsz; ++t) {
        const TrainingPair& p = split.train[loop.order[start + t]];
        pair_weights(p.relevance, cfg.loss_mode, loop.gamma_rng, gamma, w);
        batch_loss += mlp_pair_loss_grad(shape, params, p.query.span(), w, grad,
                                         pre, act, s, gs, dz);
      }
      batch_loss /= static_cast<double>(bsz);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training loss became non-finite");
      }
      const double scale = 1.0 / static_cast<double>(bsz);
      for (double& g : grad) {
        g *= scale;
      }
      adam_step(params, grad, state, cfg.learning_rate);
      epoch_loss += batch_loss * static_cast<double>(bsz);
    }
    const double train_loss = epoch_loss / static_cast<double>(loop.n_train);
    const double val_loss = validation_loss(
        split.val, cfg.loss_mode, cfg.seed, L, [&](const Vector& q) {
          return mlp_forward_flat(shape, params, q.span());
        });
    if (!std::isfinite(val_loss)) {
      throw NumericError("validation loss became non-finite");
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      best_epoch = epoch;
    }
    if (history != nullptr) {
      history->epochs.push_back(EpochStats{epoch, train_loss, val_loss});
    }
  }

  if (history != nullptr) {
    history->best_epoch = best_epoch;
  }
  MlpRouterModel model;
  model.num_clusters = static_cast<std::uint32_t>(L);
  model.dim = static_cast<std::uint32_t>(n);
  model.hidden = static_cast<std::uint32_t>(h);
  model.w1.resize(h * n);
  model.b1.resize(h);
  model.w2.resize(L * h);
  model.b2.resize(L);
  const double* w1 = best_params.data();
  const double* b1 = w1 + h * n;
  const double* w2 = b1 + h;
  const double* b2 = w2 + L * h;
  for (std::size_t i = 0; i < h * n; ++i) {
    model.w1[i] = static_cast<float>(w1[i]);
  }
  for (std::size_t i = 0; i < h; ++i) {
    model.b1[i] = static_cast<float>(b1[i]);
  }
  for (std::size_t i = 0; i < L * h; ++i) {
    model.w2[i] = static_cast<float>(w2[i]);
  }
  for (std::size_t i = 0; i < L; ++i) {
    model.b2[i] = static_cast<float>(b2[i]);
  }
  return model;
}

}  // namespace livf
