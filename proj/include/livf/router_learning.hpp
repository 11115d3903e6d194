#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "livf/ivf_index.hpp"
#include "livf/router_models.hpp"
#include "livf/vectorspace.hpp"

namespace livf {

// One supervised example: a query and the binary relevance of each cluster.
// Top-1 supervision marks exactly the cluster owning the query's exact
// nearest document; top-k supervision marks every cluster owning at least
// one of the exact top-k documents.
struct TrainingPair {
  Vector query;
  std::vector<std::uint8_t> relevance;  // length L, entries 0/1
};

enum class LossMode { Top1, TopK };

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::Top1;
};

// Adam moments, one entry per parameter. `step` counts completed updates
// and drives the bias correction.
struct AdamState {
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct SplitDataset {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> val;
  std::vector<TrainingPair> test;
};

std::vector<TrainingPair> build_training_pairs(const VectorSet& queries,
                                               const IvfIndex& index);
std::vector<TrainingPair> build_topk_training_pairs(const VectorSet& queries,
                                                    const IvfIndex& index,
                                                    std::size_t k);

// Seeded shuffle, then floor(0.6 N) train / floor(0.2 N) validation / rest
// test. Needs at least 5 pairs so every part is non-empty.
SplitDataset split_dataset(std::vector<TrainingPair> pairs, std::uint64_t seed);

// Max-shifted, numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

// Cross-entropy of a one-hot target against softmax(scores).
double ce_loss(std::span<const double> scores,
               std::span<const std::uint8_t> relevance);

// Batch mean of ce_loss.
double ce_loss_mean(const std::vector<std::vector<double>>& scores,
                    const std::vector<std::vector<std::uint8_t>>& relevance);

// Soft cross-entropy against per-cluster weights derived from binary
// relevance rows: entry j of row i weighs (2^B_ij - gamma_ij), normalized
// over the row, with gamma drawn from [0, 1]. With gamma fixed at 1 and
// one-hot rows this reduces exactly to ce_loss_mean.
double topk_ce_loss(const std::vector<std::vector<double>>& scores,
                    const std::vector<std::vector<std::uint8_t>>& relevance,
                    const std::vector<std::vector<double>>& gamma);

// Gradient of the soft cross-entropy with respect to the scores:
// softmax(scores) - weights.
std::vector<double> grad_scores(std::span<const double> scores,
                                std::span<const double> weights);

// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double learning_rate);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // earliest epoch with the lowest val loss
};

// Minibatch training with Adam; parameters are kept in double precision and
// the model snapshot with the best validation loss is exported as float32.
LinearRouterModel train_linear_router(const SplitDataset& split,
                                      std::size_t num_clusters, std::size_t dim,
                                      const TrainConfig& cfg,
                                      TrainHistory* history = nullptr);
MlpRouterModel train_mlp_router(const SplitDataset& split, std::size_t num_clusters,
                                std::size_t dim, std::size_t hidden,
                                const TrainConfig& cfg,
                                TrainHistory* history = nullptr);

// Flat-parameter MLP evaluation, shared by the trainer and by gradient
// checks. Parameter layout: w1 (hidden x dim), b1, w2 (L x hidden), b2.
struct MlpShape {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  std::size_t num_clusters = 0;

  std::size_t param_count() const;
};

std::vector<double> mlp_forward_flat(const MlpShape& shape,
                                     std::span<const double> params,
                                     std::span<const double> query);

// Mean top-1 cross-entropy of `pairs` under the flat parameters.
double mlp_ce_loss_flat(const MlpShape& shape, std::span<const double> params,
                        std::span<const TrainingPair> pairs);

// Same value, and accumulates the full parameter gradient into grad_out.
double mlp_ce_grad_flat(const MlpShape& shape, std::span<const double> params,
                        std::span<const TrainingPair> pairs,
                        std::span<double> grad_out);

}  // namespace livf
