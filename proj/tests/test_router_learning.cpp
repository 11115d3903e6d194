#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <random>
#include <vector>

#include "doctest.h"
#include "livf/clustering.hpp"
#include "livf/errors.hpp"
#include "livf/ivf_index.hpp"
#include "livf/router_learning.hpp"
#include "support/helpers.hpp"

using livf::AdamState;
using livf::IvfIndex;
using livf::KMeansParams;
using livf::LossMode;
using livf::MlpShape;
using livf::SplitDataset;
using livf::TrainConfig;
using livf::TrainingPair;
using livf::Vector;
using livf::VectorSet;

namespace {

IvfIndex toy_index(std::size_t n, std::size_t dim, std::size_t L,
                   std::uint32_t seed) {
  const VectorSet docs = testsupport::random_set(n, dim, seed, 2.0);
  KMeansParams p;
  p.num_clusters = L;
  p.max_iters = 25;
  p.seed = seed;
  return build_index(docs, livf::standard_kmeans(docs, p));
}

std::vector<TrainingPair> random_pairs(std::size_t n, std::size_t L,
                                       std::size_t dim, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, L - 1);
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint8_t> rel(L, 0);
    rel[pick(gen)] = 1;
    pairs.push_back(
        TrainingPair{Vector(testsupport::random_doubles(dim, seed * 977 + i)),
                     std::move(rel)});
  }
  return pairs;
}

// Independent softmax cross-entropy against explicit weights.
double oracle_soft_ce(const std::vector<double>& s, const std::vector<double>& w) {
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  double z = 0;
  for (double v : s) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  double loss = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    loss += w[j] * (lse - s[j]);
  }
  return loss;
}

}  // namespace

TEST_CASE("training pairs carry the cluster owning the exact top-1 document") {
  const IvfIndex index = toy_index(150, 4, 8, 3);
  const VectorSet queries = testsupport::random_set(40, 4, 91);
  const auto pairs = build_training_pairs(queries, index);
  REQUIRE(pairs.size() == 40);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    REQUIRE(pairs[i].relevance.size() == index.num_clusters);
    const auto [ids, scores] = testsupport::oracle_top_k(
        testsupport::widen(queries.row(i)), index.docs, 1,
        livf::Metric::InnerProduct);
    for (std::size_t l = 0; l < index.num_clusters; ++l) {
      CHECK(pairs[i].relevance[l] ==
            (l == index.doc_to_cluster[ids[0]] ? 1 : 0));
    }
  }
}

TEST_CASE("top-k training pairs mark every owning cluster") {
  const IvfIndex index = toy_index(150, 4, 8, 5);
  const VectorSet queries = testsupport::random_set(25, 4, 92);
  const std::size_t k = 10;
  const auto pairs = build_topk_training_pairs(queries, index, k);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [ids, scores] = testsupport::oracle_top_k(
        testsupport::widen(queries.row(i)), index.docs, k,
        livf::Metric::InnerProduct);
    std::vector<std::uint8_t> expected(index.num_clusters, 0);
    for (std::uint32_t id : ids) {
      expected[index.doc_to_cluster[id]] = 1;
    }
    CHECK(pairs[i].relevance == expected);
  }
  CHECK_THROWS_AS(build_topk_training_pairs(queries, index, 0),
                  livf::InvalidParamError);
}

TEST_CASE("split_dataset: 60/20/20 sizes, content preserved, deterministic") {
  const auto pairs = random_pairs(50, 6, 3, 7);
  const SplitDataset split = livf::split_dataset(pairs, 99);
  CHECK(split.train.size() == 30);
  CHECK(split.val.size() == 10);
  CHECK(split.test.size() == 10);

  // The three parts together are a permutation of the input.
  std::multiset<double> before, after;
  for (const auto& p : pairs) before.insert(p.query[0]);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto& p : *part) after.insert(p.query[0]);
  }
  CHECK(before == after);

  const SplitDataset again = livf::split_dataset(pairs, 99);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(split.train[i].query == again.train[i].query);
  }
  const SplitDataset other = livf::split_dataset(pairs, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    any_diff = any_diff || !(split.train[i].query == other.train[i].query);
  }
  CHECK(any_diff);

  // Short inputs cannot fill three non-empty parts.
  CHECK_THROWS_AS(livf::split_dataset(random_pairs(4, 3, 2, 1), 0),
                  livf::InvalidParamError);
  const SplitDataset five = livf::split_dataset(random_pairs(5, 3, 2, 1), 0);
  CHECK(five.train.size() == 3);
  CHECK(five.val.size() == 1);
  CHECK(five.test.size() == 1);
}

TEST_CASE("softmax is a max-shifted distribution") {
  const std::vector<double> s{1.0, 2.0, 3.0};
  const auto p = livf::softmax(s);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[2] > p[1]);
  CHECK(p[1] > p[0]);
  // Hand value: e^3 / (e^1 + e^2 + e^3)
  CHECK(p[2] == doctest::Approx(std::exp(3.0) /
                                (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)))
                    .epsilon(1e-12));
  // Huge scores do not overflow.
  const auto big = livf::softmax(std::vector<double>{-1e4, 700.0, 710.0});
  for (double v : big) {
    CHECK(std::isfinite(v));
  }
  CHECK(big[2] > big[1]);
  CHECK(big[2] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("cross-entropy identities") {
  // Uniform scores: loss is exactly ln L.
  for (std::size_t L : {2u, 5u, 17u}) {
    const std::vector<double> s(L, 0.42);
    std::vector<std::uint8_t> rel(L, 0);
    rel[L / 2] = 1;
    CHECK(std::abs(livf::ce_loss(s, rel) - std::log(static_cast<double>(L))) <=
          1e-12);
  }
  // Two logits [2, 0], label 0: loss = log(1 + e^-2).
  CHECK(livf::ce_loss(std::vector<double>{2.0, 0.0},
                      std::vector<std::uint8_t>{1, 0}) ==
        doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
  // Invalid labels are rejected.
  CHECK_THROWS_AS(livf::ce_loss(std::vector<double>{1.0, 2.0},
                                std::vector<std::uint8_t>{1, 1}),
                  livf::InvalidLabelError);
  CHECK_THROWS_AS(livf::ce_loss(std::vector<double>{1.0, 2.0},
                                std::vector<std::uint8_t>{0, 0}),
                  livf::InvalidLabelError);
  CHECK_THROWS_AS(livf::ce_loss(std::vector<double>{1.0},
                                std::vector<std::uint8_t>{1, 0}),
                  livf::DimensionError);
}

TEST_CASE("ce_loss_mean averages per-pair losses") {
  std::vector<std::vector<double>> scores{{2.0, 0.0}, {0.0, 1.0}};
  std::vector<std::vector<std::uint8_t>> rel{{1, 0}, {0, 1}};
  const double expected = 0.5 * (std::log(1 + std::exp(-2.0)) +
                                 std::log(1 + std::exp(-1.0)));
  CHECK(livf::ce_loss_mean(scores, rel) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(livf::ce_loss_mean({}, {}), livf::InvalidParamError);
}

TEST_CASE("topk loss with gamma fixed at 1 and one-hot labels is plain ce") {
  std::mt19937 gen(1234);
  std::uniform_int_distribution<std::size_t> len(2, 9);
  std::uniform_int_distribution<int> batch(1, 8);
  std::normal_distribution<double> val(0.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t L = len(gen);
    const int B = batch(gen);
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<std::uint8_t>> rel;
    std::vector<std::vector<double>> gamma;
    for (int b = 0; b < B; ++b) {
      std::vector<double> s(L);
      for (auto& v : s) v = val(gen);
      std::vector<std::uint8_t> r(L, 0);
      r[static_cast<std::size_t>(gen() % L)] = 1;
      scores.push_back(std::move(s));
      rel.push_back(std::move(r));
      gamma.emplace_back(L, 1.0);
    }
    const double a = livf::topk_ce_loss(scores, rel, gamma);
    const double b = livf::ce_loss_mean(scores, rel);
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("topk loss equals the hand-expanded weighted form") {
  // One row, L=3, relevance {1,0,1}, gamma {0.25, 0.5, 0.75}:
  // raw weights (2-0.25, 1-0.5, 2-0.75) = (1.75, 0.5, 1.25), sum 3.5.
  const std::vector<double> s{0.3, -1.2, 0.9};
  const std::vector<std::uint8_t> r{1, 0, 1};
  const std::vector<double> g{0.25, 0.5, 0.75};
  const std::vector<double> w{1.75 / 3.5, 0.5 / 3.5, 1.25 / 3.5};
  const double got = livf::topk_ce_loss({s}, {r}, {g});
  CHECK(got == doctest::Approx(oracle_soft_ce(s, w)).epsilon(1e-12));

  CHECK_THROWS_AS(livf::topk_ce_loss({s}, {{2, 0, 1}}, {g}),
                  livf::InvalidLabelError);
  CHECK_THROWS_AS(livf::topk_ce_loss({s}, {r}, {{1.5, 0.5, 0.5}}),
                  livf::InvalidParamError);

  // A row with no relevant cluster still has well-defined weights (1 - gamma,
  // normalized)...
  const std::vector<double> wz{0.75 / 1.5, 0.5 / 1.5, 0.25 / 1.5};
  CHECK(livf::topk_ce_loss({s}, {{0, 0, 0}}, {g}) ==
        doctest::Approx(oracle_soft_ce(s, wz)).epsilon(1e-12));
  // ...unless gamma is 1 everywhere, which zeroes the denominator.
  CHECK_THROWS_AS(livf::topk_ce_loss({s}, {{0, 0, 0}}, {{1.0, 1.0, 1.0}}),
                  livf::InvalidLabelError);
}

TEST_CASE("grad_scores matches central finite differences of the soft ce") {
  std::mt19937 gen(77);
  std::normal_distribution<double> val(0.0, 2.0);
  std::uniform_real_distribution<double> uw(0.05, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t L = 2 + rep % 6;
    std::vector<double> s(L), w(L);
    for (auto& v : s) v = val(gen);
    double tot = 0;
    for (auto& v : w) {
      v = uw(gen);
      tot += v;
    }
    for (auto& v : w) v /= tot;

    const auto grad = livf::grad_scores(s, w);
    const double h = 1e-6;
    for (std::size_t j = 0; j < L; ++j) {
      auto plus = s, minus = s;
      plus[j] += h;
      minus[j] -= h;
      const double fd =
          (oracle_soft_ce(plus, w) - oracle_soft_ce(minus, w)) / (2 * h);
      CHECK(testsupport::rel_close(grad[j], fd, 1e-5));
    }
  }
}

TEST_CASE("adam matches an independently coded scalar recurrence") {
  // Scalar oracle, textbook form.
  double m = 0, v = 0, x = 0.3;
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;

  std::vector<double> params{0.3};
  AdamState state(1);
  std::mt19937 gen(5);
  std::normal_distribution<double> gdist(0.0, 1.0);
  for (int t = 1; t <= 200; ++t) {
    const double g = gdist(gen);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    x -= lr * mhat / (std::sqrt(vhat) + eps);

    const std::vector<double> grads{g};
    livf::adam_step(params, grads, state, lr);
    CHECK(testsupport::rel_close(params[0], x, 1e-12));
  }

  // Frozen first step from zero state: g=0.5, lr=0.1 moves the parameter by
  // -lr * g/|g| (bias corrections cancel): 0 - 0.1 * 0.5/(0.5 + ~0) = -0.1.
  std::vector<double> p0{0.0};
  AdamState s0(1);
  livf::adam_step(p0, std::vector<double>{0.5}, s0, 0.1);
  CHECK(p0[0] == doctest::Approx(-0.1).epsilon(1e-7));
  CHECK(s0.step == 1);

  CHECK_THROWS_AS(livf::adam_step(p0, std::vector<double>{1.0, 2.0}, s0, 0.1),
                  livf::DimensionError);
  CHECK_THROWS_AS(livf::adam_step(p0, std::vector<double>{1.0}, s0, 0.0),
                  livf::InvalidParamError);
}

TEST_CASE("mlp forward matches a hand-computed tiny network") {
  // dim 2, hidden 2, L 2. w1 = [[1,0],[0,-1]], b1 = [0.5, 0.5],
  // w2 = [[1,1],[2,0]], b2 = [0, -1]. Query (1, 2):
  // z = (1*1 + 0*2 + 0.5, 0*1 + -1*2 + 0.5) = (1.5, -1.5)
  // a = (1.5, 0); scores = (1*1.5 + 1*0 + 0, 2*1.5 + 0 - 1) = (1.5, 2.0)
  MlpShape shape{2, 2, 2};
  const std::vector<double> params{1, 0, 0, -1, 0.5, 0.5, 1, 1, 2, 0, 0, -1};
  const auto s = livf::mlp_forward_flat(shape, params, std::vector<double>{1, 2});
  REQUIRE(s.size() == 2);
  CHECK(s[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("full mlp gradient matches central finite differences") {
  std::mt19937 gen(2024);
  std::normal_distribution<double> val(0.0, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const MlpShape shape{2 + rep % 4, 2 + (rep / 2) % 3, 2 + rep % 5};
    std::vector<double> params(shape.param_count());
    for (auto& v : params) v = 0.7 * val(gen);

    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 3; ++i) {
      std::vector<std::uint8_t> rel(shape.num_clusters, 0);
      rel[gen() % shape.num_clusters] = 1;
      std::vector<double> q(shape.dim);
      for (auto& v : q) v = val(gen);
      pairs.push_back(TrainingPair{Vector(q), rel});
    }

    // ReLU kinks break finite differences; regenerate if any pre-activation
    // sits near zero for any pair.
    bool near_kink = false;
    for (const auto& pr : pairs) {
      for (std::size_t hidx = 0; hidx < shape.hidden; ++hidx) {
        double z = params[shape.hidden * shape.dim + hidx];
        for (std::size_t j = 0; j < shape.dim; ++j) {
          z += params[hidx * shape.dim + j] * pr.query[j];
        }
        near_kink = near_kink || std::abs(z) < 1e-3;
      }
    }
    if (near_kink) {
      continue;
    }
    ++checked;

    std::vector<double> grad(params.size(), 0.0);
    const double loss = livf::mlp_ce_grad_flat(shape, params, pairs, grad);
    CHECK(std::isfinite(loss));
    const double h = 1e-6;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      auto plus = params, minus = params;
      plus[pi] += h;
      minus[pi] -= h;
      const double fd = (livf::mlp_ce_loss_flat(shape, plus, pairs) -
                         livf::mlp_ce_loss_flat(shape, minus, pairs)) /
                        (2 * h);
      CHECK(testsupport::rel_close(grad[pi], fd, 1e-4));
    }
  }
  CHECK(checked >= 6);  // the kink filter must not eat the whole test
}

TEST_CASE("linear training drops the loss on separable data and is deterministic") {
  // Queries cluster around two well-separated directions; labels follow the
  // direction, so a linear router can fit this almost perfectly.
  std::mt19937 gen(31);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 60; ++i) {
    const bool top = i % 2 == 0;
    std::vector<double> q{top ? 1.0 + noise(gen) : -1.0 + noise(gen), noise(gen)};
    std::vector<std::uint8_t> rel{top ? std::uint8_t{1} : std::uint8_t{0},
                                  top ? std::uint8_t{0} : std::uint8_t{1}};
    pairs.push_back(TrainingPair{Vector(q), rel});
  }
  const SplitDataset split = livf::split_dataset(pairs, 5);

  TrainConfig cfg;
  cfg.learning_rate = 0.05;  // large steps are fine at toy scale
  cfg.batch_size = 8;
  cfg.max_epochs = 40;
  cfg.seed = 11;

  livf::TrainHistory hist;
  const auto model = livf::train_linear_router(split, 2, 2, cfg, &hist);
  REQUIRE(!hist.epochs.empty());
  CHECK(hist.epochs.back().train_loss < hist.epochs.front().train_loss);
  CHECK(hist.best_epoch >= 1);

  // Best epoch is the argmin of val loss, earliest wins.
  std::size_t arg = 0;
  for (std::size_t i = 1; i < hist.epochs.size(); ++i) {
    if (hist.epochs[i].val_loss < hist.epochs[arg].val_loss) {
      arg = i;
    }
  }
  CHECK(hist.best_epoch == hist.epochs[arg].epoch);

  // The fitted router actually separates the two groups.
  const auto router = livf::Router::linear(model);
  std::size_t correct = 0;
  for (const auto& p : split.test) {
    const auto s = router.score(p.query);
    const std::size_t pred = s[0] >= s[1] ? 0 : 1;
    correct += p.relevance[pred] == 1 ? 1 : 0;
  }
  CHECK(correct == split.test.size());

  livf::TrainHistory hist2;
  const auto model2 = livf::train_linear_router(split, 2, 2, cfg, &hist2);
  CHECK(model.weights == model2.weights);  // bitwise determinism
  REQUIRE(hist.epochs.size() == hist2.epochs.size());
  for (std::size_t i = 0; i < hist.epochs.size(); ++i) {
    CHECK(hist.epochs[i].train_loss == hist2.epochs[i].train_loss);
    CHECK(hist.epochs[i].val_loss == hist2.epochs[i].val_loss);
  }
}

TEST_CASE("mlp training runs, improves, and is deterministic") {
  const IvfIndex index = toy_index(200, 3, 6, 41);
  const VectorSet queries = testsupport::random_set(80, 3, 17, 2.0);
  auto pairs = build_training_pairs(queries, index);
  const SplitDataset split = livf::split_dataset(std::move(pairs), 3);

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.max_epochs = 30;
  cfg.seed = 9;

  livf::TrainHistory hist;
  const auto model = livf::train_mlp_router(split, 6, 3, 4, cfg, &hist);
  CHECK(model.hidden == 4);
  CHECK(hist.epochs.back().train_loss < hist.epochs.front().train_loss);

  livf::TrainHistory hist2;
  const auto model2 = livf::train_mlp_router(split, 6, 3, 4, cfg, &hist2);
  CHECK(model.w1 == model2.w1);
  CHECK(model.b1 == model2.b1);
  CHECK(model.w2 == model2.w2);
  CHECK(model.b2 == model2.b2);
}

TEST_CASE("topk loss mode trains and validation loss is reproducible") {
  const IvfIndex index = toy_index(150, 3, 5, 21);
  const VectorSet queries = testsupport::random_set(60, 3, 27, 2.0);
  auto pairs = build_topk_training_pairs(queries, index, 5);
  const SplitDataset split = livf::split_dataset(std::move(pairs), 13);

  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.batch_size = 8;
  cfg.max_epochs = 12;
  cfg.seed = 4;
  cfg.loss_mode = LossMode::TopK;

  livf::TrainHistory a, b;
  const auto m1 = livf::train_linear_router(split, 5, 3, cfg, &a);
  const auto m2 = livf::train_linear_router(split, 5, 3, cfg, &b);
  CHECK(m1.weights == m2.weights);
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].train_loss == b.epochs[i].train_loss);
    CHECK(a.epochs[i].val_loss == b.epochs[i].val_loss);
  }
  CHECK(a.epochs.back().train_loss < a.epochs.front().train_loss);
}

TEST_CASE("training configuration is validated") {
  const auto pairs = random_pairs(20, 4, 3, 2);
  const SplitDataset split = livf::split_dataset(pairs, 1);
  TrainConfig cfg;

  TrainConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(livf::train_linear_router(split, 4, 3, bad, nullptr),
                  livf::InvalidParamError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(livf::train_linear_router(split, 4, 3, bad, nullptr),
                  livf::InvalidParamError);
  bad = cfg;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(livf::train_linear_router(split, 4, 3, bad, nullptr),
                  livf::InvalidParamError);

  // Pair shape mismatches surface as dimension errors.
  CHECK_THROWS_AS(livf::train_linear_router(split, 5, 3, cfg, nullptr),
                  livf::DimensionError);
  CHECK_THROWS_AS(livf::train_linear_router(split, 4, 2, cfg, nullptr),
                  livf::DimensionError);
}
