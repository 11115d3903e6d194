#include "livf/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>

#include "livf/clustering.hpp"
#include "livf/errors.hpp"
#include "livf/evaluation.hpp"
#include "livf/ivf_index.hpp"
#include "livf/rng.hpp"
#include "livf/router_learning.hpp"
#include "livf/synthetic.hpp"
#include "livf/vector_file.hpp"

namespace livf::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t ceil_sqrt(std::size_t n) {
  std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r < n) {
    ++r;
  }
  while (r > 1 && (r - 1) * (r - 1) >= n) {
    --r;
  }
  return r;
}

// Inner-product mass captured by the current assignment; the quantity the
// argmax assignment of the shallow variant maximizes pointwise.
double assignment_dot_sum(const VectorSet& docs, const ClusteringResult& c) {
  double total = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Vector rep = c.representatives[c.assignments[i]];
    total += dot(rep, docs.row(i));
  }
  return total;
}

std::vector<TrainingPair> pairs_from_files(const std::filesystem::path& vec_path,
                                           const std::filesystem::path& lab_path) {
  const VectorSet queries = read_vector_file(vec_path);
  const LabelFile labels = read_label_file(lab_path);
  if (labels.rows.size() != queries.size()) {
    throw DimensionError(vec_path.string() + " has " +
                         std::to_string(queries.size()) + " vectors but " +
                         lab_path.string() + " has " +
                         std::to_string(labels.rows.size()) + " label rows");
  }
  std::vector<TrainingPair> pairs;
  pairs.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    pairs.push_back(TrainingPair{queries.vec(i), labels.rows[i]});
  }
  return pairs;
}

void write_pairs_part(const std::vector<TrainingPair>& pairs, std::size_t width,
                      const std::filesystem::path& dir, const std::string& stem) {
  std::vector<std::vector<float>> rows;
  rows.reserve(pairs.size());
  LabelFile labels;
  labels.width = width;
  labels.rows.reserve(pairs.size());
  for (const TrainingPair& p : pairs) {
    std::vector<float> row(p.query.dim());
    for (std::size_t d = 0; d < row.size(); ++d) {
      row[d] = static_cast<float>(p.query[d]);
    }
    rows.push_back(std::move(row));
    labels.rows.push_back(p.relevance);
  }
  write_vector_file(VectorSet::from_rows(rows), dir / (stem + ".lvec"));
  write_label_file(labels, dir / (stem + ".llab"));
}

Router learnt_router(const std::filesystem::path& model_path) {
  RouterModel model = load_router_model(model_path);
  if (std::holds_alternative<LinearRouterModel>(model)) {
    return Router::linear(std::get<LinearRouterModel>(std::move(model)));
  }
  return Router::mlp(std::get<MlpRouterModel>(std::move(model)));
}

}  // namespace

void run_gen_synthetic(const GenSyntheticCmd& cmd, std::ostream& log) {
  SyntheticParams params;
  params.n_docs = cmd.n_docs;
  params.n_queries = cmd.n_queries;
  params.dim = cmd.dim;
  params.n_blobs = cmd.n_blobs;
  params.center_scale = cmd.center_scale;
  params.min_axis_scale = cmd.min_axis_scale;
  params.max_axis_scale = cmd.max_axis_scale;
  params.query_noise = cmd.query_noise;
  params.seed = cmd.seed;
  const SyntheticData data = generate_synthetic(params);
  write_vector_file(data.docs, cmd.docs_out);
  write_vector_file(data.queries, cmd.queries_out);
  log << "docs=" << data.docs.size() << " queries=" << data.queries.size()
      << " dim=" << data.docs.dim() << "\n";
}

void run_convert(const ConvertCmd& cmd, std::ostream& log) {
  const VectorSet vectors = read_text_matrix(cmd.text_in);
  write_vector_file(vectors, cmd.vectors_out);
  log << "converted " << vectors.size() << "x" << vectors.dim() << "\n";
}

void run_build(const BuildCmd& cmd, std::ostream& log) {
  const VectorSet docs = read_vector_file(cmd.docs_path);
  KMeansParams params;
  params.num_clusters =
      cmd.num_clusters == 0 ? ceil_sqrt(docs.size()) : cmd.num_clusters;
  params.max_iters = cmd.max_iters;
  params.epsilon = cmd.epsilon;
  params.seed = derive_seed(cmd.seed, "clustering");

  ClusteringResult clustering;
  std::string objective_name;
  double objective = 0.0;
  if (cmd.clustering == "standard") {
    clustering = standard_kmeans(docs, params);
    objective_name = "inertia";
    objective = inertia(docs, clustering.representatives);
  } else if (cmd.clustering == "spherical") {
    clustering = spherical_kmeans(docs, params);
    objective_name = "objective";
    // The spherical variant clusters direction only, so its objective is
    // defined over the unit-normalized copies of the docs.
    std::vector<std::vector<float>> unit_rows(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const Vector u = l2_normalize(docs.vec(i));
      unit_rows[i].resize(docs.dim());
      for (std::size_t d = 0; d < docs.dim(); ++d) {
        unit_rows[i][d] = static_cast<float>(u[d]);
      }
    }
    objective =
        spherical_objective(VectorSet::from_rows(unit_rows), clustering.representatives);
  } else if (cmd.clustering == "shallow") {
    clustering = shallow_kmeans(docs, params);
    objective_name = "objective";
    objective = assignment_dot_sum(docs, clustering);
  } else {
    throw InvalidParamError("unknown clustering '" + cmd.clustering +
                            "' (expected standard, spherical or shallow)");
  }

  const IvfIndex index = build_index(docs, clustering);
  save_index(index, cmd.index_out);
  log << "L=" << index.num_clusters << "\n"
      << objective_name << "=" << fmt(objective) << "\n";
}

void run_make_pairs(const MakePairsCmd& cmd, std::ostream& log) {
  const IvfIndex index = load_index(cmd.index_path);
  const VectorSet queries = read_vector_file(cmd.queries_path);
  std::vector<TrainingPair> pairs =
      build_topk_training_pairs(queries, index, cmd.label_k);
  const SplitDataset split =
      split_dataset(std::move(pairs), derive_seed(cmd.seed, "split"));

  std::filesystem::create_directories(cmd.out_dir);
  write_pairs_part(split.train, index.num_clusters, cmd.out_dir, "train");
  write_pairs_part(split.val, index.num_clusters, cmd.out_dir, "val");
  write_pairs_part(split.test, index.num_clusters, cmd.out_dir, "test");
  log << "train=" << split.train.size() << " val=" << split.val.size()
      << " test=" << split.test.size() << "\n";
}

void run_train(const TrainCmd& cmd, std::ostream& log) {
  SplitDataset split;
  split.train = pairs_from_files(cmd.pairs_dir / "train.lvec",
                                 cmd.pairs_dir / "train.llab");
  split.val =
      pairs_from_files(cmd.pairs_dir / "val.lvec", cmd.pairs_dir / "val.llab");
  if (split.train.empty() || split.val.empty()) {
    throw InvalidParamError("training needs non-empty train and val parts");
  }
  const std::size_t num_clusters = split.train.front().relevance.size();
  const std::size_t dim = split.train.front().query.dim();

  TrainConfig cfg;
  cfg.learning_rate = cmd.learning_rate;
  cfg.batch_size = cmd.batch_size;
  cfg.max_epochs = cmd.max_epochs;
  cfg.seed = cmd.seed;
  if (cmd.loss == "top1") {
    cfg.loss_mode = LossMode::Top1;
  } else if (cmd.loss == "topk") {
    cfg.loss_mode = LossMode::TopK;
  } else {
    throw InvalidParamError("unknown loss '" + cmd.loss +
                            "' (expected top1 or topk)");
  }

  TrainHistory history;
  RouterModel model;
  if (cmd.hidden == 0) {
    model = train_linear_router(split, num_clusters, dim, cfg, &history);
  } else {
    model = train_mlp_router(split, num_clusters, dim, cmd.hidden, cfg, &history);
  }

  log << "epoch,train_loss,val_loss\n";
  for (const EpochStats& e : history.epochs) {
    log << e.epoch << "," << fmt(e.train_loss) << "," << fmt(e.val_loss) << "\n";
  }
  log << "best_epoch=" << history.best_epoch << "\n";
  save_router_model(model, cmd.model_out);
}

void run_eval(const EvalCmd& cmd, std::ostream& log) {
  const IvfIndex index = load_index(cmd.index_path);
  const VectorSet queries = read_vector_file(cmd.queries_path);

  std::vector<Router> routers;
  routers.push_back(Router::baseline(index));
  if (!cmd.model_path.empty()) {
    routers.push_back(learnt_router(cmd.model_path));
  }

  ReportFormat format;
  if (cmd.format == "csv") {
    format = ReportFormat::Csv;
  } else if (cmd.format == "json") {
    format = ReportFormat::Json;
  } else {
    throw InvalidParamError("unknown report format '" + cmd.format +
                            "' (expected csv or json)");
  }
  if (cmd.k_values.empty()) {
    throw InvalidParamError("eval needs at least one k");
  }
  const std::vector<std::size_t> grid = cmd.ell_grid.empty()
                                            ? default_ell_grid(index.num_clusters)
                                            : cmd.ell_grid;
  const std::string dataset =
      cmd.dataset.empty() ? cmd.index_path.stem().string() : cmd.dataset;

  std::vector<EvalRecord> records;
  for (std::size_t k : cmd.k_values) {
    const SweepTable table = accuracy_sweep(index, routers, queries, k, grid);
    for (const SweepRow& row : table.rows) {
      records.push_back(
          EvalRecord{dataset, cmd.clustering, row.router, k, row.ell, row.accuracy});
    }
  }

  if (routers.size() == 2) {
    // Paired per-query comparison of the two routers at k=1, one test per
    // grid point, reported as extra rows keyed by a router pseudo-name.
    const SweepTable table = accuracy_sweep(index, routers, queries, 1, grid);
    const std::size_t half = table.rows.size() / 2;
    for (std::size_t g = 0; g < half; ++g) {
      const SweepRow& base_row = table.rows[g];
      const SweepRow& learnt_row = table.rows[half + g];
      const auto to_hits = [](const std::vector<double>& per_query) {
        std::vector<std::uint8_t> hits(per_query.size());
        for (std::size_t i = 0; i < per_query.size(); ++i) {
          hits[i] = per_query[i] == 1.0 ? 1 : 0;
        }
        return hits;
      };
      const McNemarResult r =
          mcnemar(to_hits(base_row.per_query), to_hits(learnt_row.per_query));
      records.push_back(EvalRecord{dataset, cmd.clustering, "mcnemar:statistic", 1,
                                   base_row.ell, r.statistic});
      records.push_back(EvalRecord{dataset, cmd.clustering, "mcnemar:p_value", 1,
                                   base_row.ell, r.p_value});
    }
  }

  emit_report(records, cmd.report_out, format);
  log << "rows=" << records.size() << " grid_size=" << grid.size() << "\n";

  if (!cmd.labels_path.empty()) {
    const LabelFile labels = read_label_file(cmd.labels_path);
    if (labels.rows.size() != queries.size()) {
      throw DimensionError("label count does not match query count");
    }
    if (labels.width != index.num_clusters) {
      throw DimensionError("label width does not match the cluster count");
    }
    bool one_hot = true;
    for (const auto& row : labels.rows) {
      std::size_t positives = 0;
      for (std::uint8_t v : row) {
        positives += v;
      }
      if (positives != 1) {
        one_hot = false;
        break;
      }
    }
    if (!one_hot) {
      log << "mrr skipped: labels are not one-hot\n";
    } else {
      std::vector<TrainingPair> pairs;
      pairs.reserve(queries.size());
      for (std::size_t i = 0; i < queries.size(); ++i) {
        pairs.push_back(TrainingPair{queries.vec(i), labels.rows[i]});
      }
      for (const Router& r : routers) {
        const std::vector<std::size_t> ranks = router_ranks(r, pairs);
        log << "mrr," << r.name() << "," << fmt(mrr(ranks)) << "\n";
      }
    }
  }
}

}  // namespace livf::cli
