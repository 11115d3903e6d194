#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "livf/commands.hpp"
#include "livf/errors.hpp"

namespace {

// 0 success, 2 usage, 3 bad data or file format, 4 numeric failure, 1 other.
int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const livf::InvalidParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const livf::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const livf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string trimmed(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) {
    s.erase(s.begin());
  }
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) {
    s.pop_back();
  }
  return s;
}

// `--config FILE` loads a flat key=value file where each key names a long
// option of the invoked subcommand without the leading dashes ('#' starts a
// comment line). Entries are appended as ordinary flags, except keys already
// present on the command line, so explicit flags always win. List-valued keys
// take comma-separated values.
void expand_config_args(std::vector<std::string>& args) {
  std::string file;
  bool found = false;
  for (std::size_t i = 0; i < args.size() && !found; ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      found = true;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      found = true;
    }
  }
  if (!found) {
    return;
  }

  std::ifstream in(file);
  if (!in) {
    throw livf::IoError("cannot open '" + file + "' for reading");
  }
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++line_no;
    line = trimmed(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw livf::InvalidParamError("config file '" + file + "' line " +
                                    std::to_string(line_no) +
                                    ": expected key=value");
    }
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw livf::InvalidParamError("config file '" + file + "' line " +
                                    std::to_string(line_no) +
                                    ": empty key or value");
    }
    const std::string flag = "--" + key;
    bool on_command_line = false;
    for (const std::string& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        on_command_line = true;
        break;
      }
    }
    if (on_command_line) {
      continue;
    }
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const std::string token = trimmed(
          value.substr(start, comma == std::string::npos ? comma : comma - start));
      if (!token.empty()) {
        extra.push_back(flag);
        extra.push_back(token);
      }
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering-based approximate maximum inner product search"};
  app.name("livf");
  app.require_subcommand(1);
  std::string config_file;

  livf::cli::GenSyntheticCmd gen;
  std::string gen_docs_out, gen_queries_out;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-synthetic", "Generate a synthetic doc/query set");
  gen_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  gen_cmd->add_option("--docs", gen.n_docs, "Number of documents")->required();
  gen_cmd->add_option("--queries", gen.n_queries, "Number of queries")->required();
  gen_cmd->add_option("--dim", gen.dim, "Vector dimension")->required();
  gen_cmd->add_option("--blobs", gen.n_blobs, "Number of Gaussian blobs");
  gen_cmd->add_option("--center-scale", gen.center_scale,
                      "Std dev of blob center coordinates");
  gen_cmd->add_option("--min-axis-scale", gen.min_axis_scale,
                      "Smallest per-axis blob std dev");
  gen_cmd->add_option("--max-axis-scale", gen.max_axis_scale,
                      "Largest per-axis blob std dev");
  gen_cmd->add_option("--query-noise", gen.query_noise,
                      "Std dev of query perturbation");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--docs-out", gen_docs_out, "Output path for documents")
      ->required();
  gen_cmd->add_option("--queries-out", gen_queries_out, "Output path for queries")
      ->required();

  livf::cli::ConvertCmd convert;
  std::string convert_in, convert_out;
  CLI::App* convert_cmd =
      app.add_subcommand("convert", "Convert a numeric text matrix to vectors");
  convert_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  convert_cmd->add_option("--in", convert_in, "Text matrix path")->required();
  convert_cmd->add_option("--out", convert_out, "Output vector file")->required();

  livf::cli::BuildCmd build;
  std::string build_docs, build_out;
  CLI::App* build_cmd = app.add_subcommand("build", "Cluster documents and build an index");
  build_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  build_cmd->add_option("--docs", build_docs, "Document vector file")->required();
  build_cmd->add_option("--out", build_out, "Output index file")->required();
  build_cmd->add_option("--clustering", build.clustering,
                        "standard, spherical or shallow");
  build_cmd->add_option("--clusters", build.num_clusters,
                        "Cluster count (0 = ceil of sqrt of doc count)");
  build_cmd->add_option("--max-iters", build.max_iters, "Refinement iteration cap");
  build_cmd->add_option("--epsilon", build.epsilon, "Convergence threshold");
  build_cmd->add_option("--seed", build.seed, "Random seed");

  livf::cli::MakePairsCmd pairs;
  std::string pairs_index, pairs_queries, pairs_out_dir;
  CLI::App* pairs_cmd = app.add_subcommand(
      "make-pairs", "Build and split query/cluster supervision pairs");
  pairs_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  pairs_cmd->add_option("--index", pairs_index, "Index file")->required();
  pairs_cmd->add_option("--queries", pairs_queries, "Query vector file")->required();
  pairs_cmd->add_option("--out-dir", pairs_out_dir, "Output directory")->required();
  pairs_cmd->add_option("--label-k", pairs.label_k,
                        "Mark clusters owning the exact top-k documents");
  pairs_cmd->add_option("--seed", pairs.seed, "Random seed");

  livf::cli::TrainCmd train;
  std::string train_dir, train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a routing model");
  train_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  train_cmd->add_option("--pairs-dir", train_dir, "Directory from make-pairs")
      ->required();
  train_cmd->add_option("--out", train_out, "Output model file")->required();
  train_cmd->add_option("--hidden", train.hidden,
                        "Hidden layer width (0 = linear model)");
  train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch-size", train.batch_size, "Minibatch size");
  train_cmd->add_option("--max-epochs", train.max_epochs, "Epoch cap");
  train_cmd->add_option("--loss", train.loss, "top1 or topk");
  train_cmd->add_option("--seed", train.seed, "Random seed");

  livf::cli::EvalCmd eval;
  std::string eval_index, eval_queries, eval_model, eval_labels, eval_out;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate routers and write a report");
  eval_cmd->add_option("--config", config_file,
                      "Flat key=value file; command-line flags override it");
  eval_cmd->add_option("--index", eval_index, "Index file")->required();
  eval_cmd->add_option("--queries", eval_queries, "Query vector file")->required();
  eval_cmd->add_option("--model", eval_model, "Trained model file (optional)");
  eval_cmd->add_option("--labels", eval_labels,
                       "Label file for rank metrics (optional)");
  eval_cmd->add_option("--out", eval_out, "Output report file")->required();
  eval_cmd->add_option("--format", eval.format, "csv or json");
  eval_cmd->add_option("--k", eval.k_values, "Top-k sizes to evaluate");
  eval_cmd->add_option("--ell", eval.ell_grid,
                       "Probed cluster counts (default: derived from L)");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset label for the report");
  eval_cmd->add_option("--clustering", eval.clustering,
                       "Clustering label for the report");

  std::vector<std::string> args(argv + 1, argv + argc);
  if (const int rc = run_guarded([&] { expand_config_args(args); }); rc != 0) {
    return rc;
  }
  try {
    std::reverse(args.begin(), args.end());  // parse() consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (*gen_cmd) {
    gen.docs_out = gen_docs_out;
    gen.queries_out = gen_queries_out;
    return run_guarded([&] { livf::cli::run_gen_synthetic(gen, std::cout); });
  }
  if (*convert_cmd) {
    convert.text_in = convert_in;
    convert.vectors_out = convert_out;
    return run_guarded([&] { livf::cli::run_convert(convert, std::cout); });
  }
  if (*build_cmd) {
    build.docs_path = build_docs;
    build.index_out = build_out;
    return run_guarded([&] { livf::cli::run_build(build, std::cout); });
  }
  if (*pairs_cmd) {
    pairs.index_path = pairs_index;
    pairs.queries_path = pairs_queries;
    pairs.out_dir = pairs_out_dir;
    return run_guarded([&] { livf::cli::run_make_pairs(pairs, std::cout); });
  }
  if (*train_cmd) {
    train.pairs_dir = train_dir;
    train.model_out = train_out;
    return run_guarded([&] { livf::cli::run_train(train, std::cout); });
  }
  if (*eval_cmd) {
    eval.index_path = eval_index;
    eval.queries_path = eval_queries;
    eval.model_path = eval_model;
    eval.labels_path = eval_labels;
    eval.report_out = eval_out;
    return run_guarded([&] { livf::cli::run_eval(eval, std::cout); });
  }
  return 2;
}
