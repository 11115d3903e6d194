#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace livf::cli {

// Each run_* function is the whole command minus argument parsing, so the
// pipeline can be driven in-process by tests and out-of-process by the
// executable. They throw on failure; the executable maps exception types to
// exit codes. `log` receives the command's human-facing output.

struct GenSyntheticCmd {
  std::size_t n_docs = 0;
  std::size_t n_queries = 0;
  std::size_t dim = 0;
  std::size_t n_blobs = 1;
  double center_scale = 4.0;
  double min_axis_scale = 0.25;
  double max_axis_scale = 2.0;
  double query_noise = 0.25;
  std::uint64_t seed = 0;
  std::filesystem::path docs_out;
  std::filesystem::path queries_out;
};
void run_gen_synthetic(const GenSyntheticCmd& cmd, std::ostream& log);

struct ConvertCmd {
  std::filesystem::path text_in;
  std::filesystem::path vectors_out;
};
void run_convert(const ConvertCmd& cmd, std::ostream& log);

struct BuildCmd {
  std::filesystem::path docs_path;
  std::filesystem::path index_out;
  std::string clustering = "standard";  // standard | spherical | shallow
  std::size_t num_clusters = 0;         // 0 = ceil(sqrt(doc count))
  std::size_t max_iters = 100;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
};
void run_build(const BuildCmd& cmd, std::ostream& log);

struct MakePairsCmd {
  std::filesystem::path index_path;
  std::filesystem::path queries_path;
  std::filesystem::path out_dir;  // receives {train,val,test}.{lvec,llab}
  std::size_t label_k = 1;        // clusters owning the exact top-k docs
  std::uint64_t seed = 0;
};
void run_make_pairs(const MakePairsCmd& cmd, std::ostream& log);

struct TrainCmd {
  std::filesystem::path pairs_dir;  // directory written by make-pairs
  std::filesystem::path model_out;
  std::size_t hidden = 0;  // 0 = linear router
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 100;
  std::string loss = "top1";  // top1 | topk
  std::uint64_t seed = 0;
};
void run_train(const TrainCmd& cmd, std::ostream& log);

struct EvalCmd {
  std::filesystem::path index_path;
  std::filesystem::path queries_path;
  std::filesystem::path model_path;   // empty = baseline router only
  std::filesystem::path labels_path;  // optional, enables rank reporting
  std::filesystem::path report_out;
  std::string format = "csv";  // csv | json
  std::vector<std::size_t> k_values = {1};
  std::vector<std::size_t> ell_grid;  // empty = derived from L
  std::string dataset;                // empty = stem of the index file
  std::string clustering = "unknown";
};
void run_eval(const EvalCmd& cmd, std::ostream& log);

}  // namespace livf::cli
