#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "livf/clustering.hpp"
#include "livf/router_models.hpp"
#include "livf/vectorspace.hpp"

namespace livf {

// Inverted-file index: documents partitioned into clusters, one float32
// representative row per cluster for routing, full vectors kept for the
// in-cluster scan.
struct IvfIndex {
  std::uint32_t dim = 0;
  std::uint32_t num_clusters = 0;                   // L
  std::vector<float> rep_matrix;                    // L x dim, row-major
  std::vector<std::vector<std::uint32_t>> members;  // ascending ids per cluster
  std::vector<std::uint32_t> doc_to_cluster;        // derived from members
  VectorSet docs;
};

// Freezes a clustering over `docs` into an index. The clustering must cover
// every doc id exactly once.
IvfIndex build_index(const VectorSet& docs, const ClusteringResult& clustering);

// Scores clusters for a query; routing keeps the highest scores. The
// baseline kind scores by inner product with the stored representatives,
// the learnt kinds run their model forward pass.
class Router {
 public:
  static Router baseline(const IvfIndex& index);
  static Router linear(LinearRouterModel model);
  static Router mlp(MlpRouterModel model);

  const std::string& name() const { return name_; }
  std::size_t num_clusters() const;
  std::size_t dim() const;
  std::vector<double> score(const Vector& q) const;

 private:
  struct Baseline {
    std::uint32_t num_clusters = 0;
    std::uint32_t dim = 0;
    std::vector<float> reps;
  };

  Router(std::string name, std::variant<Baseline, LinearRouterModel, MlpRouterModel> impl)
      : name_(std::move(name)), impl_(std::move(impl)) {}

  std::string name_;
  std::variant<Baseline, LinearRouterModel, MlpRouterModel> impl_;
};

// The min(ell, L) cluster ids with the largest scores, best first, ties to
// the lower id.
std::vector<std::uint32_t> route(const Vector& q, const Router& r, std::size_t ell);

// Routes, then exhaustively scans the members of the routed clusters under
// the inner-product distance. Returns min(k, candidate pool) ids; with
// ell >= L this reproduces exact_top_k.
TopKResult search(const IvfIndex& index, const Vector& q, std::size_t k,
                  std::size_t ell, const Router& r);

// Size of the intersection of exact and approximate id sets, divided by k.
double ann_accuracy(const TopKResult& exact, const TopKResult& approx,
                    std::size_t k);

// Persistence: 'LIVF' magic, format version, shape header, representative
// matrix, member lists, then document vectors, all little-endian with
// float32 payloads. Loading re-validates that members partition the ids.
void save_index(const IvfIndex& index, const std::filesystem::path& path);
IvfIndex load_index(const std::filesystem::path& path);

}  // namespace livf
