#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "livf/ivf_index.hpp"
#include "livf/router_learning.hpp"

namespace livf {

// Per-query values are fractions in [0, 1]; `mean` is their average.
struct AccuracyResult {
  double mean = 0.0;
  std::vector<double> per_query;
};

// Fraction of each query's exact top-k documents whose owning cluster is
// among the routed top-ell clusters, averaged over queries.
AccuracyResult topk_accuracy(const IvfIndex& index, const Router& router,
                             const VectorSet& queries, std::size_t k,
                             std::size_t ell);

struct SweepRow {
  std::string router;
  std::size_t ell = 0;
  double accuracy = 0.0;
  std::vector<double> per_query;
};

struct SweepTable {
  std::size_t k = 0;
  std::vector<SweepRow> rows;  // grouped by router, ell ascending
};

// topk_accuracy for every router at every ell of the grid. The exact top-k
// oracle and the cluster orderings are computed once per query and shared
// across the grid, so the rows match individual topk_accuracy calls while
// costing one oracle scan instead of |grid| of them.
SweepTable accuracy_sweep(const IvfIndex& index, const std::vector<Router>& routers,
                          const VectorSet& queries, std::size_t k,
                          std::span<const std::size_t> ell_grid);

// 10 evenly spaced integers covering 0.1% to 1% of L, clamped to at least 1;
// duplicates collapse, so short grids are possible for small L.
std::vector<std::size_t> default_ell_grid(std::size_t num_clusters);

// Mean reciprocal rank; ranks are 1-based.
double mrr(std::span<const std::size_t> ranks);

// For each one-hot pair, the 1-based position of the labeled cluster in the
// router's score ordering (descending score, ties to the lower id).
std::vector<std::size_t> router_ranks(const Router& router,
                                      const std::vector<TrainingPair>& pairs);

// Paired comparison of two per-query hit sequences. b counts queries only A
// got right, c counts queries only B got right. Small discordant totals
// (b + c < 25) use the exact two-sided binomial tail with min(b, c) as the
// statistic; larger ones use the continuity-corrected chi-squared statistic
// (|b - c| - 1)^2 / (b + c) with its one-degree-of-freedom tail.
struct McNemarResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t b_count = 0;
  std::size_t c_count = 0;
  bool exact = false;
};

McNemarResult mcnemar(const std::vector<std::uint8_t>& hits_a,
                      const std::vector<std::uint8_t>& hits_b);

// One aggregated report row.
struct EvalRecord {
  std::string dataset;
  std::string clustering;
  std::string router;
  std::size_t k = 0;
  std::size_t ell = 0;
  double accuracy = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

enum class ReportFormat { Csv, Json };

// Writes records sorted by (dataset, clustering, router, k, ell). CSV gets
// the header `dataset,clustering,router,k,ell,accuracy`; JSON is an array
// of objects with the same keys. Numbers are formatted shortest-round-trip,
// so identical records always produce identical bytes.
void emit_report(std::vector<EvalRecord> records, const std::filesystem::path& path,
                 ReportFormat format);

// Parses a report back; accepts both formats emitted above.
std::vector<EvalRecord> read_report(const std::filesystem::path& path,
                                    ReportFormat format);

}  // namespace livf
