#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "livf/vectorspace.hpp"

namespace livf {

struct KMeansParams {
  std::size_t num_clusters = 1;  // L
  std::size_t max_iters = 100;
  double epsilon = 1e-6;  // stop once the objective moves less than this
  std::uint64_t seed = 0;
};

struct ClusteringResult {
  std::vector<std::uint32_t> assignments;           // per vector, in [0, L)
  std::vector<Vector> representatives;              // L entries
  std::vector<std::vector<std::uint32_t>> members;  // ascending ids per cluster

  std::size_t num_clusters() const { return representatives.size(); }
};

// Invoked after each refinement iteration with the 1-based iteration number,
// the objective value under the just-updated representatives, and those
// representatives. Lets callers watch convergence without re-deriving it.
using IterationObserver =
    std::function<void(std::size_t, double, std::span<const Vector>)>;

// Sum of squared L2 distances from each vector to its nearest representative.
double inertia(const VectorSet& set, std::span<const Vector> reps);

// Sum over vectors of the largest inner product with any representative.
// Both sides must be unit norm (within 1e-6).
double spherical_objective(const VectorSet& set, std::span<const Vector> reps);

// Lloyd iterations under squared L2: assign to the nearest representative,
// re-center each cluster on its mean. Initial representatives are L distinct
// data points drawn uniformly without replacement.
ClusteringResult standard_kmeans(const VectorSet& set, const KMeansParams& p,
                                 const IterationObserver& observer = {});

// Variant for unit-sphere data: inputs are L2-normalized up front, vectors
// join the representative with the largest inner product, and updated means
// are projected back to the sphere.
ClusteringResult spherical_kmeans(const VectorSet& set, const KMeansParams& p,
                                  const IterationObserver& observer = {});

// Degenerate single-pass variant: L seed points are drawn uniformly without
// replacement, every vector joins the seed with the largest inner product,
// and the seeds themselves are returned as representatives. No re-centering,
// so clusters whose seed wins no vector stay empty.
ClusteringResult shallow_kmeans(const VectorSet& set, const KMeansParams& p);

}  // namespace livf
