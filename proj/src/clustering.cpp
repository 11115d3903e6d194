#include "livf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "livf/parallel.hpp"
#include "livf/rng.hpp"

namespace livf {

namespace {

void validate_params(const VectorSet& set, const KMeansParams& p) {
  if (p.num_clusters == 0) {
    throw InvalidParamError("number of clusters must be positive");
  }
  if (p.num_clusters > set.size()) {
    throw InvalidParamError("cannot form " + std::to_string(p.num_clusters) +
                            " clusters from " + std::to_string(set.size()) +
                            " vectors");
  }
  if (p.max_iters == 0) {
    throw InvalidParamError("max_iters must be positive");
  }
  if (!(p.epsilon >= 0.0)) {
    throw InvalidParamError("epsilon must be non-negative");
  }
}

double sq_dist(std::span<const float> x, const double* rep, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = static_cast<double>(x[j]) - rep[j];
    acc += diff * diff;
  }
  return acc;
}

double dot_d(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    acc += a[j] * b[j];
  }
  return acc;
}

std::vector<Vector> to_vectors(const std::vector<double>& flat, std::size_t L,
                               std::size_t d) {
  std::vector<Vector> out;
  out.reserve(L);
  for (std::size_t c = 0; c < L; ++c) {
    out.emplace_back(
        std::vector<double>(flat.begin() + c * d, flat.begin() + (c + 1) * d));
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> members_of(
    const std::vector<std::uint32_t>& assignments, std::size_t L) {
  std::vector<std::vector<std::uint32_t>> members(L);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    members[assignments[i]].push_back(static_cast<std::uint32_t>(i));
  }
  return members;
}

}  // namespace

double inertia(const VectorSet& set, std::span<const Vector> reps) {
  if (reps.empty()) {
    throw InvalidParamError("inertia needs at least one representative");
  }
  for (const Vector& r : reps) {
    if (r.dim() != set.dim()) {
      throw DimensionError("representative dimension " + std::to_string(r.dim()) +
                           " does not match data dimension " +
                           std::to_string(set.dim()));
    }
  }
  const std::size_t n = set.size();
  std::vector<double> nearest(n);
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vector& r : reps) {
        best = std::min(best, sq_dist(set.row(i), r.span().data(), set.dim()));
      }
      nearest[i] = best;
    }
  });
  double total = 0.0;
  for (double v : nearest) {
    total += v;
  }
  return total;
}

double spherical_objective(const VectorSet& set, std::span<const Vector> reps) {
  if (reps.empty()) {
    throw InvalidParamError("spherical objective needs at least one representative");
  }
  const std::size_t d = set.dim();
  for (const Vector& r : reps) {
    if (r.dim() != d) {
      throw DimensionError("representative dimension " + std::to_string(r.dim()) +
                           " does not match data dimension " + std::to_string(d));
    }
    double acc = 0.0;
    for (double x : r.span()) {
      acc += x * x;
    }
    const double norm = std::sqrt(acc);
    if (std::abs(norm - 1.0) > 1e-6) {
      throw NonUnitNormError("representative must be unit norm, got " +
                             std::to_string(norm));
    }
  }
  const std::size_t n = set.size();
  std::vector<double> best(n);
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::span<const float> row = set.row(i);
      double acc = 0.0;
      for (float x : row) {
        acc += static_cast<double>(x) * static_cast<double>(x);
      }
      if (std::abs(std::sqrt(acc) - 1.0) > 1e-6) {
        throw NonUnitNormError("vector id " + std::to_string(i) +
                               " must be unit norm");
      }
      double top = -std::numeric_limits<double>::infinity();
      for (const Vector& r : reps) {
        double ip = 0.0;
        const double* rp = r.span().data();
        for (std::size_t j = 0; j < d; ++j) {
          ip += static_cast<double>(row[j]) * rp[j];
        }
        top = std::max(top, ip);
      }
      best[i] = top;
    }
  });
  double total = 0.0;
  for (double v : best) {
    total += v;
  }
  return total;
}

ClusteringResult standard_kmeans(const VectorSet& set, const KMeansParams& p,
                                 const IterationObserver& observer) {
  validate_params(set, p);
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  const std::size_t L = p.num_clusters;

  Rng rng(p.seed);
  const auto seed_ids = rng.sample_without_replacement(n, L);
  std::vector<double> reps(L * d);
  for (std::size_t c = 0; c < L; ++c) {
    const auto row = set.row(seed_ids[c]);
    for (std::size_t j = 0; j < d; ++j) {
      reps[c * d + j] = static_cast<double>(row[j]);
    }
  }

  std::vector<std::uint32_t> assign(n, 0);
  std::vector<std::uint32_t> counts(L, 0);
  double prev_obj = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 1; iter <= p.max_iters; ++iter) {
    parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = set.row(i);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < L; ++c) {
          const double dist = sq_dist(row, reps.data() + c * d, d);
          if (dist < best) {
            best = dist;
            best_c = static_cast<std::uint32_t>(c);
          }
        }
        assign[i] = best_c;
      }
    });

    std::fill(counts.begin(), counts.end(), 0u);
    for (std::uint32_t a : assign) {
      ++counts[a];
    }

    // A cluster that lost all members keeps the partition honest by taking
    // the point farthest from its (stale) representative; donors must keep
    // at least one member. Ties go to the lower point id.
    for (std::size_t c = 0; c < L; ++c) {
      if (counts[c] != 0) {
        continue;
      }
      std::size_t steal = n;
      double steal_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) {
          continue;
        }
        const double dist = sq_dist(set.row(i), reps.data() + c * d, d);
        if (dist > steal_dist) {
          steal_dist = dist;
          steal = i;
        }
      }
      --counts[assign[steal]];
      assign[steal] = static_cast<std::uint32_t>(c);
      counts[c] = 1;
    }

    std::vector<double> sums(L * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = set.row(i);
      double* s = sums.data() + assign[i] * d;
      for (std::size_t j = 0; j < d; ++j) {
        s[j] += static_cast<double>(row[j]);
      }
    }
    for (std::size_t c = 0; c < L; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        reps[c * d + j] = sums[c * d + j] / counts[c];
      }
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += sq_dist(set.row(i), reps.data() + assign[i] * d, d);
    }
    if (observer) {
      const auto reps_v = to_vectors(reps, L, d);
      observer(iter, obj, reps_v);
    }
    if (std::abs(prev_obj - obj) < p.epsilon) {
      break;
    }
    prev_obj = obj;
  }

  return ClusteringResult{assign, to_vectors(reps, L, d), members_of(assign, L)};
}

ClusteringResult spherical_kmeans(const VectorSet& set, const KMeansParams& p,
                                  const IterationObserver& observer) {
  validate_params(set, p);
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  const std::size_t L = p.num_clusters;

  // Normalized copies; the zero vector has no direction to cluster by.
  std::vector<double> unit(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = set.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      acc += static_cast<double>(row[j]) * static_cast<double>(row[j]);
    }
    const double norm = std::sqrt(acc);
    if (norm == 0.0) {
      throw DegenerateInputError("cannot spherically cluster zero vector id " +
                                 std::to_string(i));
    }
    for (std::size_t j = 0; j < d; ++j) {
      unit[i * d + j] = static_cast<double>(row[j]) / norm;
    }
  }

  Rng rng(p.seed);
  const auto seed_ids = rng.sample_without_replacement(n, L);
  std::vector<double> reps(L * d);
  for (std::size_t c = 0; c < L; ++c) {
    std::copy_n(unit.data() + seed_ids[c] * d, d, reps.data() + c * d);
  }

  std::vector<std::uint32_t> assign(n, 0);
  std::vector<std::uint32_t> counts(L, 0);
  double prev_obj = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 1; iter <= p.max_iters; ++iter) {
    parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double* x = unit.data() + i * d;
        double best = -std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < L; ++c) {
          const double ip = dot_d(x, reps.data() + c * d, d);
          if (ip > best) {
            best = ip;
            best_c = static_cast<std::uint32_t>(c);
          }
        }
        assign[i] = best_c;
      }
    });

    std::fill(counts.begin(), counts.end(), 0u);
    for (std::uint32_t a : assign) {
      ++counts[a];
    }

    // Same repair rule as the standard variant, with "farthest" read under
    // the inner-product distance: the point with the smallest inner product
    // against the stale representative.
    for (std::size_t c = 0; c < L; ++c) {
      if (counts[c] != 0) {
        continue;
      }
      std::size_t steal = n;
      double steal_ip = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) {
          continue;
        }
        const double ip = dot_d(unit.data() + i * d, reps.data() + c * d, d);
        if (ip < steal_ip) {
          steal_ip = ip;
          steal = i;
        }
      }
      --counts[assign[steal]];
      assign[steal] = static_cast<std::uint32_t>(c);
      counts[c] = 1;
    }

    std::vector<double> sums(L * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + assign[i] * d;
      const double* x = unit.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        s[j] += x[j];
      }
    }
    for (std::size_t c = 0; c < L; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        acc += sums[c * d + j] * sums[c * d + j];
      }
      const double norm = std::sqrt(acc);
      if (norm == 0.0) {
        // Members cancelled out exactly; the mean has no direction, so the
        // representative is reseeded to the farthest point instead.
        std::size_t pick = 0;
        double pick_ip = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          const double ip = dot_d(unit.data() + i * d, reps.data() + c * d, d);
          if (ip < pick_ip) {
            pick_ip = ip;
            pick = i;
          }
        }
        std::copy_n(unit.data() + pick * d, d, reps.data() + c * d);
      } else {
        for (std::size_t j = 0; j < d; ++j) {
          reps[c * d + j] = sums[c * d + j] / norm;
        }
      }
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += dot_d(unit.data() + i * d, reps.data() + assign[i] * d, d);
    }
    if (observer) {
      const auto reps_v = to_vectors(reps, L, d);
      observer(iter, obj, reps_v);
    }
    if (std::abs(prev_obj - obj) < p.epsilon) {
      break;
    }
    prev_obj = obj;
  }

  return ClusteringResult{assign, to_vectors(reps, L, d), members_of(assign, L)};
}

ClusteringResult shallow_kmeans(const VectorSet& set, const KMeansParams& p) {
  validate_params(set, p);
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  const std::size_t L = p.num_clusters;

  Rng rng(p.seed);
  const auto seed_ids = rng.sample_without_replacement(n, L);
  std::vector<double> reps(L * d);
  for (std::size_t c = 0; c < L; ++c) {
    const auto row = set.row(seed_ids[c]);
    for (std::size_t j = 0; j < d; ++j) {
      reps[c * d + j] = static_cast<double>(row[j]);
    }
  }

  std::vector<std::uint32_t> assign(n, 0);
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = set.row(i);
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t best_c = 0;
      for (std::size_t c = 0; c < L; ++c) {
        const double* rp = reps.data() + c * d;
        double ip = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          ip += static_cast<double>(row[j]) * rp[j];
        }
        if (ip > best) {
          best = ip;
          best_c = static_cast<std::uint32_t>(c);
        }
      }
      assign[i] = best_c;
    }
  });

  return ClusteringResult{assign, to_vectors(reps, L, d), members_of(assign, L)};
}

}  // namespace livf
