#include "livf/vectorspace.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "livf/parallel.hpp"

namespace livf {

namespace {

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) {
    acc += x * x;
  }
  return std::sqrt(acc);
}

double l2_norm(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) {
    acc += static_cast<double>(x) * static_cast<double>(x);
  }
  return std::sqrt(acc);
}

void check_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("dimension mismatch: " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

}  // namespace

Vector::Vector(std::vector<double> comps) : comps_(std::move(comps)) {
  if (comps_.empty()) {
    throw InvalidParamError("vector must have at least one component");
  }
  for (double c : comps_) {
    if (!std::isfinite(c)) {
      throw InvalidParamError("vector component is not finite");
    }
  }
}

Vector Vector::from_floats(std::span<const float> comps) {
  std::vector<double> widened(comps.begin(), comps.end());
  return Vector(std::move(widened));
}

VectorSet::VectorSet(std::size_t dim, std::vector<float> flat)
    : dim_(dim), flat_(std::move(flat)) {
  if (dim_ == 0) {
    throw InvalidParamError("vector set dimension must be positive");
  }
  if (flat_.empty()) {
    throw InvalidParamError("vector set must not be empty");
  }
  if (flat_.size() % dim_ != 0) {
    throw InvalidParamError("flat payload of " + std::to_string(flat_.size()) +
                            " floats is not a multiple of dimension " +
                            std::to_string(dim_));
  }
  for (float c : flat_) {
    if (!std::isfinite(c)) {
      throw InvalidParamError("vector set contains a non-finite component");
    }
  }
}

VectorSet VectorSet::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) {
    throw InvalidParamError("vector set must not be empty");
  }
  const std::size_t dim = rows.front().size();
  std::vector<float> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    check_same_dim(dim, r.size());
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return VectorSet(dim, std::move(flat));
}

double dot(const Vector& a, const Vector& b) {
  check_same_dim(a.dim(), b.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

double dot(const Vector& a, std::span<const float> b) {
  check_same_dim(a.dim(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    acc += a[i] * static_cast<double>(b[i]);
  }
  return acc;
}

double dot(std::span<const float> a, std::span<const float> b) {
  check_same_dim(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double distance(const Vector& a, const Vector& b, Metric m) {
  check_same_dim(a.dim(), b.dim());
  switch (m) {
    case Metric::L1: {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.dim(); ++i) {
        acc += std::abs(a[i] - b[i]);
      }
      return acc;
    }
    case Metric::L2: {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case Metric::Cosine: {
      const double na = l2_norm(a.span());
      const double nb = l2_norm(b.span());
      if (na == 0.0 || nb == 0.0) {
        throw DegenerateInputError("cosine distance is undefined for a zero vector");
      }
      return 1.0 - dot(a, b) / (na * nb);
    }
    case Metric::InnerProduct:
      return -dot(a, b);
  }
  throw InvalidParamError("unknown metric");
}

Vector l2_normalize(const Vector& v) {
  const double norm = l2_norm(v.span());
  if (norm == 0.0) {
    throw DegenerateInputError("cannot normalize the zero vector");
  }
  std::vector<double> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = v[i] / norm;
  }
  return Vector(std::move(out));
}

TopKResult exact_top_k(const Vector& q, const VectorSet& set, std::size_t k,
                       Metric m) {
  check_same_dim(q.dim(), set.dim());
  if (k == 0) {
    throw InvalidParamError("k must be positive");
  }
  const std::size_t n = set.size();
  const std::size_t keep = std::min(k, n);

  double q_norm = 0.0;
  if (m == Metric::Cosine) {
    q_norm = l2_norm(q.span());
    if (q_norm == 0.0) {
      throw DegenerateInputError("cosine distance is undefined for a zero query");
    }
  }

  // Distances are computed per row (independent of any thread split) and
  // selected in one deterministic pass.
  std::vector<double> dists(n);
  const std::span<const double> qs = q.span();
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::span<const float> row = set.row(i);
      switch (m) {
        case Metric::L1: {
          double acc = 0.0;
          for (std::size_t j = 0; j < qs.size(); ++j) {
            acc += std::abs(qs[j] - static_cast<double>(row[j]));
          }
          dists[i] = acc;
          break;
        }
        case Metric::L2: {
          double acc = 0.0;
          for (std::size_t j = 0; j < qs.size(); ++j) {
            const double d = qs[j] - static_cast<double>(row[j]);
            acc += d * d;
          }
          dists[i] = std::sqrt(acc);
          break;
        }
        case Metric::Cosine: {
          const double rn = l2_norm(row);
          if (rn == 0.0) {
            throw DegenerateInputError(
                "cosine distance is undefined for zero vector id " +
                std::to_string(i));
          }
          double acc = 0.0;
          for (std::size_t j = 0; j < qs.size(); ++j) {
            acc += qs[j] * static_cast<double>(row[j]);
          }
          dists[i] = 1.0 - acc / (q_norm * rn);
          break;
        }
        case Metric::InnerProduct: {
          double acc = 0.0;
          for (std::size_t j = 0; j < qs.size(); ++j) {
            acc += qs[j] * static_cast<double>(row[j]);
          }
          dists[i] = -acc;
          break;
        }
      }
    }
  });

  // Max-heap of the best `keep` candidates: the pair ordering puts the
  // largest distance (then largest id) on top, which is exactly the entry
  // to evict; equal-distance ties therefore resolve to the lower id.
  using Cand = std::pair<double, std::uint32_t>;
  std::priority_queue<Cand> heap;
  for (std::size_t i = 0; i < n; ++i) {
    Cand c{dists[i], static_cast<std::uint32_t>(i)};
    if (heap.size() < keep) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  }

  TopKResult result;
  result.ids.resize(heap.size());
  result.scores.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    result.ids[i] = heap.top().second;
    result.scores[i] = heap.top().first;
    heap.pop();
  }
  return result;
}

}  // namespace livf
