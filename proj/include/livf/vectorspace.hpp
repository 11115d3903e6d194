#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "livf/errors.hpp"

namespace livf {

// Distance selector. All four are distances: smaller means closer, so
// InnerProduct is the negated dot product and Cosine is 1 - cos(a, b).
enum class Metric { L1, L2, Cosine, InnerProduct };

// Dense embedding vector. Components are held in double precision; bulk
// storage (VectorSet, files) is float32 and widened on access.
class Vector {
 public:
  explicit Vector(std::vector<double> comps);
  static Vector from_floats(std::span<const float> comps);

  std::size_t dim() const { return comps_.size(); }
  double operator[](std::size_t i) const { return comps_[i]; }
  std::span<const double> span() const { return comps_; }

  bool operator==(const Vector& other) const { return comps_ == other.comps_; }

 private:
  std::vector<double> comps_;
};

// Immutable row-major collection of same-dimension vectors, float32 storage.
class VectorSet {
 public:
  VectorSet(std::size_t dim, std::vector<float> flat);
  static VectorSet from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t size() const { return flat_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(flat_.data() + i * dim_, dim_);
  }
  // Widened copy of row i.
  Vector vec(std::size_t i) const { return Vector::from_floats(row(i)); }
  const std::vector<float>& flat() const { return flat_; }

 private:
  std::size_t dim_;
  std::vector<float> flat_;
};

struct TopKResult {
  std::vector<std::uint32_t> ids;  // best first; ties go to the lower id
  std::vector<double> scores;      // distances, non-decreasing
};

double dot(const Vector& a, const Vector& b);
double dot(const Vector& a, std::span<const float> b);
double dot(std::span<const float> a, std::span<const float> b);

double distance(const Vector& a, const Vector& b, Metric m);

// Returns v scaled to unit L2 norm; the zero vector has no direction and
// raises DegenerateInputError.
Vector l2_normalize(const Vector& v);

// Exhaustive scan of `set` returning the min(k, set.size()) closest ids
// under metric m, best first, ties to the lower id.
TopKResult exact_top_k(const Vector& q, const VectorSet& set, std::size_t k,
                       Metric m);

}  // namespace livf
