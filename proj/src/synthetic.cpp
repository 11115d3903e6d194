#include "livf/synthetic.hpp"

#include <cmath>

#include "livf/errors.hpp"
#include "livf/rng.hpp"

namespace livf {

SyntheticData generate_synthetic(const SyntheticParams& p) {
  if (p.n_docs == 0 || p.n_queries == 0 || p.dim == 0 || p.n_blobs == 0) {
    throw InvalidParamError("synthetic sizes must be positive");
  }
  if (p.n_blobs > p.n_docs) {
    throw InvalidParamError("cannot have more blobs than documents");
  }
  if (!(p.center_scale >= 0.0) || !std::isfinite(p.center_scale)) {
    throw InvalidParamError("center scale must be finite and non-negative");
  }
  if (!(p.min_axis_scale > 0.0) || !(p.max_axis_scale >= p.min_axis_scale) ||
      !std::isfinite(p.max_axis_scale)) {
    throw InvalidParamError("axis scales must satisfy 0 < min <= max");
  }
  if (!(p.query_noise >= 0.0) || !std::isfinite(p.query_noise)) {
    throw InvalidParamError("query noise must be finite and non-negative");
  }

  Rng rng(derive_seed(p.seed, "synthetic"));

  // Fixed draw order: centers, axis scales, documents, then queries, so the
  // same seed always produces the same dataset.
  std::vector<double> centers(p.n_blobs * p.dim);
  for (double& c : centers) {
    c = p.center_scale * rng.normal();
  }
  std::vector<double> scales(p.n_blobs * p.dim);
  for (double& s : scales) {
    s = rng.uniform(p.min_axis_scale, p.max_axis_scale);
  }

  std::vector<float> docs(p.n_docs * p.dim);
  std::vector<std::uint32_t> doc_blob(p.n_docs);
  for (std::size_t i = 0; i < p.n_docs; ++i) {
    const std::size_t blob = i % p.n_blobs;
    doc_blob[i] = static_cast<std::uint32_t>(blob);
    for (std::size_t d = 0; d < p.dim; ++d) {
      const double v =
          centers[blob * p.dim + d] + scales[blob * p.dim + d] * rng.normal();
      docs[i * p.dim + d] = static_cast<float>(v);
    }
  }

  std::vector<float> queries(p.n_queries * p.dim);
  std::vector<std::uint32_t> query_source_doc(p.n_queries);
  for (std::size_t i = 0; i < p.n_queries; ++i) {
    const std::size_t src = static_cast<std::size_t>(rng.bounded(p.n_docs));
    query_source_doc[i] = static_cast<std::uint32_t>(src);
    for (std::size_t d = 0; d < p.dim; ++d) {
      const double v = static_cast<double>(docs[src * p.dim + d]) +
                       p.query_noise * rng.normal();
      queries[i * p.dim + d] = static_cast<float>(v);
    }
  }

  return SyntheticData{VectorSet(p.dim, std::move(docs)),
                       VectorSet(p.dim, std::move(queries)), std::move(doc_blob),
                       std::move(query_source_doc)};
}

}  // namespace livf
