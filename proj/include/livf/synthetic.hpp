#pragma once

#include <cstdint>
#include <vector>

#include "livf/vectorspace.hpp"

namespace livf {

// Gaussian blob mixture with per-blob anisotropic axis scales and centers of
// varied norm. Queries are noisy copies of randomly chosen documents, so each
// query has a well-defined "home" document and, through it, a home blob.
struct SyntheticParams {
  std::size_t n_docs = 0;
  std::size_t n_queries = 0;
  std::size_t dim = 0;
  std::size_t n_blobs = 1;
  double center_scale = 4.0;
  double min_axis_scale = 0.25;
  double max_axis_scale = 2.0;
  double query_noise = 0.25;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  VectorSet docs;
  VectorSet queries;
  std::vector<std::uint32_t> doc_blob;
  std::vector<std::uint32_t> query_source_doc;
};

SyntheticData generate_synthetic(const SyntheticParams& params);

}  // namespace livf
