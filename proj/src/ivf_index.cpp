#include "livf/ivf_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "livf/binio.hpp"

namespace livf {

namespace {

constexpr std::uint16_t kIndexFormatVersion = 1;

std::vector<std::uint32_t> derive_doc_to_cluster(
    const std::vector<std::vector<std::uint32_t>>& members, std::size_t doc_count,
    const std::string& context) {
  std::vector<std::uint32_t> owner(doc_count, std::numeric_limits<std::uint32_t>::max());
  std::size_t covered = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (std::uint32_t id : members[c]) {
      if (id >= doc_count) {
        throw InconsistentClusteringError(context + ": member id " +
                                          std::to_string(id) + " is out of range");
      }
      if (owner[id] != std::numeric_limits<std::uint32_t>::max()) {
        throw InconsistentClusteringError(context + ": doc id " + std::to_string(id) +
                                          " appears in more than one cluster");
      }
      owner[id] = static_cast<std::uint32_t>(c);
      ++covered;
    }
  }
  if (covered != doc_count) {
    throw InconsistentClusteringError(context + ": member lists cover " +
                                      std::to_string(covered) + " of " +
                                      std::to_string(doc_count) + " doc ids");
  }
  return owner;
}

}  // namespace

IvfIndex build_index(const VectorSet& docs, const ClusteringResult& clustering) {
  const std::size_t L = clustering.num_clusters();
  if (L == 0) {
    throw InconsistentClusteringError("clustering has no clusters");
  }
  if (clustering.assignments.size() != docs.size()) {
    throw InconsistentClusteringError(
        "clustering covers " + std::to_string(clustering.assignments.size()) +
        " vectors but the document set has " + std::to_string(docs.size()));
  }
  for (const Vector& rep : clustering.representatives) {
    if (rep.dim() != docs.dim()) {
      throw DimensionError("representative dimension does not match documents");
    }
  }

  std::vector<std::vector<std::uint32_t>> members(L);
  for (std::size_t i = 0; i < clustering.assignments.size(); ++i) {
    const std::uint32_t c = clustering.assignments[i];
    if (c >= L) {
      throw InconsistentClusteringError("assignment of doc " + std::to_string(i) +
                                        " names cluster " + std::to_string(c) +
                                        " outside [0, " + std::to_string(L) + ")");
    }
    members[c].push_back(static_cast<std::uint32_t>(i));
  }
  if (members != clustering.members) {
    throw InconsistentClusteringError(
        "clustering member lists disagree with its assignments");
  }

  IvfIndex index{static_cast<std::uint32_t>(docs.dim()),
                 static_cast<std::uint32_t>(L),
                 {},
                 std::move(members),
                 derive_doc_to_cluster(clustering.members, docs.size(), "clustering"),
                 docs};
  index.rep_matrix.resize(L * docs.dim());
  for (std::size_t c = 0; c < L; ++c) {
    const auto rep = clustering.representatives[c].span();
    for (std::size_t j = 0; j < docs.dim(); ++j) {
      index.rep_matrix[c * docs.dim() + j] = static_cast<float>(rep[j]);
    }
  }
  return index;
}

Router Router::baseline(const IvfIndex& index) {
  Baseline b{index.num_clusters, index.dim, index.rep_matrix};
  return Router("baseline", std::move(b));
}

Router Router::linear(LinearRouterModel model) {
  return Router("linear", std::move(model));
}

Router Router::mlp(MlpRouterModel model) {
  std::string name = "mlp" + std::to_string(model.hidden);
  return Router(std::move(name), std::move(model));
}

std::size_t Router::num_clusters() const {
  return std::visit([](const auto& impl) -> std::size_t { return impl.num_clusters; },
                    impl_);
}

std::size_t Router::dim() const {
  return std::visit([](const auto& impl) -> std::size_t { return impl.dim; }, impl_);
}

std::vector<double> Router::score(const Vector& q) const {
  if (q.dim() != dim()) {
    throw DimensionError("query dimension " + std::to_string(q.dim()) +
                         " does not match router dimension " + std::to_string(dim()));
  }
  if (const auto* b = std::get_if<Baseline>(&impl_)) {
    std::vector<double> scores(b->num_clusters);
    for (std::size_t c = 0; c < b->num_clusters; ++c) {
      const float* row = b->reps.data() + c * b->dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < b->dim; ++j) {
        acc += static_cast<double>(row[j]) * q[j];
      }
      scores[c] = acc;
    }
    return scores;
  }
  if (const auto* lin = std::get_if<LinearRouterModel>(&impl_)) {
    return linear_scores(*lin, q);
  }
  return mlp_scores(std::get<MlpRouterModel>(impl_), q);
}

std::vector<std::uint32_t> route(const Vector& q, const Router& r, std::size_t ell) {
  if (ell == 0) {
    throw InvalidParamError("ell must be positive");
  }
  const std::vector<double> scores = r.score(q);
  const std::size_t L = scores.size();
  const std::size_t keep = std::min(ell, L);

  std::vector<std::uint32_t> ids(L);
  std::iota(ids.begin(), ids.end(), 0u);
  std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(),
                    [&scores](std::uint32_t a, std::uint32_t b) {
                      if (scores[a] != scores[b]) {
                        return scores[a] > scores[b];
                      }
                      return a < b;
                    });
  ids.resize(keep);
  return ids;
}

TopKResult search(const IvfIndex& index, const Vector& q, std::size_t k,
                  std::size_t ell, const Router& r) {
  if (k == 0) {
    throw InvalidParamError("k must be positive");
  }
  if (r.num_clusters() != index.num_clusters) {
    throw DimensionError("router scores " + std::to_string(r.num_clusters()) +
                         " clusters but the index has " +
                         std::to_string(index.num_clusters));
  }
  if (q.dim() != index.dim) {
    throw DimensionError("query dimension " + std::to_string(q.dim()) +
                         " does not match index dimension " +
                         std::to_string(index.dim));
  }
  const std::vector<std::uint32_t> clusters = route(q, r, ell);

  using Cand = std::pair<double, std::uint32_t>;
  std::priority_queue<Cand> heap;
  const std::span<const double> qs = q.span();
  for (std::uint32_t c : clusters) {
    for (std::uint32_t id : index.members[c]) {
      const std::span<const float> row = index.docs.row(id);
      double acc = 0.0;
      for (std::size_t j = 0; j < qs.size(); ++j) {
        acc += qs[j] * static_cast<double>(row[j]);
      }
      const Cand cand{-acc, id};
      if (heap.size() < k) {
        heap.push(cand);
      } else if (cand < heap.top()) {
        heap.pop();
        heap.push(cand);
      }
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

double ann_accuracy(const TopKResult& exact, const TopKResult& approx,
                    std::size_t k) {
  if (k == 0) {
    throw InvalidParamError("k must be positive");
  }
  if (exact.ids.size() != k) {
    throw InvalidParamError("exact result has " + std::to_string(exact.ids.size()) +
                            " ids, expected " + std::to_string(k));
  }
  std::vector<std::uint32_t> a(exact.ids);
  std::vector<std::uint32_t> b(approx.ids);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::uint32_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(k);
}

void save_index(const IvfIndex& index, const std::filesystem::path& path) {
  if (index.members.size() != index.num_clusters) {
    throw InconsistentClusteringError("index member list count does not match L");
  }
  BinaryWriter w(path);
  w.write_magic("LIVF");
  w.write_u16(kIndexFormatVersion);
  w.write_u32(index.dim);
  w.write_u32(index.num_clusters);
  w.write_u32(static_cast<std::uint32_t>(index.docs.size()));
  w.write_f32_array(index.rep_matrix);
  for (const auto& list : index.members) {
    w.write_u32(static_cast<std::uint32_t>(list.size()));
    for (std::uint32_t id : list) {
      w.write_u32(id);
    }
  }
  w.write_f32_array(index.docs.flat());
  w.finish();
}

IvfIndex load_index(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.expect_magic("LIVF");
  const std::size_t version_at = r.offset();
  const std::uint16_t version = r.read_u16();
  if (version != kIndexFormatVersion) {
    throw FormatError(path.string() + ": unsupported index format version " +
                          std::to_string(version),
                      version_at);
  }
  const std::uint32_t dim = r.read_u32();
  const std::uint32_t L = r.read_u32();
  const std::uint32_t doc_count = r.read_u32();
  if (dim == 0 || L == 0 || doc_count == 0) {
    throw FormatError(path.string() + ": index shape must be positive", version_at + 2);
  }

  std::vector<float> reps(static_cast<std::size_t>(L) * dim);
  r.read_f32_array(reps, "representative matrix");

  std::vector<std::vector<std::uint32_t>> members(L);
  for (std::size_t c = 0; c < L; ++c) {
    const std::size_t count_at = r.offset();
    const std::uint32_t count = r.read_u32();
    if (count > doc_count) {
      throw FormatError(path.string() + ": member list longer than document count",
                        count_at);
    }
    members[c].resize(count);
    for (std::uint32_t& id : members[c]) {
      id = r.read_u32();
    }
    if (!std::is_sorted(members[c].begin(), members[c].end())) {
      throw FormatError(path.string() + ": member list is not sorted", count_at);
    }
  }

  std::vector<float> flat(static_cast<std::size_t>(doc_count) * dim);
  r.read_f32_array(flat, "document vectors");
  r.expect_end();

  std::vector<std::uint32_t> owner =
      derive_doc_to_cluster(members, doc_count, path.string());
  return IvfIndex{dim,
                  L,
                  std::move(reps),
                  std::move(members),
                  std::move(owner),
                  VectorSet(dim, std::move(flat))};
}

}  // namespace livf
