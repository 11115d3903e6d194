#include "livf/router_models.hpp"

#include <string>

#include "livf/binio.hpp"

namespace livf {

namespace {

constexpr std::uint16_t kRouterFormatVersion = 1;
constexpr std::uint8_t kKindLinear = 1;
constexpr std::uint8_t kKindMlp = 2;

void check_query(std::uint32_t dim, const Vector& q) {
  if (q.dim() != dim) {
    throw DimensionError("query dimension " + std::to_string(q.dim()) +
                         " does not match router dimension " + std::to_string(dim));
  }
}

void validate_linear(const LinearRouterModel& m) {
  if (m.num_clusters == 0 || m.dim == 0) {
    throw InvalidParamError("linear router shape must be positive");
  }
  if (m.weights.size() !=
      static_cast<std::size_t>(m.num_clusters) * m.dim) {
    throw InvalidParamError("linear router weight count does not match its shape");
  }
}

void validate_mlp(const MlpRouterModel& m) {
  if (m.num_clusters == 0 || m.dim == 0 || m.hidden == 0) {
    throw InvalidParamError("mlp router shape must be positive");
  }
  const std::size_t h = m.hidden, n = m.dim, L = m.num_clusters;
  if (m.w1.size() != h * n || m.b1.size() != h || m.w2.size() != L * h ||
      m.b2.size() != L) {
    throw InvalidParamError("mlp router parameter counts do not match its shape");
  }
}

}  // namespace

std::size_t mlp_param_count(std::size_t dim, std::size_t hidden,
                            std::size_t num_clusters) {
  return hidden * dim + hidden + num_clusters * hidden + num_clusters;
}

std::vector<double> linear_scores(const LinearRouterModel& m, const Vector& q) {
  validate_linear(m);
  check_query(m.dim, q);
  std::vector<double> scores(m.num_clusters);
  for (std::size_t c = 0; c < m.num_clusters; ++c) {
    const float* row = m.weights.data() + c * m.dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < m.dim; ++j) {
      acc += static_cast<double>(row[j]) * q[j];
    }
    scores[c] = acc;
  }
  return scores;
}

std::vector<double> mlp_scores(const MlpRouterModel& m, const Vector& q) {
  validate_mlp(m);
  check_query(m.dim, q);
  const std::size_t h = m.hidden, n = m.dim, L = m.num_clusters;
  std::vector<double> act(h);
  for (std::size_t u = 0; u < h; ++u) {
    const float* row = m.w1.data() + u * n;
    double acc = static_cast<double>(m.b1[u]);
    for (std::size_t j = 0; j < n; ++j) {
      acc += static_cast<double>(row[j]) * q[j];
    }
    act[u] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> scores(L);
  for (std::size_t c = 0; c < L; ++c) {
    const float* row = m.w2.data() + c * h;
    double acc = static_cast<double>(m.b2[c]);
    for (std::size_t u = 0; u < h; ++u) {
      acc += static_cast<double>(row[u]) * act[u];
    }
    scores[c] = acc;
  }
  return scores;
}

void save_router_model(const RouterModel& model, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.write_magic("LRTW");
  w.write_u16(kRouterFormatVersion);
  if (const auto* lin = std::get_if<LinearRouterModel>(&model)) {
    validate_linear(*lin);
    const std::uint8_t kind[1] = {kKindLinear};
    w.write_bytes(kind);
    w.write_u32(lin->num_clusters);
    w.write_u32(lin->dim);
    w.write_f32_array(lin->weights);
  } else {
    const auto& mlp = std::get<MlpRouterModel>(model);
    validate_mlp(mlp);
    const std::uint8_t kind[1] = {kKindMlp};
    w.write_bytes(kind);
    w.write_u32(mlp.num_clusters);
    w.write_u32(mlp.dim);
    w.write_u32(mlp.hidden);
    w.write_f32_array(mlp.w1);
    w.write_f32_array(mlp.b1);
    w.write_f32_array(mlp.w2);
    w.write_f32_array(mlp.b2);
  }
  w.finish();
}

RouterModel load_router_model(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.expect_magic("LRTW");
  const std::size_t version_at = r.offset();
  const std::uint16_t version = r.read_u16();
  if (version != kRouterFormatVersion) {
    throw FormatError(path.string() + ": unsupported router format version " +
                          std::to_string(version),
                      version_at);
  }
  const std::size_t kind_at = r.offset();
  const std::uint8_t kind = r.read_u8();
  if (kind == kKindLinear) {
    LinearRouterModel m;
    m.num_clusters = r.read_u32();
    m.dim = r.read_u32();
    if (m.num_clusters == 0 || m.dim == 0) {
      throw FormatError(path.string() + ": router shape must be positive", kind_at + 1);
    }
    m.weights.resize(static_cast<std::size_t>(m.num_clusters) * m.dim);
    r.read_f32_array(m.weights, "linear router weights");
    r.expect_end();
    return m;
  }
  if (kind == kKindMlp) {
    MlpRouterModel m;
    m.num_clusters = r.read_u32();
    m.dim = r.read_u32();
    m.hidden = r.read_u32();
    if (m.num_clusters == 0 || m.dim == 0 || m.hidden == 0) {
      throw FormatError(path.string() + ": router shape must be positive", kind_at + 1);
    }
    const std::size_t h = m.hidden, n = m.dim, L = m.num_clusters;
    m.w1.resize(h * n);
    m.b1.resize(h);
    m.w2.resize(L * h);
    m.b2.resize(L);
    r.read_f32_array(m.w1, "mlp layer 1 weights");
    r.read_f32_array(m.b1, "mlp layer 1 biases");
    r.read_f32_array(m.w2, "mlp layer 2 weights");
    r.read_f32_array(m.b2, "mlp layer 2 biases");
    r.expect_end();
    return m;
  }
  throw FormatError(path.string() + ": unknown router kind tag " +
                        std::to_string(static_cast<int>(kind)),
                    kind_at);
}

}  // namespace livf
