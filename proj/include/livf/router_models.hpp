#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "livf/vectorspace.hpp"

namespace livf {

// Trained linear router: score(q) = W q, one row per cluster. The rows play
// the role of learnt representative points.
struct LinearRouterModel {
  std::uint32_t num_clusters = 0;  // L
  std::uint32_t dim = 0;           // n
  std::vector<float> weights;      // L x n, row-major
};

// One-hidden-layer router with ReLU and biases:
// score(q) = w2 * relu(w1 q + b1) + b2.
struct MlpRouterModel {
  std::uint32_t num_clusters = 0;
  std::uint32_t dim = 0;
  std::uint32_t hidden = 0;
  std::vector<float> w1;  // hidden x dim
  std::vector<float> b1;  // hidden
  std::vector<float> w2;  // num_clusters x hidden
  std::vector<float> b2;  // num_clusters
};

// h*n + h + L*h + L parameters.
std::size_t mlp_param_count(std::size_t dim, std::size_t hidden,
                            std::size_t num_clusters);

// Raw routing scores (no softmax), accumulated in double precision.
std::vector<double> linear_scores(const LinearRouterModel& m, const Vector& q);
std::vector<double> mlp_scores(const MlpRouterModel& m, const Vector& q);

using RouterModel = std::variant<LinearRouterModel, MlpRouterModel>;

// Persistence: 'LRTW' magic, format version, kind tag, shape header, then
// the float32 parameter payload, all little-endian.
void save_router_model(const RouterModel& model, const std::filesystem::path& path);
RouterModel load_router_model(const std::filesystem::path& path);

}  // namespace livf
