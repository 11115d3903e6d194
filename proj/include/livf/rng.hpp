#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace livf {

// Derives a per-stage seed from one root seed so that pipeline stages can be
// rerun independently while staying reproducible. The derivation is fixed:
//
//   derive_seed(root, stage, index) = mix(mix(root ^ fnv1a(stage)) ^ index)
//
// where mix is the splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                          std::uint64_t index = 0);

// Seeded generator with portable bounded/uniform/normal draws. mt19937_64 is
// fully specified by the standard; the std:: distributions on top of it are
// not, which would break byte-identical outputs across standard libraries,
// so the draw logic lives here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform in [0, n); unbiased via rejection. n must be positive.
  std::uint64_t bounded(std::uint64_t n);

  // Standard normal via Box-Muller.
  double normal();

  // Draws k distinct indices from [0, n) in draw order.
  std::vector<std::uint32_t> sample_without_replacement(std::uint64_t n,
                                                        std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace livf
