#pragma once

// Test-side oracles and fixtures. Everything here recomputes expected values
// from first principles (plain double loops, full sorts, scalar recurrences)
// so the library cannot agree with the oracle by sharing a bug.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "livf/vectorspace.hpp"

namespace testsupport {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto candidate = base / ("livf-test-" + std::to_string(::getpid()) + "-" +
                               std::to_string(counter.fetch_add(1)));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw std::runtime_error("could not create a temp directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot read " + p.string());
  }
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& p,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw std::runtime_error("cannot write " + p.string());
  }
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Independent metric evaluation by literal formula.
inline double oracle_distance(const std::vector<double>& a,
                              const std::vector<double>& b, livf::Metric m) {
  switch (m) {
    case livf::Metric::L1: {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
      return s;
    }
    case livf::Metric::L2: {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case livf::Metric::Cosine: {
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
      }
      return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
    }
    case livf::Metric::InnerProduct: {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return -s;
    }
  }
  throw std::runtime_error("bad metric");
}

inline std::vector<double> widen(std::span<const float> row) {
  return std::vector<double>(row.begin(), row.end());
}

// Brute-force top-k: every distance, full stable ordering by (distance, id).
inline std::pair<std::vector<std::uint32_t>, std::vector<double>> oracle_top_k(
    const std::vector<double>& q, const livf::VectorSet& set, std::size_t k,
    livf::Metric m) {
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::size_t i = 0; i < set.size(); ++i) {
    all.emplace_back(oracle_distance(q, widen(set.row(i)), m),
                     static_cast<std::uint32_t>(i));
  }
  std::sort(all.begin(), all.end());
  const std::size_t keep = std::min(k, all.size());
  std::vector<std::uint32_t> ids(keep);
  std::vector<double> scores(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    ids[i] = all[i].second;
    scores[i] = all[i].first;
  }
  return {ids, scores};
}

inline double oracle_inertia(const livf::VectorSet& set,
                             const std::vector<livf::Vector>& reps) {
  double total = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = widen(set.row(i));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
      double s = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        s += (x[j] - r[j]) * (x[j] - r[j]);
      }
      best = std::min(best, s);
    }
    total += best;
  }
  return total;
}

inline double oracle_spherical_objective(const livf::VectorSet& set,
                                         const std::vector<livf::Vector>& reps) {
  double total = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = widen(set.row(i));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
      double s = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        s += x[j] * r[j];
      }
      best = std::max(best, s);
    }
    total += best;
  }
  return total;
}

// Random dense matrix as a float32 VectorSet; mt19937 keeps the fixture
// independent of the library's own generator.
inline livf::VectorSet random_set(std::size_t n, std::size_t dim,
                                  std::uint32_t seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<float> flat(n * dim);
  for (auto& v : flat) {
    v = static_cast<float>(dist(gen));
  }
  return livf::VectorSet(dim, std::move(flat));
}

inline std::vector<double> random_doubles(std::size_t n, std::uint32_t seed,
                                          double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> out(n);
  for (auto& v : out) {
    v = dist(gen);
  }
  return out;
}

}  // namespace testsupport
