#include "livf/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "livf/parallel.hpp"

namespace livf {

namespace {

void check_router_matches(const IvfIndex& index, const Router& router) {
  if (router.num_clusters() != index.num_clusters) {
    throw DimensionError("router scores " + std::to_string(router.num_clusters()) +
                         " clusters but the index has " +
                         std::to_string(index.num_clusters));
  }
  if (router.dim() != index.dim) {
    throw DimensionError("router dimension " + std::to_string(router.dim()) +
                         " does not match index dimension " +
                         std::to_string(index.dim));
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_label_field(const std::string& s, const char* what) {
  if (s.empty()) {
    throw InvalidParamError(std::string(what) + " must not be empty");
  }
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    throw InvalidParamError(std::string(what) +
                            " must not contain commas, quotes or newlines");
  }
}

}  // namespace

AccuracyResult topk_accuracy(const IvfIndex& index, const Router& router,
                             const VectorSet& queries, std::size_t k,
                             std::size_t ell) {
  if (k == 0 || ell == 0) {
    throw InvalidParamError("k and ell must be positive");
  }
  check_router_matches(index, router);
  if (queries.dim() != index.dim) {
    throw DimensionError("query dimension does not match the index");
  }
  const std::size_t nq = queries.size();
  AccuracyResult result;
  result.per_query.resize(nq);
  parallel_for_chunks(nq, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> routed(index.num_clusters);
    for (std::size_t i = begin; i < end; ++i) {
      const Vector q = queries.vec(i);
      const TopKResult exact = exact_top_k(q, index.docs, k, Metric::InnerProduct);
      std::fill(routed.begin(), routed.end(), 0);
      for (std::uint32_t c : route(q, router, ell)) {
        routed[c] = 1;
      }
      std::size_t covered = 0;
      for (std::uint32_t id : exact.ids) {
        covered += routed[index.doc_to_cluster[id]];
      }
      result.per_query[i] =
          static_cast<double>(covered) / static_cast<double>(exact.ids.size());
    }
  });
  double total = 0.0;
  for (double v : result.per_query) {
    total += v;
  }
  result.mean = total / static_cast<double>(nq);
  return result;
}

SweepTable accuracy_sweep(const IvfIndex& index, const std::vector<Router>& routers,
                          const VectorSet& queries, std::size_t k,
                          std::span<const std::size_t> ell_grid) {
  if (k == 0) {
    throw InvalidParamError("k must be positive");
  }
  if (routers.empty()) {
    throw InvalidParamError("sweep needs at least one router");
  }
  if (ell_grid.empty()) {
    throw InvalidParamError("ell grid must be non-empty");
  }
  for (std::size_t i = 0; i < ell_grid.size(); ++i) {
    if (ell_grid[i] == 0 || (i > 0 && ell_grid[i] <= ell_grid[i - 1])) {
      throw InvalidParamError("ell grid must be strictly increasing and positive");
    }
  }
  for (const Router& r : routers) {
    check_router_matches(index, r);
  }
  if (queries.dim() != index.dim) {
    throw DimensionError("query dimension does not match the index");
  }

  const std::size_t nq = queries.size();
  const std::size_t L = index.num_clusters;

  // Owning cluster of each exact top-k document, one entry per document.
  std::vector<std::vector<std::uint32_t>> owners(nq);
  parallel_for_chunks(nq, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const TopKResult exact =
          exact_top_k(queries.vec(i), index.docs, k, Metric::InnerProduct);
      owners[i].reserve(exact.ids.size());
      for (std::uint32_t id : exact.ids) {
        owners[i].push_back(index.doc_to_cluster[id]);
      }
    }
  });

  SweepTable table;
  table.k = k;
  for (const Router& router : routers) {
    // 1-based rank of each owner cluster in this router's ordering, sorted,
    // so every grid point is a prefix count.
    std::vector<std::vector<std::uint32_t>> ranks(nq);
    parallel_for_chunks(nq, [&](std::size_t begin, std::size_t end) {
      std::vector<std::uint32_t> order(L);
      std::vector<std::uint32_t> position(L);
      for (std::size_t i = begin; i < end; ++i) {
        const std::vector<double> scores = router.score(queries.vec(i));
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&scores](std::uint32_t a, std::uint32_t b) {
                    if (scores[a] != scores[b]) {
                      return scores[a] > scores[b];
                    }
                    return a < b;
                  });
        for (std::size_t p = 0; p < L; ++p) {
          position[order[p]] = static_cast<std::uint32_t>(p + 1);
        }
        ranks[i].resize(owners[i].size());
        for (std::size_t d = 0; d < owners[i].size(); ++d) {
          ranks[i][d] = position[owners[i][d]];
        }
        std::sort(ranks[i].begin(), ranks[i].end());
      }
    });

    for (std::size_t ell : ell_grid) {
      SweepRow row;
      row.router = router.name();
      row.ell = ell;
      row.per_query.resize(nq);
      for (std::size_t i = 0; i < nq; ++i) {
        const auto& r = ranks[i];
        const std::size_t covered =
            static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), ell) -
                                     r.begin());
        row.per_query[i] =
            static_cast<double>(covered) / static_cast<double>(r.size());
      }
      double total = 0.0;
      for (double v : row.per_query) {
        total += v;
      }
      row.accuracy = total / static_cast<double>(nq);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<std::size_t> default_ell_grid(std::size_t num_clusters) {
  if (num_clusters == 0) {
    throw InvalidParamError("cluster count must be positive");
  }
  const std::size_t lo =
      std::max<std::size_t>(1, (num_clusters + 999) / 1000);  // ceil(0.1% L)
  const std::size_t hi =
      std::max(lo, (num_clusters + 99) / 100);  // ceil(1% L)
  std::vector<std::size_t> grid;
  for (int i = 0; i < 10; ++i) {
    const double v = static_cast<double>(lo) +
                     static_cast<double>(i) *
                         (static_cast<double>(hi) - static_cast<double>(lo)) / 9.0;
    const std::size_t ell = static_cast<std::size_t>(std::llround(v));
    if (grid.empty() || ell > grid.back()) {
      grid.push_back(ell);
    }
  }
  return grid;
}

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) {
    throw InvalidParamError("mrr needs at least one rank");
  }
  double total = 0.0;
  for (std::size_t r : ranks) {
    if (r == 0) {
      throw InvalidParamError("ranks are 1-based");
    }
    total += 1.0 / static_cast<double>(r);
  }
  return total / static_cast<double>(ranks.size());
}

std::vector<std::size_t> router_ranks(const Router& router,
                                      const std::vector<TrainingPair>& pairs) {
  std::vector<std::size_t> ranks(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& rel = pairs[i].relevance;
    if (rel.size() != router.num_clusters()) {
      throw DimensionError("pair relevance length does not match the router");
    }
    std::size_t label = rel.size();
    for (std::size_t j = 0; j < rel.size(); ++j) {
      if (rel[j] > 1) {
        throw InvalidLabelError("relevance entries must be 0 or 1");
      }
      if (rel[j] == 1) {
        if (label != rel.size()) {
          throw InvalidLabelError("rank of a non-one-hot pair is undefined");
        }
        label = j;
      }
    }
    if (label == rel.size()) {
      throw InvalidLabelError("relevance row has no positive entry");
    }
    const std::vector<double> scores = router.score(pairs[i].query);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[label] || (scores[j] == scores[label] && j < label)) {
        ++rank;
      }
    }
    ranks[i] = rank;
  }
  return ranks;
}

McNemarResult mcnemar(const std::vector<std::uint8_t>& hits_a,
                      const std::vector<std::uint8_t>& hits_b) {
  if (hits_a.size() != hits_b.size()) {
    throw DimensionError("hit sequences must have equal length");
  }
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < hits_a.size(); ++i) {
    if (hits_a[i] > 1 || hits_b[i] > 1) {
      throw InvalidParamError("hit flags must be 0 or 1");
    }
    if (hits_a[i] == 1 && hits_b[i] == 0) {
      ++b;
    } else if (hits_a[i] == 0 && hits_b[i] == 1) {
      ++c;
    }
  }

  McNemarResult result;
  result.b_count = b;
  result.c_count = c;
  const std::size_t n = b + c;
  if (n < 25) {
    result.exact = true;
    result.statistic = static_cast<double>(std::min(b, c));
    if (n == 0) {
      result.p_value = 1.0;
      return result;
    }
    // Two-sided binomial tail at p = 1/2: both discordant counts are small
    // enough for exact combinatorics in double precision.
    double tail = 0.0;
    double coeff = 1.0;  // C(n, 0)
    for (std::size_t i = 0; i <= std::min(b, c); ++i) {
      tail += coeff;
      coeff = coeff * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    const double p = 2.0 * tail * std::pow(0.5, static_cast<double>(n));
    result.p_value = std::min(1.0, p);
    return result;
  }

  result.exact = false;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  result.statistic = diff * diff / static_cast<double>(n);
  result.p_value = std::erfc(std::sqrt(result.statistic / 2.0));
  return result;
}

void emit_report(std::vector<EvalRecord> records, const std::filesystem::path& path,
                 ReportFormat format) {
  if (records.empty()) {
    throw InvalidParamError("report needs at least one record");
  }
  for (const EvalRecord& r : records) {
    check_label_field(r.dataset, "dataset");
    check_label_field(r.clustering, "clustering");
    check_label_field(r.router, "router");
  }
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) {
              return std::tie(a.dataset, a.clustering, a.router, a.k, a.ell) <
                     std::tie(b.dataset, b.clustering, b.router, b.k, b.ell);
            });

  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "dataset,clustering,router,k,ell,accuracy\n";
    for (const EvalRecord& r : records) {
      out << r.dataset << ',' << r.clustering << ',' << r.router << ',' << r.k
          << ',' << r.ell << ',' << format_double(r.accuracy) << '\n';
    }
  } else {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const EvalRecord& r : records) {
      nlohmann::ordered_json row;
      row["dataset"] = r.dataset;
      row["clustering"] = r.clustering;
      row["router"] = r.router;
      row["k"] = r.k;
      row["ell"] = r.ell;
      row["accuracy"] = r.accuracy;
      arr.push_back(std::move(row));
    }
    out << arr.dump(2) << '\n';
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  const std::string text = out.str();
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  file.flush();
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

std::vector<EvalRecord> read_report(const std::filesystem::path& path,
                                    ReportFormat format) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::vector<EvalRecord> records;
  if (format == ReportFormat::Json) {
    nlohmann::json arr = nlohmann::json::parse(file, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) {
      throw FormatError(path.string() + ": not a json report", 0);
    }
    for (const auto& row : arr) {
      EvalRecord r;
      r.dataset = row.at("dataset").get<std::string>();
      r.clustering = row.at("clustering").get<std::string>();
      r.router = row.at("router").get<std::string>();
      r.k = row.at("k").get<std::size_t>();
      r.ell = row.at("ell").get<std::size_t>();
      r.accuracy = row.at("accuracy").get<double>();
      records.push_back(std::move(r));
    }
    return records;
  }

  std::string line;
  std::size_t offset = 0;
  if (!std::getline(file, line)) {
    throw FormatError(path.string() + ": empty report", 0);
  }
  if (line != "dataset,clustering,router,k,ell,accuracy") {
    throw FormatError(path.string() + ": unexpected csv header", 0);
  }
  offset += line.size() + 1;
  while (std::getline(file, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 6) {
      throw FormatError(path.string() + ": csv row does not have 6 fields", offset);
    }
    EvalRecord r;
    r.dataset = fields[0];
    r.clustering = fields[1];
    r.router = fields[2];
    const auto parse_size = [&](const std::string& s) {
      std::size_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw FormatError(path.string() + ": bad integer field '" + s + "'", offset);
      }
      return v;
    };
    r.k = parse_size(fields[3]);
    r.ell = parse_size(fields[4]);
    {
      double v = 0.0;
      const auto res =
          std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), v);
      if (res.ec != std::errc() || res.ptr != fields[5].data() + fields[5].size()) {
        throw FormatError(path.string() + ": bad accuracy field '" + fields[5] + "'",
                          offset);
      }
      r.accuracy = v;
    }
    records.push_back(std::move(r));
    offset += line.size() + 1;
  }
  return records;
}

}  // namespace livf
