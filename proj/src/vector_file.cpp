#include "livf/vector_file.hpp"

#include <charconv>
#include <string_view>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "livf/binio.hpp"
#include "livf/errors.hpp"

namespace livf {

namespace {

constexpr std::string_view kVecMagic = "LVEC";
constexpr std::string_view kLabMagic = "LLAB";
constexpr std::uint16_t kVecVersion = 1;
constexpr std::uint16_t kLabVersion = 1;

}  // namespace

void write_vector_file(const VectorSet& vectors, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.write_magic(kVecMagic);
  w.write_u16(kVecVersion);
  w.write_u32(static_cast<std::uint32_t>(vectors.size()));
  w.write_u32(static_cast<std::uint32_t>(vectors.dim()));
  w.write_f32_array(vectors.flat());
  w.finish();
}

VectorSet read_vector_file(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.expect_magic(kVecMagic);
  const std::size_t version_at = r.offset();
  const std::uint16_t version = r.read_u16();
  if (version != kVecVersion) {
    throw FormatError(r.source() + ": unsupported vector file version " +
                          std::to_string(version),
                      version_at);
  }
  const std::size_t count_at = r.offset();
  const std::uint32_t count = r.read_u32();
  const std::size_t dim_at = r.offset();
  const std::uint32_t dim = r.read_u32();
  if (count == 0) {
    throw FormatError(r.source() + ": vector count must be positive", count_at);
  }
  if (dim == 0) {
    throw FormatError(r.source() + ": vector dimension must be positive", dim_at);
  }
  std::vector<float> flat(static_cast<std::size_t>(count) * dim);
  r.read_f32_array(flat, "vector payload");
  r.expect_end();
  return VectorSet(dim, std::move(flat));
}

void write_label_file(const LabelFile& labels, const std::filesystem::path& path) {
  if (labels.width == 0) {
    throw InvalidParamError("label width must be positive");
  }
  if (labels.rows.empty()) {
    throw InvalidParamError("label file needs at least one row");
  }
  const std::size_t row_bytes = (labels.width + 7) / 8;
  BinaryWriter w(path);
  w.write_magic(kLabMagic);
  w.write_u16(kLabVersion);
  w.write_u32(static_cast<std::uint32_t>(labels.rows.size()));
  w.write_u32(static_cast<std::uint32_t>(labels.width));
  std::vector<std::uint8_t> packed(row_bytes);
  for (const auto& row : labels.rows) {
    if (row.size() != labels.width) {
      throw DimensionError("label row width mismatch");
    }
    std::fill(packed.begin(), packed.end(), 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 1) {
        throw InvalidLabelError("label entries must be 0 or 1");
      }
      packed[j / 8] = static_cast<std::uint8_t>(packed[j / 8] |
                                                (row[j] << (j % 8)));
    }
    w.write_bytes(packed);
  }
  w.finish();
}

LabelFile read_label_file(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.expect_magic(kLabMagic);
  const std::size_t version_at = r.offset();
  const std::uint16_t version = r.read_u16();
  if (version != kLabVersion) {
    throw FormatError(r.source() + ": unsupported label file version " +
                          std::to_string(version),
                      version_at);
  }
  const std::size_t count_at = r.offset();
  const std::uint32_t count = r.read_u32();
  const std::size_t width_at = r.offset();
  const std::uint32_t width = r.read_u32();
  if (count == 0) {
    throw FormatError(r.source() + ": label count must be positive", count_at);
  }
  if (width == 0) {
    throw FormatError(r.source() + ": label width must be positive", width_at);
  }
  const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
  LabelFile labels;
  labels.width = width;
  labels.rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t row_at = r.offset();
    const std::uint8_t* bytes = r.read_bytes(row_bytes, "label row");
    auto& row = labels.rows[i];
    row.resize(width);
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = static_cast<std::uint8_t>((bytes[j / 8] >> (j % 8)) & 1u);
    }
    for (std::size_t j = width; j < row_bytes * 8; ++j) {
      if ((bytes[j / 8] >> (j % 8)) & 1u) {
        throw FormatError(r.source() + ": nonzero padding bit in label row",
                          row_at + j / 8);
      }
    }
  }
  r.expect_end();
  return labels;
}

VectorSet read_text_matrix(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::vector<float> flat;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(file, line)) {
    const std::size_t line_at = offset;
    offset += line.size() + 1;
    // Commas count as separators so both csv-ish and spaced dumps load.
    std::size_t width = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      if (line[i] == ',' || std::isspace(static_cast<unsigned char>(line[i]))) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && line[j] != ',' &&
             !std::isspace(static_cast<unsigned char>(line[j]))) {
        ++j;
      }
      float v = 0.0f;
      const auto res = std::from_chars(line.data() + i, line.data() + j, v);
      if (res.ec != std::errc() || res.ptr != line.data() + j) {
        throw FormatError(path.string() + ": bad numeric token '" +
                              line.substr(i, j - i) + "'",
                          line_at + i);
      }
      if (!std::isfinite(v)) {
        throw FormatError(path.string() + ": non-finite value in text matrix",
                          line_at + i);
      }
      flat.push_back(v);
      ++width;
      i = j;
    }
    if (width == 0) {
      continue;  // blank or separator-only line
    }
    if (dim == 0) {
      dim = width;
    } else if (width != dim) {
      throw FormatError(path.string() + ": row " + std::to_string(rows) + " has " +
                            std::to_string(width) + " values, expected " +
                            std::to_string(dim),
                        line_at);
    }
    ++rows;
  }
  if (rows == 0) {
    throw FormatError(path.string() + ": no numeric rows found", 0);
  }
  return VectorSet(dim, std::move(flat));
}

}  // namespace livf
