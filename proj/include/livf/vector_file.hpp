#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "livf/vectorspace.hpp"

namespace livf {

// Binary vector container: magic "LVEC", version u16, count u32, dim u32,
// then count*dim little-endian 32-bit floats in row-major order.
void write_vector_file(const VectorSet& vectors, const std::filesystem::path& path);
VectorSet read_vector_file(const std::filesystem::path& path);

// Per-query relevance rows, one byte per entry in memory (0 or 1). On disk:
// magic "LLAB", version u16, count u32, width u32, then one bit-packed row
// per entry. Rows are packed least-significant-bit first, padded to a whole
// number of bytes, and the padding bits must be zero.
struct LabelFile {
  std::size_t width = 0;
  std::vector<std::vector<std::uint8_t>> rows;
};

void write_label_file(const LabelFile& labels, const std::filesystem::path& path);
LabelFile read_label_file(const std::filesystem::path& path);

// Parses a whitespace- or comma-separated numeric text matrix. Every
// non-empty line is one vector; all lines must have the same width.
VectorSet read_text_matrix(const std::filesystem::path& path);

}  // namespace livf
