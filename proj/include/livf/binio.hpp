#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "livf/errors.hpp"

namespace livf {

// Little-endian reader over an in-memory buffer. Every read is bounds
// checked; failures throw FormatError carrying the byte offset.
class BinaryReader {
 public:
  BinaryReader(std::vector<std::uint8_t> bytes, std::string source);

  static BinaryReader from_file(const std::filesystem::path& path);

  // Consumes magic.size() bytes and checks them.
  void expect_magic(std::string_view magic);

  std::uint8_t read_u8();
  std::uint16_t read_u16();
  std::uint32_t read_u32();
  float read_f32();

  // Bulk f32 read; every element must be finite, `what` names the payload
  // in diagnostics.
  void read_f32_array(std::span<float> out, std::string_view what);

  // Raw byte access for bit-packed payloads; the pointer stays valid for
  // the reader's lifetime.
  const std::uint8_t* read_bytes(std::size_t n, std::string_view what) {
    return take(n, what);
  }

  const std::string& source() const { return source_; }
  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  // Call after the last field; trailing bytes are a format violation.
  void expect_end();

 private:
  const std::uint8_t* take(std::size_t n, std::string_view what);

  std::vector<std::uint8_t> bytes_;
  std::string source_;
  std::size_t offset_ = 0;
};

// Little-endian writer that buffers in memory and lands on disk atomically
// in finish(): partial files never masquerade as complete ones.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::filesystem::path path);

  void write_magic(std::string_view magic);
  void write_u16(std::uint16_t v);
  void write_u32(std::uint32_t v);
  void write_f32(float v);
  void write_f32_array(std::span<const float> values);
  void write_bytes(std::span<const std::uint8_t> bytes);

  void finish();

 private:
  std::filesystem::path path_;
  std::vector<std::uint8_t> bytes_;
  bool finished_ = false;
};

}  // namespace livf
