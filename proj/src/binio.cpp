#include "livf/binio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace livf {

BinaryReader::BinaryReader(std::vector<std::uint8_t> bytes, std::string source)
    : bytes_(std::move(bytes)), source_(std::move(source)) {}

BinaryReader BinaryReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::vector<std::uint8_t> bytes;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) {
    throw IoError("cannot determine size of '" + path.string() + "'");
  }
  bytes.resize(static_cast<std::size_t>(size));
  in.seekg(0, std::ios::beg);
  if (!bytes.empty()) {
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  if (!in) {
    throw IoError("failed reading '" + path.string() + "'");
  }
  return BinaryReader(std::move(bytes), path.string());
}

const std::uint8_t* BinaryReader::take(std::size_t n, std::string_view what) {
  if (offset_ + n > bytes_.size()) {
    throw FormatError(source_ + ": truncated " + std::string(what), offset_);
  }
  const std::uint8_t* p = bytes_.data() + offset_;
  offset_ += n;
  return p;
}

void BinaryReader::expect_magic(std::string_view magic) {
  const std::size_t at = offset_;
  const std::uint8_t* p = take(magic.size(), "magic");
  if (std::memcmp(p, magic.data(), magic.size()) != 0) {
    throw FormatError(source_ + ": bad magic, expected '" + std::string(magic) + "'",
                      at);
  }
}

std::uint8_t BinaryReader::read_u8() { return *take(1, "u8 field"); }

std::uint16_t BinaryReader::read_u16() {
  const std::uint8_t* p = take(2, "u16 field");
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t BinaryReader::read_u32() {
  const std::uint8_t* p = take(4, "u32 field");
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

float BinaryReader::read_f32() {
  const std::uint8_t* p = take(4, "f32 field");
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void BinaryReader::read_f32_array(std::span<float> out, std::string_view what) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t at = offset_;
    out[i] = read_f32();
    if (!std::isfinite(out[i])) {
      throw FormatError(source_ + ": non-finite value in " + std::string(what), at);
    }
  }
}

void BinaryReader::expect_end() {
  if (remaining() != 0) {
    throw FormatError(source_ + ": " + std::to_string(remaining()) +
                          " trailing bytes after payload",
                      offset_);
  }
}

BinaryWriter::BinaryWriter(std::filesystem::path path) : path_(std::move(path)) {}

void BinaryWriter::write_magic(std::string_view magic) {
  bytes_.insert(bytes_.end(), magic.begin(), magic.end());
}

void BinaryWriter::write_u16(std::uint16_t v) {
  bytes_.push_back(static_cast<std::uint8_t>(v & 0xff));
  bytes_.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void BinaryWriter::write_u32(std::uint32_t v) {
  bytes_.push_back(static_cast<std::uint8_t>(v & 0xff));
  bytes_.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  bytes_.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  bytes_.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void BinaryWriter::write_f32(float v) { write_u32(std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::write_f32_array(std::span<const float> values) {
  for (float v : values) {
    write_f32(v);
  }
}

void BinaryWriter::write_bytes(std::span<const std::uint8_t> bytes) {
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

void BinaryWriter::finish() {
  if (finished_) {
    return;
  }
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path_.string() + "' for writing");
  }
  if (!bytes_.empty()) {
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
  }
  out.flush();
  if (!out) {
    throw IoError("failed writing '" + path_.string() + "'");
  }
  finished_ = true;
}

}  // namespace livf
