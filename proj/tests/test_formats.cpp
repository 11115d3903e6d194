#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "livf/errors.hpp"
#include "livf/router_models.hpp"
#include "livf/vector_file.hpp"
#include "support/helpers.hpp"

using livf::LabelFile;
using livf::LinearRouterModel;
using livf::MlpRouterModel;
using livf::RouterModel;
using livf::VectorSet;

namespace {

std::vector<std::uint8_t> str_bytes(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("vector file golden byte layout") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("v.lvec");
  write_vector_file(VectorSet(2, {1.0f, -2.0f}), path);

  const std::vector<std::uint8_t> expected{
      'L',  'V',  'E',  'C',         // magic
      0x01, 0x00,                    // version 1, little-endian u16
      0x01, 0x00, 0x00, 0x00,        // count 1
      0x02, 0x00, 0x00, 0x00,        // dim 2
      0x00, 0x00, 0x80, 0x3F,        // 1.0f
      0x00, 0x00, 0x00, 0xC0,        // -2.0f
  };
  CHECK(testsupport::read_file_bytes(path) == expected);
  const VectorSet back = livf::read_vector_file(path);
  CHECK(back.dim() == 2);
  CHECK(back.flat() == std::vector<float>{1.0f, -2.0f});
}

TEST_CASE("label file golden byte layout: LSB-first rows, zero padding") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("l.llab");
  LabelFile labels;
  labels.width = 10;
  labels.rows = {{1, 0, 0, 0, 0, 0, 0, 0, 1, 1}};
  write_label_file(labels, path);

  const std::vector<std::uint8_t> expected{
      'L',  'L',  'A',  'B',         // magic
      0x01, 0x00,                    // version
      0x01, 0x00, 0x00, 0x00,        // count 1
      0x0A, 0x00, 0x00, 0x00,        // width 10
      0x01, 0x03,                    // bits 0, 8, 9 set
  };
  CHECK(testsupport::read_file_bytes(path) == expected);
  const LabelFile back = livf::read_label_file(path);
  CHECK(back.width == 10);
  CHECK(back.rows == labels.rows);
}

TEST_CASE("vector and label files round-trip randomized instances") {
  testsupport::TempDir tmp;
  std::mt19937 gen(99);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + gen() % 12;
    const std::size_t dim = 1 + gen() % 9;
    const VectorSet vs = testsupport::random_set(n, dim, 1000 + rep, 5.0);
    const auto vp = tmp.file("r" + std::to_string(rep) + ".lvec");
    write_vector_file(vs, vp);
    const VectorSet vback = livf::read_vector_file(vp);
    REQUIRE(vback.dim() == vs.dim());
    CHECK(vback.flat() == vs.flat());

    LabelFile lf;
    lf.width = 1 + gen() % 21;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint8_t> row(lf.width);
      for (auto& b : row) {
        b = gen() % 2;
      }
      lf.rows.push_back(std::move(row));
    }
    const auto lp = tmp.file("r" + std::to_string(rep) + ".llab");
    write_label_file(lf, lp);
    const LabelFile lback = livf::read_label_file(lp);
    CHECK(lback.width == lf.width);
    CHECK(lback.rows == lf.rows);

    // Double write is byte-identical.
    const auto lp2 = tmp.file("r" + std::to_string(rep) + "b.llab");
    write_label_file(lback, lp2);
    CHECK(testsupport::read_file_bytes(lp) == testsupport::read_file_bytes(lp2));
  }
}

TEST_CASE("vector file corruption is rejected with byte offsets") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("v.lvec");
  write_vector_file(VectorSet(3, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f}), path);
  const auto good = testsupport::read_file_bytes(path);

  // Every possible truncation point fails cleanly.
  for (std::size_t len = 0; len < good.size(); ++len) {
    auto cut = good;
    cut.resize(len);
    testsupport::write_file_bytes(path, cut);
    CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                         doctest::Contains("byte offset"), livf::FormatError);
  }

  auto bad_magic = good;
  bad_magic[1] = 'X';
  testsupport::write_file_bytes(path, bad_magic);
  CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                       doctest::Contains("byte offset 0"), livf::FormatError);

  auto trailing = good;
  trailing.push_back(7);
  testsupport::write_file_bytes(path, trailing);
  CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                       doctest::Contains("byte offset"), livf::FormatError);

  // Zero count and zero dim name the field's own offset.
  auto zero_count = good;
  zero_count[6] = zero_count[7] = zero_count[8] = zero_count[9] = 0;
  testsupport::write_file_bytes(path, zero_count);
  CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                       doctest::Contains("byte offset 6"), livf::FormatError);

  // NaN payload is data corruption, not a usable value. Element 1 of the
  // payload sits at byte 14 + 4.
  auto nan_payload = good;
  const std::uint32_t qnan = 0x7FC00000u;
  std::memcpy(nan_payload.data() + 14 + 4, &qnan, 4);
  testsupport::write_file_bytes(path, nan_payload);
  CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                       doctest::Contains("byte offset 18"), livf::FormatError);

  // Unsupported version.
  auto bad_version = good;
  bad_version[4] = 9;
  testsupport::write_file_bytes(path, bad_version);
  CHECK_THROWS_WITH_AS(livf::read_vector_file(path),
                       doctest::Contains("byte offset 4"), livf::FormatError);
}

TEST_CASE("label file rejects nonzero padding bits and truncation") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("l.llab");
  LabelFile labels;
  labels.width = 5;
  labels.rows = {{1, 0, 1, 0, 0}, {0, 0, 0, 0, 1}};
  write_label_file(labels, path);
  auto good = testsupport::read_file_bytes(path);

  // Set padding bit 7 of the first row byte (valid bits are 0..4).
  auto bad_pad = good;
  bad_pad[14] = static_cast<std::uint8_t>(bad_pad[14] | 0x80);
  testsupport::write_file_bytes(path, bad_pad);
  CHECK_THROWS_WITH_AS(livf::read_label_file(path),
                       doctest::Contains("byte offset 14"), livf::FormatError);

  for (std::size_t len = 0; len < good.size(); ++len) {
    auto cut = good;
    cut.resize(len);
    testsupport::write_file_bytes(path, cut);
    CHECK_THROWS_WITH_AS(livf::read_label_file(path),
                         doctest::Contains("byte offset"), livf::FormatError);
  }

  // Entries outside {0,1} cannot be written in the first place.
  LabelFile invalid;
  invalid.width = 2;
  invalid.rows = {{2, 0}};
  CHECK_THROWS_AS(write_label_file(invalid, path), livf::InvalidLabelError);
}

TEST_CASE("router model files round-trip for both kinds") {
  testsupport::TempDir tmp;
  std::mt19937 gen(7);
  std::normal_distribution<float> val(0.0f, 1.0f);

  LinearRouterModel lin;
  lin.num_clusters = 5;
  lin.dim = 3;
  lin.weights.resize(15);
  for (auto& w : lin.weights) w = val(gen);

  const auto lp = tmp.file("lin.lrtw");
  save_router_model(RouterModel(lin), lp);
  const RouterModel lback = livf::load_router_model(lp);
  REQUIRE(std::holds_alternative<LinearRouterModel>(lback));
  const auto& lral = std::get<LinearRouterModel>(lback);
  CHECK(lral.num_clusters == 5);
  CHECK(lral.dim == 3);
  CHECK(lral.weights == lin.weights);

  MlpRouterModel mlp;
  mlp.num_clusters = 4;
  mlp.dim = 3;
  mlp.hidden = 6;
  mlp.w1.resize(18);
  mlp.b1.resize(6);
  mlp.w2.resize(24);
  mlp.b2.resize(4);
  for (auto* vec : {&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2}) {
    for (auto& w : *vec) w = val(gen);
  }
  const auto mp = tmp.file("mlp.lrtw");
  save_router_model(RouterModel(mlp), mp);
  const RouterModel mback = livf::load_router_model(mp);
  REQUIRE(std::holds_alternative<MlpRouterModel>(mback));
  const auto& mral = std::get<MlpRouterModel>(mback);
  CHECK(mral.w1 == mlp.w1);
  CHECK(mral.b1 == mlp.b1);
  CHECK(mral.w2 == mlp.w2);
  CHECK(mral.b2 == mlp.b2);

  // Rewriting the loaded model is byte-identical.
  const auto mp2 = tmp.file("mlp2.lrtw");
  save_router_model(mback, mp2);
  CHECK(testsupport::read_file_bytes(mp) == testsupport::read_file_bytes(mp2));
}

TEST_CASE("router model corruption is rejected with byte offsets") {
  testsupport::TempDir tmp;
  LinearRouterModel lin;
  lin.num_clusters = 2;
  lin.dim = 2;
  lin.weights = {1.0f, 2.0f, 3.0f, 4.0f};
  const auto path = tmp.file("m.lrtw");
  save_router_model(RouterModel(lin), path);
  const auto good = testsupport::read_file_bytes(path);

  auto bad_magic = good;
  bad_magic[0] = 'x';
  testsupport::write_file_bytes(path, bad_magic);
  CHECK_THROWS_WITH_AS(livf::load_router_model(path),
                       doctest::Contains("byte offset 0"), livf::FormatError);

  // Kind byte sits right after magic (4) + version (2).
  auto bad_kind = good;
  bad_kind[6] = 9;
  testsupport::write_file_bytes(path, bad_kind);
  CHECK_THROWS_WITH_AS(livf::load_router_model(path),
                       doctest::Contains("byte offset 6"), livf::FormatError);

  for (std::size_t len = 0; len < good.size(); ++len) {
    auto cut = good;
    cut.resize(len);
    testsupport::write_file_bytes(path, cut);
    CHECK_THROWS_WITH_AS(livf::load_router_model(path),
                         doctest::Contains("byte offset"), livf::FormatError);
  }
}

TEST_CASE("text matrix conversion accepts spaces, commas and blank lines") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("m.txt");
  testsupport::write_file_bytes(
      path, str_bytes("1.5 2.5, -3\n\n  4,5.25\t6\n,,7 8, 9.0,\n"));
  const VectorSet m = livf::read_text_matrix(path);
  REQUIRE(m.size() == 3);
  REQUIRE(m.dim() == 3);
  CHECK(m.flat() == std::vector<float>{1.5f, 2.5f, -3.0f, 4.0f, 5.25f, 6.0f, 7.0f,
                                       8.0f, 9.0f});
}

TEST_CASE("text matrix rejects ragged rows, bad tokens and empty input") {
  testsupport::TempDir tmp;
  const auto path = tmp.file("m.txt");

  testsupport::write_file_bytes(path, str_bytes("1 2 3\n4 5\n"));
  CHECK_THROWS_WITH_AS(livf::read_text_matrix(path), doctest::Contains("row 1"),
                       livf::FormatError);

  testsupport::write_file_bytes(path, str_bytes("1 2\n3 banana\n"));
  CHECK_THROWS_WITH_AS(livf::read_text_matrix(path), doctest::Contains("banana"),
                       livf::FormatError);

  testsupport::write_file_bytes(path, str_bytes("\n \n"));
  CHECK_THROWS_AS(livf::read_text_matrix(path), livf::FormatError);

  testsupport::write_file_bytes(path, str_bytes("1 inf\n"));
  CHECK_THROWS_AS(livf::read_text_matrix(path), livf::FormatError);
}
