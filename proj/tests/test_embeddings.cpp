#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "debias/embeddings.hpp"
#include "debias/error.hpp"
#include "test_support.hpp"

using namespace debias;

namespace {

EmbeddingTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> dist;
  std::vector<std::string> ids;
  std::vector<float> values;
  for (std::size_t r = 0; r < rows; ++r) {
    ids.push_back("e" + std::to_string(r));
    for (std::size_t c = 0; c < dim; ++c) values.push_back(dist(gen));
  }
  return EmbeddingTable(std::move(ids), std::move(values), dim);
}

std::string decode_error(const std::vector<unsigned char>& bytes) {
  try {
    decode_embeddings(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("binary layout: header, id block, float payload") {
  const auto table = EmbeddingTable({"a", "bb", "ccc"}, std::vector<float>(12, 0.5f), 4);
  const auto bytes = encode_embeddings(table);
  // magic + version + count + dim, ids (2+1, 2+2, 2+3), 3*4 floats
  CHECK(bytes.size() == 4 + 4 + 8 + 4 + 12 + 48);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AFLT");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 3);
  CHECK(bytes[16] == 4);
  CHECK(bytes[20] == 1);
  CHECK(bytes[21] == 0);
  CHECK(bytes[22] == 'a');
  // 0.5f = 0x3f000000, little-endian
  CHECK(bytes[bytes.size() - 1] == 0x3f);
  CHECK(bytes[bytes.size() - 4] == 0x00);

  const auto back = decode_embeddings(bytes);
  CHECK(back.rows() == 3);
  CHECK(back.dim() == 4);
  CHECK(back == table);
}

TEST_CASE("truncated payload and trailing bytes are length mismatches") {
  auto bytes = encode_embeddings(random_table(3, 4, 1));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 4);
  CHECK(decode_error(truncated).find("length mismatch") != std::string::npos);
  auto extended = bytes;
  extended.push_back(0);
  CHECK(decode_error(extended).find("length mismatch") != std::string::npos);
}

TEST_CASE("bad magic, bad version, zero dim and non-finite values are rejected") {
  auto bytes = encode_embeddings(random_table(2, 3, 2));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic).find("magic") != std::string::npos);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(decode_error(bad_version).find("version") != std::string::npos);

  // Patch row 1, column 2 to NaN.
  auto nan_bytes = bytes;
  const std::size_t payload = nan_bytes.size() - 2 * 3 * 4;
  const std::size_t off = payload + (1 * 3 + 2) * 4;
  nan_bytes[off] = 0x00;
  nan_bytes[off + 1] = 0x00;
  nan_bytes[off + 2] = 0xc0;
  nan_bytes[off + 3] = 0x7f;
  const auto msg = decode_error(nan_bytes);
  CHECK(msg.find("row 1") != std::string::npos);
  CHECK(msg.find("column 2") != std::string::npos);

  CHECK_THROWS_AS(EmbeddingTable({"a"}, {std::numeric_limits<float>::infinity()}, 1), InvalidArgument);
  CHECK_THROWS_AS(EmbeddingTable({"a", "a"}, {1.f, 2.f}, 1), InvalidArgument);
  CHECK_THROWS_AS(EmbeddingTable({"a"}, {1.f, 2.f}, 1), InvalidArgument);
}

TEST_CASE("write then read a 100x64 table is bit-identical") {
  testing::TempDir dir;
  const auto table = random_table(100, 64, 3);
  write_embeddings(dir / "t.aflt", table);
  const auto back = read_embeddings(dir / "t.aflt");
  REQUIRE(back.rows() == 100);
  CHECK(std::equal(table.values().begin(), table.values().end(), back.values().begin(),
                   [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }));
  CHECK(back.ids() == table.ids());
  CHECK(encode_embeddings(back) == encode_embeddings(table));
}

TEST_CASE("CSV debug export") {
  testing::TempDir dir;
  write_embeddings_csv(dir / "t.csv", EmbeddingTable({"x", "y"}, {1.f, 2.f, 3.5f, -4.f}, 2));
  CHECK(testing::read_file(dir / "t.csv") == "id,v0,v1\nx,1,2\ny,3.5,-4\n");
}

TEST_CASE("align restricts to the pool in ascending id order") {
  const auto table = random_table(50, 3, 4);
  Dataset ds;
  for (std::size_t r = 0; r < 50; ++r)
    ds.instances.push_back(testing::make_instance("e" + std::to_string(r), 1 + static_cast<int>(r % 2)));

  std::vector<std::string> pool = {"e7", "e30", "e12", "e7"};
  const auto out = align(table, ds, pool);
  REQUIRE(out.size() == 3);
  CHECK(out.table.ids() == std::vector<std::string>{"e12", "e30", "e7"});
  CHECK(out.labels == std::vector<int>{1, 1, 2});
  CHECK(std::equal(out.table.row(2).begin(), out.table.row(2).end(), table.row(7).begin()));

  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(pool.begin(), pool.end(), gen);
    CHECK(align(table, ds, pool).table == out.table);
  }

  const auto empty = align(table, ds, std::vector<std::string>{});
  CHECK(empty.size() == 0);
}

TEST_CASE("align reports every missing id") {
  auto table = EmbeddingTable({"a", "b"}, {1.f, 2.f}, 1);
  Dataset ds;
  ds.instances = {testing::make_instance("a", 1), testing::make_instance("b", 2),
                  testing::make_instance("c", 1)};
  const std::vector<std::string> pool = {"a", "b", "c"};
  try {
    align(table, ds, pool);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("from embeddings (1): c") != std::string::npos);
    CHECK(msg.find("from dataset") == std::string::npos);
  }
}

TEST_CASE("align at filter-pool scale keeps all 47,000 rows") {
  std::vector<std::string> ids;
  Dataset ds;
  for (std::size_t r = 0; r < 47000; ++r) {
    ids.push_back("p" + std::to_string(r));
    ds.instances.push_back(testing::make_instance(ids.back(), 1));
  }
  const EmbeddingTable table(ids, std::vector<float>(47000 * 2, 1.f), 2);
  CHECK(align(table, ds, ids).size() == 47000);
}
