#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/random.hpp"
#include "fieldforge/voxvol.hpp"
#include "oracles.hpp"

using namespace fieldforge;

namespace {

GridMeta meta_of(Dims3 dims, GridKind kind, Vec3 vs = {1.0, 1.0, 1.0}) {
  GridMeta m;
  m.dims = dims;
  m.kind = kind;
  m.voxel_size_mm = vs;
  return m;
}

// Builds a VGRID byte stream by hand so decode is checked against the layout
// rather than against encode.
std::vector<std::uint8_t> raw_vgrid(const std::string& header, const std::vector<std::uint8_t>& payload,
                                    std::uint32_t version = 1) {
  std::vector<std::uint8_t> out = {'V', 'G', 'R', 'D'};
  auto put32 = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  put32(version);
  put32(static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fieldforge_test_" + name);
}

}  // namespace

TEST_CASE("vgrid all-ones 2x2x2 occupancy round-trips through a file") {
  VoxelGrid g(meta_of({2, 2, 2}, GridKind::Occupancy), std::vector<float>(8, 1.0f));
  const auto path = temp_path("ones.vgrid");
  write_vgrid(g, path);
  const VoxelGrid back = read_vgrid(path);
  CHECK(back == g);
  std::filesystem::remove(path);
}

TEST_CASE("vgrid decode follows the documented byte layout") {
  const std::string header =
      R"({"dims":[2,1,1],"voxel_size_mm":[0.5,0.5,0.25],"origin_mm":[1,2,3],"dtype":"u8","kind":"occupancy","flow_rate_percent":130})";
  const VoxelGrid g = decode_vgrid(raw_vgrid(header, {0, 1}));
  CHECK(g.meta().dims == Dims3{2, 1, 1});
  CHECK(g.meta().voxel_size_mm == Vec3{0.5, 0.5, 0.25});
  CHECK(g.meta().origin_mm == Vec3{1.0, 2.0, 3.0});
  CHECK(g.meta().kind == GridKind::Occupancy);
  REQUIRE(g.meta().flow_rate_percent.has_value());
  CHECK(*g.meta().flow_rate_percent == 130.0);
  CHECK(g.at(0, 0, 0) == 0.0f);
  CHECK(g.at(1, 0, 0) == 1.0f);

  // f32 little-endian payload, x fastest.
  const std::string fheader =
      R"({"dims":[1,1,2],"voxel_size_mm":[1,1,1],"origin_mm":[0,0,0],"dtype":"f32","kind":"sdf","flow_rate_percent":null})";
  std::vector<std::uint8_t> payload;
  for (float v : {-1.5f, 0.25f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int b = 0; b < 4; ++b) payload.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  const VoxelGrid f = decode_vgrid(raw_vgrid(fheader, payload));
  CHECK(f.meta().kind == GridKind::Sdf);
  CHECK_FALSE(f.meta().flow_rate_percent.has_value());
  CHECK(f.at(0, 0, 0) == -1.5f);
  CHECK(f.at(0, 0, 1) == 0.25f);
}

TEST_CASE("vgrid empty 1x1x1 grid encodes a single zero payload byte") {
  VoxelGrid g(meta_of({1, 1, 1}, GridKind::Occupancy));
  const auto bytes = encode_vgrid(g);
  REQUIRE(bytes.size() >= 13);
  std::uint32_t header_len = 0;
  for (int b = 0; b < 4; ++b) header_len |= static_cast<std::uint32_t>(bytes[8 + b]) << (8 * b);
  CHECK(bytes.size() == 12 + header_len + 1);
  CHECK(bytes.back() == 0);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "VGRD");
}

TEST_CASE("vgrid dims/payload mismatch is a format error") {
  const std::string header =
      R"({"dims":[4,4,4],"voxel_size_mm":[1,1,1],"origin_mm":[0,0,0],"dtype":"u8","kind":"occupancy","flow_rate_percent":null})";
  CHECK_THROWS_AS(decode_vgrid(raw_vgrid(header, std::vector<std::uint8_t>(63, 0))), FormatError);
  CHECK_THROWS_AS(decode_vgrid(raw_vgrid(header, std::vector<std::uint8_t>(65, 0))), FormatError);
  CHECK_NOTHROW(decode_vgrid(raw_vgrid(header, std::vector<std::uint8_t>(64, 0))));
}

TEST_CASE("vgrid malformed streams are format errors") {
  const std::string header =
      R"({"dims":[1,1,1],"voxel_size_mm":[1,1,1],"origin_mm":[0,0,0],"dtype":"u8","kind":"occupancy","flow_rate_percent":null})";
  auto good = raw_vgrid(header, {1});
  CHECK_NOTHROW(decode_vgrid(good));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_vgrid(bad_magic), FormatError);
  CHECK_THROWS_AS(decode_vgrid(raw_vgrid(header, {1}, 2)), FormatError);
  CHECK_THROWS_AS(decode_vgrid(std::vector<std::uint8_t>{'V', 'G'}), FormatError);

  auto long_header = good;
  long_header[8] = 0xff;
  long_header[9] = 0xff;
  CHECK_THROWS_AS(decode_vgrid(long_header), FormatError);

  CHECK_THROWS_AS(decode_vgrid(raw_vgrid("{not json", {1})), FormatError);
  const std::string bad_dtype =
      R"({"dims":[1,1,1],"voxel_size_mm":[1,1,1],"origin_mm":[0,0,0],"dtype":"f64","kind":"occupancy","flow_rate_percent":null})";
  CHECK_THROWS_AS(decode_vgrid(raw_vgrid(bad_dtype, {1})), FormatError);
  CHECK_THROWS_AS(decode_vgrid(raw_vgrid(header, {2})), FormatError);
}

TEST_CASE("occupancy grid holding 2 violates the invariant on write") {
  CHECK_THROWS_AS(VoxelGrid(meta_of({2, 1, 1}, GridKind::Occupancy), {0.0f, 2.0f}), InvariantError);
  VoxelGrid g(meta_of({2, 1, 1}, GridKind::Occupancy));
  g.at(1, 0, 0) = 2.0f;
  CHECK_THROWS_AS(encode_vgrid(g), InvariantError);
  CHECK_THROWS_AS(write_vgrid(g, temp_path("bad.vgrid")), InvariantError);
  VoxelGrid s(meta_of({1, 1, 1}, GridKind::Sdf));
  s.at(0, 0, 0) = std::nanf("");
  CHECK_THROWS_AS(encode_vgrid(s), InvariantError);
}

TEST_CASE("vgrid random sdf and occupancy grids round-trip bit-exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Dims3 d{1 + static_cast<int>(uniform_index(rng, 7)), 1 + static_cast<int>(uniform_index(rng, 7)),
                  1 + static_cast<int>(uniform_index(rng, 7))};
    GridMeta ms = meta_of(d, GridKind::Sdf, {uniform(rng, 0.1, 2.0), 0.3, 0.7});
    ms.flow_rate_percent = uniform(rng, 45.0, 280.0);
    ms.origin_mm = {uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)};
    VoxelGrid s(ms);
    for (float& v : s.data()) v = static_cast<float>(uniform(rng, -10.0, 10.0));
    const auto bytes = encode_vgrid(s);
    const VoxelGrid s2 = decode_vgrid(bytes);
    CHECK(s2 == s);
    CHECK(encode_vgrid(s2) == bytes);

    VoxelGrid o(meta_of(d, GridKind::Occupancy));
    for (float& v : o.data()) v = static_cast<float>(uniform_index(rng, 2));
    const auto ob = encode_vgrid(o);
    CHECK(decode_vgrid(ob) == o);
    CHECK(encode_vgrid(decode_vgrid(ob)) == ob);
  }
}

TEST_CASE("threshold examples") {
  VoxelGrid f(meta_of({2, 1, 1}, GridKind::Sdf), {0.2f, 0.7f});
  CHECK(threshold(f, 0.5, ThresholdMode::AtLeast).data()[0] == 0.0f);
  CHECK(threshold(f, 0.5, ThresholdMode::AtLeast).data()[1] == 1.0f);

  VoxelGrid s(meta_of({3, 1, 1}, GridKind::Sdf), {-0.1f, 0.0f, 0.1f});
  const VoxelGrid ts = threshold(s, 0.0);
  CHECK(ts.meta().kind == GridKind::Occupancy);
  CHECK(std::vector<float>(ts.data().begin(), ts.data().end()) == std::vector<float>{1, 1, 0});

  VoxelGrid half(meta_of({2, 2, 2}, GridKind::Sdf), std::vector<float>(8, 0.5f));
  const VoxelGrid th = threshold(half, 0.5, ThresholdMode::AtLeast);
  for (float v : th.data()) CHECK(v == 1.0f);
}

TEST_CASE("threshold is idempotent on occupancy at iso 0.5") {
  Rng rng(3);
  VoxelGrid f(meta_of({5, 4, 3}, GridKind::Sdf));
  for (float& v : f.data()) v = static_cast<float>(uniform01(rng));
  const VoxelGrid once = threshold(f, 0.5, ThresholdMode::AtLeast);
  CHECK(threshold(once, 0.5) == once);
  CHECK(threshold(once, 0.5, ThresholdMode::AtLeast) == once);
}

TEST_CASE("digital weight examples") {
  CHECK(digital_weight(VoxelGrid(meta_of({4, 4, 4}, GridKind::Occupancy))) == 0.0);
  VoxelGrid one(meta_of({1, 1, 1}, GridKind::Occupancy, {10.0, 10.0, 10.0}), {1.0f});
  CHECK(digital_weight(one, {1.25}) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK_THROWS_AS(digital_weight(VoxelGrid(meta_of({1, 1, 1}, GridKind::Sdf))), InputError);
}

TEST_CASE("digital weight is linear in voxel count and density") {
  Rng rng(5);
  VoxelGrid g(meta_of({6, 6, 6}, GridKind::Occupancy, {0.2, 0.3, 0.5}));
  for (float& v : g.data()) v = static_cast<float>(uniform_index(rng, 2));
  const double unit = 0.2 * 0.3 * 0.5 / 1000.0;
  const auto n = static_cast<double>(g.count_occupied());
  CHECK(digital_weight(g, {1.0}) == doctest::Approx(n * unit).epsilon(1e-12));
  CHECK(digital_weight(g, {3.0}) == doctest::Approx(3.0 * digital_weight(g, {1.0})).epsilon(1e-12));
  VoxelGrid more = g;
  for (float& v : more.data()) {
    if (v == 0.0f) {
      v = 1.0f;
      break;
    }
  }
  CHECK(digital_weight(more, {1.0}) - digital_weight(g, {1.0}) == doctest::Approx(unit).epsilon(1e-9));
}

TEST_CASE("shipped sphere fixture decodes and weighs as the analytic sphere") {
  const VoxelGrid g = read_vgrid(std::filesystem::path(FIELDFORGE_FIXTURE_DIR) / "sphere_r8_phi100.vgrid");
  CHECK(g.meta().dims == Dims3{32, 32, 32});
  CHECK(g.meta().kind == GridKind::Occupancy);
  CHECK(g.meta().voxel_size_mm == Vec3{1.0, 1.0, 1.0});
  const std::size_t expected = oracle::sphere_voxel_count(32, 8.0);
  CHECK(g.count_occupied() == expected);
  CHECK(digital_weight(g) == doctest::Approx(1.25 * static_cast<double>(expected) / 1000.0).epsilon(1e-12));
}

TEST_CASE("grid meta validation") {
  CHECK_THROWS_AS(VoxelGrid(meta_of({0, 1, 1}, GridKind::Occupancy)), InvariantError);
  CHECK_THROWS_AS(VoxelGrid(meta_of({1, 1, 1}, GridKind::Occupancy, {0.0, 1.0, 1.0})), InvariantError);
  CHECK_THROWS_AS(VoxelGrid(meta_of({2, 1, 1}, GridKind::Occupancy), {1.0f}), InvariantError);
  const GridMeta m = meta_of({3, 4, 5}, GridKind::Occupancy);
  CHECK(m.index(1, 2, 3) == 1 + 3 * (2 + 4 * 3));
}
