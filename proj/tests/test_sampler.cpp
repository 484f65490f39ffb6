#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/random.hpp"
#include "fieldforge/sampler.hpp"
#include "fieldforge/synthgen.hpp"

using namespace fieldforge;

namespace {

GridMeta grid(Dims3 d, Vec3 vs = {1, 1, 1}, Vec3 origin = {0, 0, 0}) {
  GridMeta m;
  m.dims = d;
  m.voxel_size_mm = vs;
  m.origin_mm = origin;
  return m;
}

VoxelGrid tagged(const GridMeta& m, double phi) {
  VoxelGrid g(m);
  g.meta().flow_rate_percent = phi;
  return g;
}

}  // namespace

TEST_CASE("normalize maps the box corners and midpoint") {
  const GridMeta m = grid({32, 32, 32}, {0.5, 0.5, 0.25}, {1.0, -2.0, 3.0});
  const DomainBounds b = DomainBounds::from_grid(m, 45.0, 280.0);
  const Point4 lo = b.normalize(m.voxel_center(0, 0, 0), 45.0);
  for (double v : lo) CHECK(v == doctest::Approx(-1.0));
  const Point4 hi = b.normalize(m.voxel_center(31, 31, 31), 280.0);
  for (double v : hi) CHECK(v == doctest::Approx(1.0));
  const Vec3 mid{(b.min_mm[0] + b.max_mm[0]) / 2, (b.min_mm[1] + b.max_mm[1]) / 2, (b.min_mm[2] + b.max_mm[2]) / 2};
  for (double v : b.normalize(mid, 162.5)) CHECK(v == doctest::Approx(0.0));
  CHECK(b.normalize_phi(45.0) == doctest::Approx(-1.0));
}

TEST_CASE("denormalize inverts normalize") {
  const DomainBounds b{{-3.0, 0.0, 1.0}, {5.0, 2.0, 9.0}, 45.0, 280.0};
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const double phi = uniform(rng, 0.0, 300.0);
    const Point4 back = b.denormalize(b.normalize(p, phi));
    for (int a = 0; a < 3; ++a) CHECK(std::abs(back[a] - p[a]) <= 1e-9);
    CHECK(std::abs(back[3] - phi) <= 1e-9);
  }
}

TEST_CASE("domain bounds validation and json") {
  DomainBounds bad{{0, 0, 0}, {1, 0, 1}, 45, 280};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  DomainBounds flat_phi{{0, 0, 0}, {1, 1, 1}, 100, 100};
  CHECK_THROWS_AS(flat_phi.validate(), ConfigError);
  const DomainBounds b{{-1.5, 0.0, 2.0}, {1.5, 4.0, 8.0}, 45, 280};
  CHECK(domain_bounds_from_json(to_json(b)) == b);
}

TEST_CASE("flatten covers every voxel of every volume") {
  const GridMeta m = grid({4, 3, 2});
  std::vector<VoxelGrid> vols;
  for (double phi : {45.0, 100.0, 280.0}) {
    VoxelGrid g = tagged(m, phi);
    g.at(1, 2, 1) = 1.0f;
    vols.push_back(g);
  }
  const DomainBounds b = DomainBounds::from_grid(m, 45.0, 280.0);
  const PointSet5D ps = flatten(vols, b);
  REQUIRE(ps.size() == 3 * 24);
  CHECK(ps.coords.size() == 4 * ps.size());
  CHECK(ps.bounds == b);
  std::size_t ones = 0;
  for (std::size_t n = 0; n < ps.size(); ++n) {
    for (int a = 0; a < 4; ++a) {
      CHECK(ps.coords[4 * n + a] >= -1.0 - 1e-12);
      CHECK(ps.coords[4 * n + a] <= 1.0 + 1e-12);
    }
    if (ps.targets[n] == 1.0) {
      ++ones;
      const Point4 p = b.denormalize({ps.coords[4 * n], ps.coords[4 * n + 1], ps.coords[4 * n + 2], ps.coords[4 * n + 3]});
      const Vec3 c = m.voxel_center(1, 2, 1);
      for (int a = 0; a < 3; ++a) CHECK(p[a] == doctest::Approx(c[a]));
    }
  }
  CHECK(ones == 3);
}

TEST_CASE("flatten of nine 32^3 volumes has 294912 points") {
  const GridMeta m = grid({32, 32, 32});
  std::vector<VoxelGrid> vols;
  for (double phi : kDefaultFlowRates) vols.push_back(tagged(m, phi));
  CHECK(flatten(vols, DomainBounds::from_grid(m, 45, 280)).size() == 294912);
}

TEST_CASE("flatten rejects untagged or mismatched volumes") {
  const GridMeta m = grid({2, 2, 2});
  const DomainBounds b = DomainBounds::from_grid(m, 45, 280);
  CHECK_THROWS_AS(flatten({VoxelGrid(m)}, b), InputError);
  CHECK_THROWS_AS(flatten({tagged(m, 45), tagged(grid({2, 2, 3}), 100)}, b), InputError);
  CHECK_THROWS_AS(flatten({tagged(m, 45), tagged(grid({2, 2, 2}, {2, 1, 1}), 100)}, b), InputError);
  CHECK_THROWS_AS(flatten({}, b), InputError);
}

TEST_CASE("batches partition the index range") {
  const auto b = batches(10, 4, 7);
  REQUIRE(b.size() == 3);
  CHECK(b[0].size() == 4);
  CHECK(b[1].size() == 4);
  CHECK(b[2].size() == 2);
  CHECK(batches(10, 4, 7) == b);

  const auto big = batches(1003, 50, 11);
  std::vector<std::size_t> all;
  for (const auto& chunk : big) all.insert(all.end(), chunk.begin(), chunk.end());
  std::vector<std::size_t> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  CHECK(sorted.size() == 1003);
  CHECK(batches(1003, 50, 12) != big);
  CHECK_THROWS_AS(batches(10, 0, 1), ConfigError);
}

TEST_CASE("gather copies the indexed points") {
  PointSet5D ps;
  for (int n = 0; n < 5; ++n) {
    for (int a = 0; a < 4; ++a) ps.coords.push_back(n + a / 10.0);
    ps.targets.push_back(n);
  }
  std::vector<double> c, t;
  const PointBatch b = gather(ps, {4, 1}, c, t);
  REQUIRE(b.size() == 2);
  CHECK(b.targets[0] == 4.0);
  CHECK(b.targets[1] == 1.0);
  CHECK(b.coords[0] == 4.0);
  CHECK(b.coords[7] == doctest::Approx(1.3));
}

TEST_CASE("lhs proxies are exactly stratified in every dimension") {
  for (std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{10}, std::size_t{100}, std::size_t{1000}}) {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
      const auto pts = lhs_proxies(m, seed);
      REQUIRE(pts.size() == 4 * m);
      for (int a = 0; a < 4; ++a) {
        std::vector<int> hist(m, 0);
        for (std::size_t n = 0; n < m; ++n) {
          const double v = pts[4 * n + a];
          REQUIRE(v >= -1.0);
          REQUIRE(v <= 1.0);
          const auto bin = std::min(m - 1, static_cast<std::size_t>((v + 1.0) / 2.0 * static_cast<double>(m)));
          ++hist[bin];
        }
        for (int h : hist) REQUIRE(h == 1);
      }
    }
  }
  const auto two = lhs_proxies(2, 5);
  for (int a = 0; a < 4; ++a) CHECK((two[a] < 0.0) != (two[4 + a] < 0.0));
  CHECK(lhs_proxies(100, 3) == lhs_proxies(100, 3));
  CHECK(lhs_proxies(100, 3) != lhs_proxies(100, 4));
  CHECK_THROWS_AS(lhs_proxies(0, 1), ConfigError);
}

TEST_CASE("proxy seeds differ by step") {
  CHECK(proxy_seed(0, 1) != proxy_seed(0, 2));
  CHECK(proxy_seed(0, 1) == proxy_seed(0, 1));
  CHECK(proxy_seed(1, 1) != proxy_seed(0, 1));
}
