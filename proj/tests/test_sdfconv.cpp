#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/random.hpp"
#include "fieldforge/sdfconv.hpp"
#include "fieldforge/synthgen.hpp"
#include "fieldforge/voxvol.hpp"

using namespace fieldforge;

namespace {

GridMeta occ_meta(Dims3 d) {
  GridMeta m;
  m.dims = d;
  return m;
}

// Occupancy of voxel centres (voxel-index coordinates) within r of c.
VoxelGrid ball(int n, double r, double c) {
  VoxelGrid g(occ_meta({n, n, n}));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = i - c, y = j - c, z = k - c;
        g.at(i, j, k) = x * x + y * y + z * z <= r * r ? 1.0f : 0.0f;
      }
  return g;
}

struct MeshStats {
  bool closed = true;
  bool oriented = true;
  long euler = 0;
};

MeshStats mesh_stats(const TriangleSoup& soup) {
  std::map<std::pair<int, int>, int> undirected;
  std::map<std::pair<int, int>, int> directed;
  std::set<int> used;
  for (const auto& t : soup.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
      ++undirected[{std::min(a, b), std::max(a, b)}];
      ++directed[{a, b}];
      used.insert(a);
    }
  MeshStats s;
  for (const auto& [e, n] : undirected) s.closed = s.closed && n == 2;
  for (const auto& [e, n] : directed) s.oriented = s.oriented && n == 1;
  s.euler = static_cast<long>(used.size()) - static_cast<long>(undirected.size()) +
            static_cast<long>(soup.triangles.size());
  return s;
}

Vec3 lerp3(const Vec3& a, const Vec3& b, const Vec3& c, double u, double v) {
  const double w = 1.0 - u - v;
  return {w * a[0] + u * b[0] + v * c[0], w * a[1] + u * b[1] + v * c[1], w * a[2] + u * b[2] + v * c[2]};
}

double dist(const Vec3& a, const Vec3& b) { return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]); }

// Dense barycentric sampling of the triangle: an upper bound on the true
// distance that converges from above as the lattice refines.
double sampled_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) best = std::min(best, dist(p, lerp3(a, b, c, double(i) / n, double(j) / n)));
  return best;
}

}  // namespace

TEST_CASE("marching cubes on an empty or full grid flags no crossing") {
  const auto empty = marching_cubes(VoxelGrid(occ_meta({2, 2, 2})), 0.5);
  CHECK(empty.triangles.empty());
  CHECK(empty.no_crossing);
  const auto full = marching_cubes(VoxelGrid(occ_meta({3, 3, 3}), std::vector<float>(27, 1.0f)), 0.5);
  CHECK(full.triangles.empty());
  CHECK(full.no_crossing);
  CHECK_THROWS_AS(marching_cubes(VoxelGrid(occ_meta({1, 4, 4})), 0.5), InputError);
}

TEST_CASE("single interior voxel gives a closed surface of Euler characteristic 2") {
  VoxelGrid g(occ_meta({3, 3, 3}));
  g.at(1, 1, 1) = 1.0f;
  const auto soup = marching_cubes_voxel_space(g, 0.5);
  REQUIRE_FALSE(soup.triangles.empty());
  const MeshStats s = mesh_stats(soup);
  CHECK(s.closed);
  CHECK(s.oriented);
  CHECK(s.euler == 2);
  for (const auto& v : soup.vertices) CHECK(dist(v, {1, 1, 1}) == doctest::Approx(0.5));
}

TEST_CASE("random blobs away from the border give closed oriented meshes") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    VoxelGrid g(occ_meta({8, 8, 8}));
    for (int k = 1; k < 7; ++k)
      for (int j = 1; j < 7; ++j)
        for (int i = 1; i < 7; ++i) g.at(i, j, k) = static_cast<float>(uniform_index(rng, 2));
    const auto soup = marching_cubes_voxel_space(g, 0.5);
    const MeshStats s = mesh_stats(soup);
    CHECK(s.closed);
    CHECK(s.oriented);
    for (const auto& t : soup.triangles)
      for (int idx : t) CHECK((idx >= 0 && idx < static_cast<int>(soup.vertices.size())));
  }
}

TEST_CASE("sphere surface vertices sit within half a voxel of the radius") {
  const VoxelGrid g = generate_volume(ShapeSpec{Sphere{8.0}}, MorphologyModel{}, occ_meta({32, 32, 32}), 100.0);
  const auto soup = marching_cubes(g, 0.5);
  REQUIRE(soup.vertices.size() > 100);
  for (const auto& v : soup.vertices) {
    const double r = dist(v, {16.0, 16.0, 16.0});
    CHECK(r >= 7.5);
    CHECK(r <= 8.5);
  }
  CHECK(mesh_stats(soup).closed);
  CHECK(mesh_stats(soup).euler == 2);
}

TEST_CASE("marching cubes reports physical coordinates") {
  GridMeta m = occ_meta({3, 3, 3});
  m.voxel_size_mm = {0.5, 0.5, 0.5};
  m.origin_mm = {10.0, 0.0, -2.0};
  VoxelGrid g(m);
  g.at(1, 1, 1) = 1.0f;
  const auto phys = marching_cubes(g, 0.5);
  const auto vox = marching_cubes_voxel_space(g, 0.5);
  REQUIRE(phys.vertices.size() == vox.vertices.size());
  for (std::size_t i = 0; i < vox.vertices.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(phys.vertices[i][a] ==
            doctest::Approx(m.origin_mm[a] + (vox.vertices[i][a] + 0.5) * m.voxel_size_mm[a]));
}

TEST_CASE("point triangle distance agrees with dense sampling") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto rp = [&] { return Vec3{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)}; };
    const Vec3 a = rp(), b = rp(), c = rp(), p = rp();
    const double d = point_triangle_distance(p, a, b, c);
    const double s = sampled_triangle_distance(p, a, b, c, 200);
    CHECK(d <= s + 1e-12);
    CHECK(d >= s - 0.04);
  }
  // Face, edge and vertex regions of a unit right triangle.
  const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
  CHECK(point_triangle_distance({0.2, 0.2, 3.0}, a, b, c) == doctest::Approx(3.0));
  CHECK(point_triangle_distance({0.5, -2.0, 0.0}, a, b, c) == doctest::Approx(2.0));
  CHECK(point_triangle_distance({-3.0, -4.0, 0.0}, a, b, c) == doctest::Approx(5.0));
  CHECK(point_triangle_distance({1.0, 1.0, 0.0}, a, b, c) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("occupancy_to_sdf matches brute-force nearest-triangle distance") {
  const VoxelGrid g = ball(12, 3.2, 5.5);
  const VoxelGrid sdf = occupancy_to_sdf(g, DistanceMode::Exact);
  const auto soup = marching_cubes_voxel_space(g, 0.5);
  for (int k = 0; k < 12; ++k)
    for (int j = 0; j < 12; ++j)
      for (int i = 0; i < 12; ++i) {
        const Vec3 p{double(i), double(j), double(k)};
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : soup.triangles)
          best = std::min(best, point_triangle_distance(p, soup.vertices[t[0]], soup.vertices[t[1]],
                                                        soup.vertices[t[2]]));
        const double expected = g.at(i, j, k) != 0.0f ? -best : best;
        REQUIRE(sdf.at(i, j, k) == doctest::Approx(expected).epsilon(1e-5));
      }
}

TEST_CASE("occupancy_to_sdf on the r=8 sphere") {
  const VoxelGrid g = generate_volume(ShapeSpec{Sphere{8.0}}, MorphologyModel{}, occ_meta({32, 32, 32}), 100.0);
  const VoxelGrid sdf = occupancy_to_sdf(g);
  CHECK(sdf.meta().kind == GridKind::Sdf);
  // In a 33^3 grid the sphere centre is the centre of voxel (16,16,16).
  const VoxelGrid odd = generate_volume(ShapeSpec{Sphere{8.0}}, MorphologyModel{}, occ_meta({33, 33, 33}), 100.0);
  const float centre = occupancy_to_sdf(odd).at(16, 16, 16);
  CHECK(centre >= -9.0f);
  CHECK(centre <= -7.0f);
  for (int k = 0; k < 32; ++k)
    for (int j = 0; j < 32; ++j)
      for (int i = 0; i < 32; ++i) {
        const float v = sdf.at(i, j, k);
        const bool occ = g.at(i, j, k) != 0.0f;
        REQUIRE((occ ? v < 0.0f : v > 0.0f));
        const double analytic = dist({i + 0.5, j + 0.5, k + 0.5}, {16, 16, 16}) - 8.0;
        if (std::abs(analytic) <= 3.0) REQUIRE(std::abs(v - analytic) <= 2.0);
        // Outside voxels with an occupied 6-neighbour lie within 1.5 voxels.
        if (!occ) {
          bool adjacent = false;
          for (auto [di, dj, dk] : {std::array{1, 0, 0}, std::array{-1, 0, 0}, std::array{0, 1, 0},
                                    std::array{0, -1, 0}, std::array{0, 0, 1}, std::array{0, 0, -1}}) {
            const int a = i + di, b = j + dj, c = k + dk;
            if (a >= 0 && b >= 0 && c >= 0 && a < 32 && b < 32 && c < 32 && g.at(a, b, c) != 0.0f) adjacent = true;
          }
          if (adjacent) REQUIRE((v > 0.0f && v <= 1.5f));
        }
      }
}

TEST_CASE("approximate distance stays within one voxel of the exact one") {
  for (const ShapeSpec& s : {ShapeSpec{Sphere{5.0}}, ShapeSpec{GearDisk{6.0, 3.0, 8, 1.5}}, ShapeSpec{BunnyProxy{}}}) {
    const VoxelGrid g = generate_volume(s, MorphologyModel{}, occ_meta({28, 28, 28}), 100.0);
    const VoxelGrid exact = occupancy_to_sdf(g, DistanceMode::Exact);
    const VoxelGrid approx = occupancy_to_sdf(g, DistanceMode::Approximate);
    for (std::size_t i = 0; i < g.size(); ++i) {
      REQUIRE(std::signbit(approx.data()[i]) == std::signbit(exact.data()[i]));
      REQUIRE(std::abs(approx.data()[i] - exact.data()[i]) <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("occupancy_to_sdf preconditions") {
  CHECK_THROWS_AS(occupancy_to_sdf(VoxelGrid(occ_meta({4, 4, 4}))), InputError);
  CHECK_THROWS_AS(occupancy_to_sdf(VoxelGrid(occ_meta({2, 2, 2}), std::vector<float>(8, 1.0f))), InputError);
  GridMeta m = occ_meta({2, 2, 2});
  m.kind = GridKind::Sdf;
  CHECK_THROWS_AS(occupancy_to_sdf(VoxelGrid(m)), InputError);
}

TEST_CASE("normalize_sdf examples") {
  GridMeta m = occ_meta({5, 1, 1});
  m.kind = GridKind::Sdf;
  const VoxelGrid g(m, {-4.0f, -2.0f, 0.0f, 3.0f, 6.0f});
  const VoxelGrid n = normalize_sdf(g);
  const std::vector<float> expected{-1.0f, -0.5f, 0.0f, 0.5f, 1.0f};
  CHECK(std::vector<float>(n.data().begin(), n.data().end()) == expected);
  CHECK(normalize_sdf(n) == n);

  const VoxelGrid pos(m, {1.0f, 2.0f, 3.0f, 4.0f, 0.0f});
  CHECK_THROWS_AS(normalize_sdf(pos), InputError);
  const VoxelGrid pn = normalize_sdf(pos, true);
  CHECK(pn.at(3, 0, 0) == 1.0f);
  CHECK(pn.at(1, 0, 0) == 0.5f);
}

TEST_CASE("normalize_sdf range and idempotence on a real sdf") {
  const VoxelGrid g = generate_volume(ShapeSpec{HexBolt{}}, MorphologyModel{}, occ_meta({32, 32, 32}), 130.0);
  const VoxelGrid n = normalize_sdf(occupancy_to_sdf(g));
  float lo = 0.0f, hi = 0.0f;
  for (float v : n.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == -1.0f);
  CHECK(hi == 1.0f);
  CHECK(normalize_sdf(n) == n);
}
