#include "fieldforge/sdfconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"
#include "mc_tables.hpp"

namespace fieldforge {
namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// Each cube edge as (corner at its lower end, axis).
constexpr int kEdgeBase[12][2] = {{0, 0}, {1, 1}, {3, 0}, {0, 1}, {4, 0}, {5, 1},
                                  {7, 0}, {4, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2}};

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 axpy(const Vec3& p, double t, const Vec3& d) { return {p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]}; }
double dist2(const Vec3& a, const Vec3& b) {
  const Vec3 d = sub(a, b);
  return dot(d, d);
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = sub(p, b);
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return axpy(a, d1 / (d1 - d3), ab);
  const Vec3 cp = sub(p, c);
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return axpy(a, d2 / (d2 - d6), ac);
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return axpy(b, (d4 - d3) / ((d4 - d3) + (d5 - d6)), sub(c, b));
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {a[0] + ab[0] * v + ac[0] * w, a[1] + ab[1] * v + ac[1] * w, a[2] + ab[2] * v + ac[2] * w};
}

bool is_inside(float value, double iso, GridKind kind) {
  return kind == GridKind::Sdf ? value <= iso : value >= iso;
}

// Uniform bucket grid over triangle bounding boxes for exact nearest queries.
class TriangleBuckets {
 public:
  TriangleBuckets(const TriangleSoup& soup, const Dims3& dims, int cell) : soup_(soup), cell_(cell) {
    for (int a = 0; a < 3; ++a) n_[a] = std::max(1, (dims[a] + cell - 1) / cell);
    buckets_.resize(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2]);
    for (std::size_t t = 0; t < soup.triangles.size(); ++t) {
      int lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        double mn = std::numeric_limits<double>::max(), mx = -mn;
        for (int v : soup.triangles[t]) {
          mn = std::min(mn, soup.vertices[v][a]);
          mx = std::max(mx, soup.vertices[v][a]);
        }
        lo[a] = cell_of(mn, a);
        hi[a] = cell_of(mx, a);
      }
      for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
          for (int x = lo[0]; x <= hi[0]; ++x) buckets_[bucket(x, y, z)].push_back(static_cast<int>(t));
    }
  }

  double nearest(const Vec3& p) const {
    int c[3];
    for (int a = 0; a < 3; ++a) c[a] = cell_of(p[a], a);
    const int max_ring = std::max({n_[0], n_[1], n_[2]});
    double best2 = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      for (int z = c[2] - r; z <= c[2] + r; ++z) {
        if (z < 0 || z >= n_[2]) continue;
        for (int y = c[1] - r; y <= c[1] + r; ++y) {
          if (y < 0 || y >= n_[1]) continue;
          for (int x = c[0] - r; x <= c[0] + r; ++x) {
            if (x < 0 || x >= n_[0]) continue;
            if (std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])}) != r) continue;
            for (int t : buckets_[bucket(x, y, z)]) {
              const auto& tri = soup_.triangles[static_cast<std::size_t>(t)];
              const Vec3 q = closest_point_on_triangle(p, soup_.vertices[tri[0]], soup_.vertices[tri[1]],
                                                       soup_.vertices[tri[2]]);
              best2 = std::min(best2, dist2(p, q));
            }
          }
        }
      }
      // Everything not yet visited lies outside the (2r+1)^3 block of cells.
      double bound = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        const double lo = (c[a] - r) * static_cast<double>(cell_);
        const double hi = (c[a] + r + 1) * static_cast<double>(cell_);
        if (c[a] - r > 0) bound = std::min(bound, p[a] - lo);
        if (c[a] + r + 1 < n_[a]) bound = std::min(bound, hi - p[a]);
      }
      if (best2 <= bound * bound) break;
    }
    return std::sqrt(best2);
  }

 private:
  int cell_of(double x, int axis) const {
    return std::clamp(static_cast<int>(std::floor(x / cell_)), 0, n_[axis] - 1);
  }
  std::size_t bucket(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(n_[0]) * (y + static_cast<std::size_t>(n_[1]) * z);
  }

  const TriangleSoup& soup_;
  int cell_;
  int n_[3];
  std::vector<std::vector<int>> buckets_;
};

std::vector<double> exact_distances(const TriangleSoup& soup, const GridMeta& meta) {
  const TriangleBuckets buckets(soup, meta.dims, 4);
  std::vector<double> out(meta.sample_count());
  parallel_for(static_cast<std::size_t>(meta.dims[2]), [&](std::size_t k) {
    for (int j = 0; j < meta.dims[1]; ++j)
      for (int i = 0; i < meta.dims[0]; ++i)
        out[meta.index(i, j, static_cast<int>(k))] =
            buckets.nearest({double(i), double(j), static_cast<double>(k)});
  });
  return out;
}

// Seeds every voxel near a triangle with its exact closest surface point, then
// propagates nearest points with one forward and one backward raster sweep.
std::vector<double> approximate_distances(const TriangleSoup& soup, const GridMeta& meta) {
  const auto& d = meta.dims;
  const std::size_t n = meta.sample_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Vec3> nearest(n, Vec3{inf, inf, inf});
  std::vector<double> best2(n, inf);

  for (const auto& tri : soup.triangles) {
    const Vec3& a = soup.vertices[tri[0]];
    const Vec3& b = soup.vertices[tri[1]];
    const Vec3& c = soup.vertices[tri[2]];
    int lo[3], hi[3];
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::max(0, static_cast<int>(std::floor(std::min({a[ax], b[ax], c[ax]}))) - 1);
      hi[ax] = std::min(d[ax] - 1, static_cast<int>(std::ceil(std::max({a[ax], b[ax], c[ax]}))) + 1);
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const Vec3 p{double(i), double(j), double(k)};
          const Vec3 q = closest_point_on_triangle(p, a, b, c);
          const double dd = dist2(p, q);
          const std::size_t idx = meta.index(i, j, k);
          if (dd < best2[idx]) {
            best2[idx] = dd;
            nearest[idx] = q;
          }
        }
  }

  auto relax = [&](int i, int j, int k, int di, int dj, int dk) {
    const int ni = i + di, nj = j + dj, nk = k + dk;
    if (ni < 0 || nj < 0 || nk < 0 || ni >= d[0] || nj >= d[1] || nk >= d[2]) return;
    const std::size_t nidx = meta.index(ni, nj, nk);
    if (!std::isfinite(best2[nidx])) return;
    const std::size_t idx = meta.index(i, j, k);
    const double dd = dist2({double(i), double(j), double(k)}, nearest[nidx]);
    if (dd < best2[idx]) {
      best2[idx] = dd;
      nearest[idx] = nearest[nidx];
    }
  };
  // The 13 neighbours that precede a voxel in raster order.
  std::vector<std::array<int, 3>> before;
  for (int dk = -1; dk <= 0; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (dk == 0 && (dj > 0 || (dj == 0 && di >= 0))) continue;
        before.push_back({di, dj, dk});
      }
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i)
        for (const auto& o : before) relax(i, j, k, o[0], o[1], o[2]);
  for (int k = d[2] - 1; k >= 0; --k)
    for (int j = d[1] - 1; j >= 0; --j)
      for (int i = d[0] - 1; i >= 0; --i)
        for (const auto& o : before) relax(i, j, k, -o[0], -o[1], -o[2]);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(best2[i]);
  return out;
}

}  // namespace

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return std::sqrt(dist2(p, closest_point_on_triangle(p, a, b, c)));
}

TriangleSoup marching_cubes_voxel_space(const VoxelGrid& grid, double iso) {
  const auto& meta = grid.meta();
  const auto& d = meta.dims;
  if (d[0] < 2 || d[1] < 2 || d[2] < 2) throw InputError("marching cubes needs at least 2 samples per axis");

  TriangleSoup soup;
  std::vector<int> edge_vertex(3 * meta.sample_count(), -1);
  auto vertex_on_edge = [&](int i, int j, int k, int axis) {
    const std::size_t id = 3 * meta.index(i, j, k) + static_cast<std::size_t>(axis);
    if (edge_vertex[id] >= 0) return edge_vertex[id];
    int o[3] = {i, j, k};
    o[axis] += 1;
    const double v0 = grid.at(i, j, k);
    const double v1 = grid.at(o[0], o[1], o[2]);
    const double t = v1 == v0 ? 0.5 : std::clamp((iso - v0) / (v1 - v0), 0.0, 1.0);
    Vec3 p{double(i), double(j), double(k)};
    p[axis] += t;
    edge_vertex[id] = static_cast<int>(soup.vertices.size());
    soup.vertices.push_back(p);
    return edge_vertex[id];
  };

  bool any_inside = false, any_outside = false;
  for (float v : grid.data()) (is_inside(v, iso, meta.kind) ? any_inside : any_outside) = true;
  if (!any_inside || !any_outside) {
    soup.no_crossing = true;
    return soup;
  }

  for (int k = 0; k + 1 < d[2]; ++k)
    for (int j = 0; j + 1 < d[1]; ++j)
      for (int i = 0; i + 1 < d[0]; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (!is_inside(grid.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]), iso, meta.kind))
            cube |= 1 << c;
        }
        if (mc::kEdgeTable[cube] == 0) continue;
        for (int t = 0; mc::kTriTable[cube][t] != -1; t += 3) {
          std::array<int, 3> tri;
          for (int v = 0; v < 3; ++v) {
            const int e = mc::kTriTable[cube][t + v];
            const int* base = kCorner[kEdgeBase[e][0]];
            tri[v] = vertex_on_edge(i + base[0], j + base[1], k + base[2], kEdgeBase[e][1]);
          }
          const Vec3& a = soup.vertices[tri[0]];
          const Vec3 n = cross(sub(soup.vertices[tri[1]], a), sub(soup.vertices[tri[2]], a));
          if (dot(n, n) <= 1e-24) continue;
          soup.triangles.push_back(tri);
        }
      }
  return soup;
}

TriangleSoup marching_cubes(const VoxelGrid& grid, double iso) {
  TriangleSoup soup = marching_cubes_voxel_space(grid, iso);
  const auto& m = grid.meta();
  for (auto& v : soup.vertices)
    for (int a = 0; a < 3; ++a) v[a] = m.origin_mm[a] + (v[a] + 0.5) * m.voxel_size_mm[a];
  return soup;
}

VoxelGrid occupancy_to_sdf(const VoxelGrid& grid, DistanceMode mode) {
  if (grid.meta().kind != GridKind::Occupancy) throw InputError("occupancy_to_sdf needs an occupancy grid");
  const std::size_t occupied = grid.count_occupied();
  if (occupied == 0 || occupied == grid.size())
    throw InputError("occupancy_to_sdf needs both occupied and empty voxels");

  const TriangleSoup soup = marching_cubes_voxel_space(grid, 0.5);
  if (mode == DistanceMode::Auto)
    mode = grid.size() <= std::size_t{64} * 64 * 64 ? DistanceMode::Exact : DistanceMode::Approximate;
  const std::vector<double> dist =
      mode == DistanceMode::Exact ? exact_distances(soup, grid.meta()) : approximate_distances(soup, grid.meta());

  GridMeta meta = grid.meta();
  meta.kind = GridKind::Sdf;
  std::vector<float> out(grid.size());
  auto occ = grid.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto magnitude = static_cast<float>(dist[i]);
    out[i] = occ[i] != 0.0f ? -magnitude : magnitude;
  }
  return VoxelGrid(meta, std::move(out));
}

VoxelGrid normalize_sdf(const VoxelGrid& grid, bool allow_single_sign) {
  float lo = 0.0f, hi = 0.0f;
  for (float v : grid.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if ((lo == 0.0f || hi == 0.0f) && !allow_single_sign)
    throw InputError("normalize_sdf needs both negative and positive samples");
  std::vector<float> out(grid.data().begin(), grid.data().end());
  for (float& v : out) {
    if (v < 0.0f) v = static_cast<float>(static_cast<double>(v) / -static_cast<double>(lo));
    else if (v > 0.0f) v = static_cast<float>(static_cast<double>(v) / static_cast<double>(hi));
  }
  GridMeta meta = grid.meta();
  meta.kind = GridKind::Sdf;
  return VoxelGrid(meta, std::move(out));
}

}  // namespace fieldforge
