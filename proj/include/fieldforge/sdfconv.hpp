#pragma once

#include <array>
#include <vector>

#include "fieldforge/voxvol.hpp"

namespace fieldforge {

struct TriangleSoup {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  // Set when the grid has no iso crossing at all (empty or full).
  bool no_crossing = false;
};

// Marching cubes over the lattice of voxel centres with linear edge
// interpolation. Vertices are shared between neighbouring cubes, so a shape
// that stays clear of the grid border yields a closed mesh. Coordinates are
// physical millimetres.
TriangleSoup marching_cubes(const VoxelGrid& grid, double iso);

// Same surface in voxel-index coordinates (voxel (i,j,k) centre at (i,j,k)).
TriangleSoup marching_cubes_voxel_space(const VoxelGrid& grid, double iso);

enum class DistanceMode {
  Auto,    // Exact up to 64^3 voxels, Approximate above
  Exact,   // nearest point on the triangle soup, via a uniform bucket grid
  Approximate,  // two raster passes propagating nearest surface points (error <= 1 voxel)
};

// Signed distance in voxel units to the marching-cubes surface at iso 0.5,
// negative for occupied voxels. Throws InputError on single-valued grids.
VoxelGrid occupancy_to_sdf(const VoxelGrid& grid, DistanceMode mode = DistanceMode::Auto);

// Negative samples divided by |min|, positive samples by max, zeros kept.
// Throws InputError on a single-signed grid unless allow_single_sign is set.
VoxelGrid normalize_sdf(const VoxelGrid& grid, bool allow_single_sign = false);

// Unsigned distance from p to triangle (a,b,c); exposed for tests.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace fieldforge
