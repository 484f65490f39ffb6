#pragma once

#include <cstdint>
#include <vector>

#include "fieldforge/voxvol.hpp"

namespace fieldforge {

// First occupied z index per (i, j) column, kEmpty where the column is empty.
struct DepthMap {
  static constexpr int kEmpty = -1;
  int nx = 0;
  int ny = 0;
  std::vector<int> values;  // x fastest

  int at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
};

// Plane n . p = offset in physical millimetres, n unit length with n.z > 0.
struct PlaneFit {
  Vec3 normal{0.0, 0.0, 1.0};
  double offset = 0.0;
  double rms_residual = 0.0;
};

// Translation in XY plus rotation about Z, theta in (-pi, pi].
struct RigidTransform2p5D {
  double tx = 0.0;
  double ty = 0.0;
  double theta_z = 0.0;

  Vec3 apply(const Vec3& p) const;
};

DepthMap extract_depth_map(const VoxelGrid& grid);

// Total least-squares plane through the depth points. A depth value k maps to
// the bottom face of that voxel, z = z0 + k * vz, since that is where the
// part's underside sits; x and y use voxel centres. Throws InputError when
// fewer than three non-collinear points exist.
PlaneFit fit_plane(const DepthMap& depth, const GridMeta& meta);

// Rotation taking plane.normal onto +Z (about normal x z), followed by the
// translation that puts the fitted plane at z = 0. The pivot is the plane
// point above the grid's XY centre, so XY placement is kept. Output uses the
// input grid's layout, resampled nearest-neighbour.
VoxelGrid level_volume(const VoxelGrid& grid, const PlaneFit& plane);

// Resamples the grid under t (nearest neighbour, same layout); voxels that map
// from outside the grid become 0.
VoxelGrid transform_volume(const VoxelGrid& grid, const RigidTransform2p5D& t);

// Angle between the plane normal and +Z, radians.
double tilt_angle(const PlaneFit& plane);

struct CpdConfig {
  int max_iter = 100;
  double tol = 1e-6;        // on relative log-likelihood change
  double outlier_w = 0.1;
};

struct CpdResult {
  RigidTransform2p5D transform;
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood;  // after every EM iteration
};

// Rigid coherent point drift with the rotation restricted to the Z axis and
// translation to the XY plane. The source is moved onto the target.
CpdResult cpd_rigid_z(const std::vector<Vec3>& source, const std::vector<Vec3>& target, const CpdConfig& config = {});

// Occupied voxels with at least one empty 6-neighbour (or on the grid border),
// as physical voxel centres, seeded uniform subsample to at most max_points.
std::vector<Vec3> surface_points(const VoxelGrid& grid, std::size_t max_points, std::uint64_t seed);

}  // namespace fieldforge
