#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "fieldforge/neuralfield.hpp"
#include "fieldforge/voxvol.hpp"

namespace fieldforge {

using Point4 = std::array<double, 4>;

// Physical box (mm) and flow-rate range that min-max normalize to [-1, 1].
struct DomainBounds {
  Vec3 min_mm{0.0, 0.0, 0.0};
  Vec3 max_mm{1.0, 1.0, 1.0};
  double phi_min = 0.0;
  double phi_max = 100.0;

  void validate() const;
  Point4 normalize(const Vec3& p_mm, double phi) const;
  double normalize_phi(double phi) const;
  // Inverse of normalize: (x, y, z) in mm and phi in percent.
  Point4 denormalize(const Point4& q) const;

  // Box spanning the voxel centres of `meta`, so the first centre maps to -1
  // and the last to +1 on every axis.
  static DomainBounds from_grid(const GridMeta& meta, double phi_min, double phi_max);

  bool operator==(const DomainBounds&) const = default;
};

nlohmann::json to_json(const DomainBounds& b);
DomainBounds domain_bounds_from_json(const nlohmann::json& j);

struct PointSet5D {
  std::vector<double> coords;   // 4 per point, row-major
  std::vector<double> targets;
  DomainBounds bounds;

  std::size_t size() const { return targets.size(); }
  PointBatch all() const { return {coords, targets}; }
};

// Every voxel centre of every volume, normalized, with its sample as target.
// Volumes must carry a flow-rate tag and share dims, voxel size and origin.
PointSet5D flatten(const std::vector<VoxelGrid>& volumes, const DomainBounds& bounds);

// Seeded shuffle of [0, n) cut into consecutive chunks of batch_size; the last
// chunk may be shorter.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

// Copies the indexed points into contiguous buffers and returns a view.
PointBatch gather(const PointSet5D& ps, const std::vector<std::size_t>& indices, std::vector<double>& coords,
                  std::vector<double>& targets);

// Latin hypercube over [-1, 1]^4: m equal strata per dimension, one sample per
// stratum, uniform inside it, strata paired across dimensions by seeded
// permutations.
std::vector<double> lhs_proxies(std::size_t m, std::uint64_t seed);

// Seed of the proxy set drawn at optimizer step `step`.
std::uint64_t proxy_seed(std::uint64_t root, std::uint64_t step);

}  // namespace fieldforge
