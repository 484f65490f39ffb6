#include "fieldforge/sampler.hpp"

#include <cmath>
#include <numeric>

#include "fieldforge/error.hpp"
#include "fieldforge/random.hpp"

namespace fieldforge {

void DomainBounds::validate() const {
  for (int a = 0; a < 3; ++a)
    if (!(max_mm[a] > min_mm[a]) || !std::isfinite(min_mm[a]) || !std::isfinite(max_mm[a]))
      throw ConfigError("domain bounds: max must exceed min on every axis");
  if (!(phi_max > phi_min) || !std::isfinite(phi_min) || !std::isfinite(phi_max))
    throw ConfigError("domain bounds: phi_max must exceed phi_min");
}

double DomainBounds::normalize_phi(double phi) const { return -1.0 + 2.0 * (phi - phi_min) / (phi_max - phi_min); }

Point4 DomainBounds::normalize(const Vec3& p, double phi) const {
  Point4 q;
  for (int a = 0; a < 3; ++a) q[a] = -1.0 + 2.0 * (p[a] - min_mm[a]) / (max_mm[a] - min_mm[a]);
  q[3] = normalize_phi(phi);
  return q;
}

Point4 DomainBounds::denormalize(const Point4& q) const {
  Point4 p;
  for (int a = 0; a < 3; ++a) p[a] = min_mm[a] + (q[a] + 1.0) * 0.5 * (max_mm[a] - min_mm[a]);
  p[3] = phi_min + (q[3] + 1.0) * 0.5 * (phi_max - phi_min);
  return p;
}

DomainBounds DomainBounds::from_grid(const GridMeta& meta, double phi_min, double phi_max) {
  DomainBounds b;
  b.min_mm = meta.voxel_center(0, 0, 0);
  b.max_mm = meta.voxel_center(meta.dims[0] - 1, meta.dims[1] - 1, meta.dims[2] - 1);
  // A single-voxel axis has no extent; give it one voxel so bounds stay valid.
  for (int a = 0; a < 3; ++a)
    if (meta.dims[a] == 1) {
      b.min_mm[a] -= 0.5 * meta.voxel_size_mm[a];
      b.max_mm[a] += 0.5 * meta.voxel_size_mm[a];
    }
  b.phi_min = phi_min;
  b.phi_max = phi_max;
  b.validate();
  return b;
}

nlohmann::json to_json(const DomainBounds& b) {
  return {{"min_mm", b.min_mm}, {"max_mm", b.max_mm}, {"phi_min", b.phi_min}, {"phi_max", b.phi_max}};
}

DomainBounds domain_bounds_from_json(const nlohmann::json& j) {
  DomainBounds b;
  try {
    b.min_mm = j.at("min_mm").get<Vec3>();
    b.max_mm = j.at("max_mm").get<Vec3>();
    b.phi_min = j.at("phi_min").get<double>();
    b.phi_max = j.at("phi_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("domain bounds: ") + e.what());
  }
  b.validate();
  return b;
}

PointSet5D flatten(const std::vector<VoxelGrid>& volumes, const DomainBounds& bounds) {
  bounds.validate();
  if (volumes.empty()) throw InputError("flatten: no volumes");
  const GridMeta& ref = volumes.front().meta();
  std::size_t total = 0;
  for (const auto& v : volumes) {
    const GridMeta& m = v.meta();
    if (!m.flow_rate_percent) throw InputError("flatten: volume without a flow-rate tag");
    if (m.dims != ref.dims || m.voxel_size_mm != ref.voxel_size_mm || m.origin_mm != ref.origin_mm)
      throw InputError("flatten: volumes have inconsistent grids");
    total += v.size();
  }
  PointSet5D ps;
  ps.bounds = bounds;
  ps.coords.reserve(4 * total);
  ps.targets.reserve(total);
  for (const auto& v : volumes) {
    const GridMeta& m = v.meta();
    const double phi = bounds.normalize_phi(*m.flow_rate_percent);
    for (int k = 0; k < m.dims[2]; ++k)
      for (int j = 0; j < m.dims[1]; ++j)
        for (int i = 0; i < m.dims[0]; ++i) {
          Point4 q = bounds.normalize(m.voxel_center(i, j, k), 0.0);
          ps.coords.insert(ps.coords.end(), {q[0], q[1], q[2], phi});
          ps.targets.push_back(v.at(i, j, k));
        }
  }
  return ps;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "batches"));
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + batch_size)));
  return out;
}

PointBatch gather(const PointSet5D& ps, const std::vector<std::size_t>& indices, std::vector<double>& coords,
                  std::vector<double>& targets) {
  coords.resize(4 * indices.size());
  targets.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    for (int a = 0; a < 4; ++a) coords[4 * i + a] = ps.coords[4 * src + a];
    targets[i] = ps.targets[src];
  }
  return {coords, targets};
}

std::vector<double> lhs_proxies(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ConfigError("proxy count must be >= 1");
  Rng rng(seed);
  std::vector<double> out(4 * m);
  std::vector<std::size_t> perm(m);
  for (int d = 0; d < 4; ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(perm), rng);
    for (std::size_t i = 0; i < m; ++i) {
      double v = -1.0 + 2.0 * (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(m);
      out[4 * i + d] = std::min(v, 1.0);
    }
  }
  return out;
}

std::uint64_t proxy_seed(std::uint64_t root, std::uint64_t step) { return derive_seed(derive_seed(root, "proxies"), step); }

}  // namespace fieldforge
