#include "fieldforge/regalign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"
#include "fieldforge/random.hpp"

namespace fieldforge {
namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Eigen::Matrix3d rotation_to_z(const Vec3& n) {
  const Eigen::Vector3d normal(n[0], n[1], n[2]);
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d axis = normal.cross(z);
  const double s = axis.norm();
  const double c = normal.dot(z);
  if (s < 1e-15) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
}

}  // namespace

Vec3 RigidTransform2p5D::apply(const Vec3& p) const {
  const double c = std::cos(theta_z), s = std::sin(theta_z);
  return {c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty, p[2]};
}

DepthMap extract_depth_map(const VoxelGrid& grid) {
  if (grid.meta().kind != GridKind::Occupancy) throw InputError("depth map needs an occupancy grid");
  const auto& d = grid.meta().dims;
  DepthMap map;
  map.nx = d[0];
  map.ny = d[1];
  map.values.assign(static_cast<std::size_t>(d[0]) * d[1], DepthMap::kEmpty);
  for (int j = 0; j < d[1]; ++j)
    for (int i = 0; i < d[0]; ++i)
      for (int k = 0; k < d[2]; ++k)
        if (grid.at(i, j, k) != 0.0f) {
          map.values[static_cast<std::size_t>(j) * d[0] + i] = k;
          break;
        }
  return map;
}

PlaneFit fit_plane(const DepthMap& depth, const GridMeta& meta) {
  std::vector<Eigen::Vector3d> pts;
  for (int j = 0; j < depth.ny; ++j)
    for (int i = 0; i < depth.nx; ++i) {
      const int k = depth.at(i, j);
      if (k == DepthMap::kEmpty) continue;
      const Vec3 c = meta.voxel_center(i, j, k);
      pts.emplace_back(c[0], c[1], meta.origin_mm[2] + k * meta.voxel_size_mm[2]);
    }
  if (pts.size() < 3) throw InputError("plane fit needs at least 3 depth points");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const auto& ev = eig.eigenvalues();
  if (ev(1) <= 1e-12 * std::max(ev(2), 1e-300)) throw InputError("plane fit points are collinear");
  Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
  if (std::abs(n.z()) < 1e-12) throw InputError("fitted plane is vertical");
  if (n.z() < 0.0) n = -n;

  PlaneFit fit;
  fit.normal = {n.x(), n.y(), n.z()};
  fit.offset = n.dot(centroid);
  double ss = 0.0;
  for (const auto& p : pts) {
    const double r = n.dot(p) - fit.offset;
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(pts.size()));
  return fit;
}

double tilt_angle(const PlaneFit& plane) {
  return std::acos(std::clamp(plane.normal[2], -1.0, 1.0));
}

VoxelGrid level_volume(const VoxelGrid& grid, const PlaneFit& plane) {
  const auto& m = grid.meta();
  const Eigen::Matrix3d rot = rotation_to_z(plane.normal);
  const double xc = m.origin_mm[0] + 0.5 * m.dims[0] * m.voxel_size_mm[0];
  const double yc = m.origin_mm[1] + 0.5 * m.dims[1] * m.voxel_size_mm[1];
  const auto& n = plane.normal;
  const Eigen::Vector3d pivot(xc, yc, (plane.offset - n[0] * xc - n[1] * yc) / n[2]);
  const Eigen::Vector3d dest(xc, yc, 0.0);

  VoxelGrid out(m);
  auto data = out.data();
  parallel_for(static_cast<std::size_t>(m.dims[2]), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i) {
        const Vec3 c = m.voxel_center(i, j, k);
        const Eigen::Vector3d src = rot.transpose() * (Eigen::Vector3d(c[0], c[1], c[2]) - dest) + pivot;
        int idx[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          idx[a] = static_cast<int>(std::lround((src[a] - m.origin_mm[a]) / m.voxel_size_mm[a] - 0.5));
          inside = inside && idx[a] >= 0 && idx[a] < m.dims[a];
        }
        data[m.index(i, j, k)] = inside ? grid.at(idx[0], idx[1], idx[2]) : 0.0f;
      }
  });
  return out;
}

VoxelGrid transform_volume(const VoxelGrid& grid, const RigidTransform2p5D& t) {
  const auto& m = grid.meta();
  const double c = std::cos(t.theta_z);
  const double s = std::sin(t.theta_z);
  VoxelGrid out(m);
  auto data = out.data();
  parallel_for(static_cast<std::size_t>(m.dims[2]), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i) {
        const Vec3 p = m.voxel_center(i, j, k);
        // Inverse map: rotate (p - t) by -theta.
        const double dx = p[0] - t.tx;
        const double dy = p[1] - t.ty;
        const Vec3 src{c * dx + s * dy, -s * dx + c * dy, p[2]};
        int idx[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          idx[a] = static_cast<int>(std::lround((src[a] - m.origin_mm[a]) / m.voxel_size_mm[a] - 0.5));
          inside = inside && idx[a] >= 0 && idx[a] < m.dims[a];
        }
        data[m.index(i, j, k)] = inside ? grid.at(idx[0], idx[1], idx[2]) : 0.0f;
      }
  });
  return out;
}

CpdResult cpd_rigid_z(const std::vector<Vec3>& source, const std::vector<Vec3>& target, const CpdConfig& config) {
  if (source.empty() || target.empty()) throw InputError("cpd needs non-empty point sets");
  if (!(config.outlier_w >= 0.0 && config.outlier_w < 1.0)) throw InputError("cpd outlier weight must be in [0, 1)");

  const auto M = source.size();
  const auto N = target.size();
  Eigen::MatrixXd Y(M, 3), X(N, 3);
  for (std::size_t m = 0; m < M; ++m) Y.row(static_cast<Eigen::Index>(m)) << source[m][0], source[m][1], source[m][2];
  for (std::size_t n = 0; n < N; ++n) X.row(static_cast<Eigen::Index>(n)) << target[n][0], target[n][1], target[n][2];

  // sigma^2 = sum_{m,n} |x_n - y_m|^2 / (D N M)
  const Eigen::Vector3d sum_x = X.colwise().sum(), sum_y = Y.colwise().sum();
  double sigma2 = (static_cast<double>(M) * X.squaredNorm() + static_cast<double>(N) * Y.squaredNorm() -
                   2.0 * sum_x.dot(sum_y)) /
                  (3.0 * static_cast<double>(N * M));
  const double sigma2_floor = 1e-12 * std::max(sigma2, 1e-300);

  CpdResult result;
  double theta = 0.0;
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double best_ll = -std::numeric_limits<double>::infinity();
  const double w = config.outlier_w;
  const double log_prefix = std::log((1.0 - w) / static_cast<double>(M));
  Eigen::MatrixXd P(M, N);

  for (int iter = 0; iter < config.max_iter; ++iter) {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix3d R;
    R << c, -s, 0, s, c, 0, 0, 0, 1;
    const Eigen::MatrixXd TY = (Y * R.transpose()).rowwise() + t.transpose();

    // E-step, column n holds posteriors for target point x_n.
    const double log_c = w > 0.0 ? 1.5 * std::log(2.0 * std::numbers::pi * sigma2) + std::log(w / (1.0 - w)) +
                                       std::log(static_cast<double>(M) / static_cast<double>(N))
                                 : -std::numeric_limits<double>::infinity();
    std::vector<double> lse(N);
    parallel_for(N, [&](std::size_t n) {
      const Eigen::Index col = static_cast<Eigen::Index>(n);
      double mx = log_c;
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(M); ++m) {
        const double e = -(X.row(col) - TY.row(m)).squaredNorm() / (2.0 * sigma2);
        P(m, col) = e;
        mx = std::max(mx, e);
      }
      double acc = std::exp(log_c - mx);
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(M); ++m) acc += std::exp(P(m, col) - mx);
      const double l = mx + std::log(acc);
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(M); ++m) P(m, col) = std::exp(P(m, col) - l);
      lse[n] = l;
    });
    double ll = 0.0;
    for (double l : lse) ll += l;
    ll += static_cast<double>(N) * (log_prefix - 1.5 * std::log(2.0 * std::numbers::pi * sigma2));
    result.log_likelihood.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      result.transform = {t.x(), t.y(), wrap_angle(theta)};
      result.sigma2 = sigma2;
    }
    result.iterations = iter + 1;
    if (iter > 0) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (std::abs(ll - prev) < config.tol * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }

    // M-step: weighted Procrustes restricted to Rz and (tx, ty, 0).
    const Eigen::VectorXd p_rows = P.rowwise().sum();   // per source point
    const Eigen::VectorXd p_cols = P.colwise().sum();   // per target point
    const double np = p_rows.sum();
    if (!(np > 0.0)) break;
    const Eigen::Vector3d mu_x = X.transpose() * p_cols / np;
    const Eigen::Vector3d mu_y = Y.transpose() * p_rows / np;
    const Eigen::Matrix3d A = X.transpose() * P.transpose() * Y - np * mu_x * mu_y.transpose();
    theta = std::atan2(A(1, 0) - A(0, 1), A(0, 0) + A(1, 1));
    const double c2 = std::cos(theta), s2 = std::sin(theta);
    Eigen::Matrix3d R2;
    R2 << c2, -s2, 0, s2, c2, 0, 0, 0, 1;
    t = mu_x - R2 * mu_y;
    t.z() = 0.0;

    const Eigen::MatrixXd TY2 = (Y * R2.transpose()).rowwise() + t.transpose();
    double weighted = 0.0;
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(N); ++n)
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(M); ++m)
        weighted += P(m, n) * (X.row(n) - TY2.row(m)).squaredNorm();
    sigma2 = weighted / (3.0 * np);
    if (sigma2 <= sigma2_floor) {
      result.transform = {t.x(), t.y(), wrap_angle(theta)};
      result.sigma2 = sigma2;
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<Vec3> surface_points(const VoxelGrid& grid, std::size_t max_points, std::uint64_t seed) {
  const auto& m = grid.meta();
  const auto& d = m.dims;
  auto occupied = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= d[0] || j >= d[1] || k >= d[2]) return false;
    return grid.at(i, j, k) != 0.0f;
  };
  std::vector<std::size_t> boundary;
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        if (!occupied(i, j, k)) continue;
        if (!occupied(i - 1, j, k) || !occupied(i + 1, j, k) || !occupied(i, j - 1, k) || !occupied(i, j + 1, k) ||
            !occupied(i, j, k - 1) || !occupied(i, j, k + 1))
          boundary.push_back(m.index(i, j, k));
      }
  if (boundary.size() > max_points) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_points; ++i) {
      const std::size_t j = i + uniform_index(rng, boundary.size() - i);
      std::swap(boundary[i], boundary[j]);
    }
    boundary.resize(max_points);
    std::sort(boundary.begin(), boundary.end());
  }
  std::vector<Vec3> pts;
  pts.reserve(boundary.size());
  const std::size_t plane = static_cast<std::size_t>(d[0]) * d[1];
  for (std::size_t idx : boundary) {
    const int k = static_cast<int>(idx / plane);
    const int j = static_cast<int>((idx % plane) / d[0]);
    const int i = static_cast<int>(idx % d[0]);
    pts.push_back(m.voxel_center(i, j, k));
  }
  return pts;
}

}  // namespace fieldforge
