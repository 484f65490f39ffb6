#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/fidelity.hpp"
#include "fieldforge/random.hpp"
#include "fieldforge/recon.hpp"
#include "oracles.hpp"

using namespace fieldforge;

namespace {

Image2D random_image(int w, int h, Rng& rng) {
  Image2D img(w, h);
  for (double& v : img.pixels) v = uniform01(rng);
  return img;
}

VoxelGrid random_field(Dims3 d, Rng& rng) {
  GridMeta m;
  m.dims = d;
  m.kind = GridKind::Sdf;
  VoxelGrid g(m);
  for (float& v : g.data()) v = static_cast<float>(uniform01(rng));
  return g;
}

VoxelGrid binary(Dims3 d, float fill) {
  GridMeta m;
  m.dims = d;
  return VoxelGrid(m, std::vector<float>(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill));
}

}  // namespace

TEST_CASE("ssim of x against 1 - x matches the window-loop oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Image2D x = random_image(32, 32, rng);
    Image2D y = x;
    for (double& v : y.pixels) v = 1.0 - v;
    CHECK(std::abs(ssim_2d(x, y) - oracle::ssim(x, y)) <= 1e-9);
  }
  const Image2D a = random_image(23, 17, rng), b = random_image(23, 17, rng);
  CHECK(std::abs(ssim_2d(a, b) - oracle::ssim(a, b)) <= 1e-9);
  SsimParams p;
  p.window = 7;
  p.sigma = 1.0;
  p.data_range = 2.0;
  CHECK(std::abs(ssim_2d(a, b, p) - oracle::ssim(a, b, 7, 1.0, 2.0)) <= 1e-9);
}

TEST_CASE("ssim identity, symmetry and constants") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Image2D x = random_image(16, 20, rng), y = random_image(16, 20, rng);
    CHECK(ssim_2d(x, x) == 1.0);
    CHECK(std::abs(ssim_2d(x, y) - ssim_2d(y, x)) <= 1e-12);
    const double s = ssim_2d(x, y);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
  const Image2D c(12, 12, 0.3);
  CHECK(ssim_2d(c, c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim_2d(Image2D(12, 12, 0.0), Image2D(12, 12, 0.0)) == 1.0);
}

TEST_CASE("ssim input checks") {
  CHECK_THROWS_AS(ssim_2d(Image2D(12, 12), Image2D(12, 13)), InputError);
  CHECK_THROWS_AS(ssim_2d(Image2D(10, 20), Image2D(10, 20)), InputError);
  SsimParams even;
  even.window = 10;
  CHECK_THROWS_AS(ssim_2d(Image2D(12, 12), Image2D(12, 12), even), ConfigError);
  const auto k = SsimParams{}.kernel();
  CHECK(k.size() == 11);
  CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(SsimParams{}.c1() == doctest::Approx(1e-4));
  CHECK(SsimParams{}.c2() == doctest::Approx(9e-4));
}

TEST_CASE("ssim volume matches a slice-loop oracle") {
  Rng rng(3);
  const VoxelGrid a = random_field({14, 13, 5}, rng), b = random_field({14, 13, 5}, rng);
  const SsimVolume v = ssim_volume(a, b);
  REQUIRE(v.per_slice.size() == 5);
  double mean = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double s = oracle::ssim(slice_z(a, k), slice_z(b, k));
    CHECK(std::abs(v.per_slice[static_cast<std::size_t>(k)] - s) <= 1e-9);
    mean += s / 5.0;
  }
  double var = 0.0;
  for (double s : v.per_slice) var += (s - mean) * (s - mean) / 5.0;
  CHECK(v.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(v.std == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
}

TEST_CASE("ssim volume of identical volumes and one differing slice") {
  Rng rng(4);
  const VoxelGrid a = random_field({12, 12, 6}, rng);
  const SsimVolume same = ssim_volume(a, a);
  CHECK(same.mean == 1.0);
  CHECK(same.std == 0.0);

  VoxelGrid b = a;
  for (int j = 0; j < 12; ++j)
    for (int i = 0; i < 12; ++i) b.at(i, j, 2) = 1.0f - a.at(i, j, 2);
  const SsimVolume diff = ssim_volume(a, b);
  int below = 0;
  for (double s : diff.per_slice) below += s < 1.0;
  CHECK(below == 1);
  CHECK(diff.per_slice[2] < 1.0);
  CHECK_THROWS_AS(ssim_volume(a, random_field({12, 12, 5}, rng)), InputError);
}

TEST_CASE("ssim volume clips field values to the unit range") {
  Rng rng(5);
  VoxelGrid a = random_field({12, 12, 2}, rng);
  VoxelGrid wide = a;
  for (float& v : wide.data()) v = v < 0.5f ? v - 3.0f : v + 3.0f;
  VoxelGrid clipped = wide;
  for (float& v : clipped.data()) v = std::clamp(v, 0.0f, 1.0f);
  CHECK(ssim_volume(wide, a).mean == ssim_volume(clipped, a).mean);
}

TEST_CASE("l1 norm examples and metric axioms") {
  const Dims3 d{4, 4, 4};
  CHECK(l1_norm(binary(d, 0.0f), binary(d, 1.0f)) == 1.0);
  CHECK(l1_norm(binary(d, 1.0f), binary(d, 1.0f)) == 0.0);
  VoxelGrid half = binary(d, 0.0f);
  for (std::size_t i = 0; i < half.size(); i += 2) half.data()[i] = 1.0f;
  CHECK(l1_norm(half, binary(d, 0.0f)) == 0.5);

  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const VoxelGrid a = random_field({5, 4, 3}, rng), b = random_field({5, 4, 3}, rng), c = random_field({5, 4, 3}, rng);
    CHECK(l1_norm(a, b) >= 0.0);
    CHECK(l1_norm(a, a) == 0.0);
    CHECK(l1_norm(a, b) == l1_norm(b, a));
    CHECK(l1_norm(a, c) <= l1_norm(a, b) + l1_norm(b, c) + 1e-12);
  }
  CHECK_THROWS_AS(l1_norm(binary(d, 0.0f), binary({4, 4, 3}, 0.0f)), InputError);
}

TEST_CASE("metric report fields and serialization") {
  Rng rng(7);
  const VoxelGrid a = random_field({12, 12, 3}, rng), b = random_field({12, 12, 3}, rng);
  const MetricReport r = compare(a, b);
  CHECK(r.l1 == l1_norm(a, b));
  CHECK(r.ssim_mean == ssim_volume(a, b).mean);
  CHECK(r.per_slice_ssim.size() == 3);
  const auto j = r.to_json();
  CHECK(j.at("l1").get<double>() == r.l1);
  CHECK(j.at("l1_display").get<double>() == doctest::Approx(1000.0 * r.l1));
  CHECK(MetricReport::csv_header() == "volume_a,volume_b,l1,ssim_mean,ssim_std");
  const std::string row = r.csv_row("a.vgrid", "b.vgrid");
  CHECK(row.rfind("a.vgrid,b.vgrid,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 4);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4, 5}, {1, 4, 9, 16, 25}) == doctest::Approx(1.0));
  // Ties take average ranks: x ranks 1..5, y ranks 1, 2.5, 2.5, 4, 5.
  const double rho = spearman({1, 2, 3, 4, 5}, {0, 1, 1, 2, 3});
  const double rx[] = {1, 2, 3, 4, 5}, ry[] = {1, 2.5, 2.5, 4, 5};
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - 3) * (ry[i] - 3);
    sxx += (rx[i] - 3) * (rx[i] - 3);
    syy += (ry[i] - 3) * (ry[i] - 3);
  }
  CHECK(rho == doctest::Approx(sxy / std::sqrt(sxx * syy)));
  CHECK(spearman({1, 2, 3}, {5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(spearman({1, 2}, {1}), InputError);
}
