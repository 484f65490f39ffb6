#include "fieldforge/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"

namespace fieldforge {

void SsimParams::validate() const {
  if (window < 1 || window % 2 == 0) throw ConfigError("SSIM window must be odd and >= 1");
  if (!(sigma > 0.0) || !(data_range > 0.0) || !(k1 > 0.0) || !(k2 > 0.0))
    throw ConfigError("SSIM sigma, data range and constants must be > 0");
}

std::vector<double> SsimParams::kernel() const {
  validate();
  std::vector<double> w(static_cast<std::size_t>(window));
  const int r = window / 2;
  for (int i = 0; i < window; ++i) {
    const double d = i - r;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= sum;
  return w;
}

namespace {

// Valid-mode separable filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * img[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim_2d(const Image2D& x, const Image2D& y, const SsimParams& params) {
  if (x.width != y.width || x.height != y.height) throw InputError("ssim_2d: image sizes differ");
  if (x.width < params.window || x.height < params.window) throw InputError("ssim_2d: image smaller than window");
  const auto k = params.kernel();
  const int w = x.width;
  const int h = x.height;
  std::vector<double> xx(x.pixels.size()), yy(x.pixels.size()), xy(x.pixels.size());
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    xx[i] = x.pixels[i] * x.pixels[i];
    yy[i] = y.pixels[i] * y.pixels[i];
    xy[i] = x.pixels[i] * y.pixels[i];
  }
  const auto mx = filter_valid(x.pixels, w, h, k);
  const auto my = filter_valid(y.pixels, w, h, k);
  const auto exx = filter_valid(xx, w, h, k);
  const auto eyy = filter_valid(yy, w, h, k);
  const auto exy = filter_valid(xy, w, h, k);
  const double c1 = params.c1();
  const double c2 = params.c2();
  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cov = exy[i] - mx[i] * my[i];
    sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.size());
}

namespace {

void require_same_dims(const VoxelGrid& a, const VoxelGrid& b, const char* what) {
  if (a.meta().dims != b.meta().dims) throw InputError(std::string(what) + ": grid dims differ");
}

Image2D clipped_slice(const VoxelGrid& g, int k) {
  const auto& d = g.meta().dims;
  Image2D img(d[0], d[1]);
  for (int j = 0; j < d[1]; ++j)
    for (int i = 0; i < d[0]; ++i) img.at(i, j) = std::clamp(static_cast<double>(g.at(i, j, k)), 0.0, 1.0);
  return img;
}

}  // namespace

SsimVolume ssim_volume(const VoxelGrid& a, const VoxelGrid& b, const SsimParams& params) {
  require_same_dims(a, b, "ssim_volume");
  const int nz = a.meta().dims[2];
  SsimVolume out;
  out.per_slice.resize(static_cast<std::size_t>(nz));
  parallel_for(static_cast<std::size_t>(nz), [&](std::size_t k) {
    out.per_slice[k] = ssim_2d(clipped_slice(a, static_cast<int>(k)), clipped_slice(b, static_cast<int>(k)), params);
  });
  out.mean = std::accumulate(out.per_slice.begin(), out.per_slice.end(), 0.0) / nz;
  double var = 0.0;
  for (double v : out.per_slice) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / nz);
  return out;
}

double l1_norm(const VoxelGrid& a, const VoxelGrid& b) {
  require_same_dims(a, b, "l1_norm");
  double sum = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) sum += std::abs(static_cast<double>(da[i]) - static_cast<double>(db[i]));
  return sum / static_cast<double>(da.size());
}

nlohmann::json MetricReport::to_json() const {
  return {{"l1", l1},
          {"l1_display", l1 * 1000.0},
          {"ssim_mean", ssim_mean},
          {"ssim_std", ssim_std},
          {"per_slice_ssim", per_slice_ssim}};
}

std::string MetricReport::csv_header() { return "volume_a,volume_b,l1,ssim_mean,ssim_std"; }

std::string MetricReport::csv_row(const std::string& volume_a, const std::string& volume_b) const {
  std::ostringstream out;
  out.precision(17);
  out << volume_a << ',' << volume_b << ',' << l1 << ',' << ssim_mean << ',' << ssim_std;
  return out.str();
}

MetricReport compare(const VoxelGrid& a, const VoxelGrid& b, const SsimParams& params) {
  MetricReport r;
  r.l1 = l1_norm(a, b);
  SsimVolume s = ssim_volume(a, b, params);
  r.ssim_mean = s.mean;
  r.ssim_std = s.std;
  r.per_slice_ssim = std::move(s.per_slice);
  return r;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  if (x.size() < 2) throw InputError("spearman: need at least two samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace fieldforge
