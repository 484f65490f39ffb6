#include "fieldforge/recon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binio.hpp"
#include "fieldforge/error.hpp"

namespace fieldforge {

GridMeta recon_meta(const Dims3& dims, const DomainBounds& bounds) {
  bounds.validate();
  GridMeta meta;
  meta.dims = dims;
  meta.kind = GridKind::Occupancy;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) throw InputError("reconstruction dims must be >= 2 per axis");
    meta.voxel_size_mm[a] = (bounds.max_mm[a] - bounds.min_mm[a]) / (dims[a] - 1);
    meta.origin_mm[a] = bounds.min_mm[a] - 0.5 * meta.voxel_size_mm[a];
  }
  return meta;
}

double default_iso(FinalActivation act) { return act == FinalActivation::Sigmoid ? 0.5 : 0.0; }

ThresholdMode threshold_mode_for(FinalActivation act) {
  return act == FinalActivation::Sigmoid ? ThresholdMode::AtLeast : ThresholdMode::AtMost;
}

namespace {

// Normalized coordinates of the voxel centres of layers [k0, k1).
std::vector<double> layer_points(const DomainBounds& bounds, const Dims3& dims, int k0, int k1, double phi) {
  const double q_phi = bounds.normalize_phi(phi);
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(dims[0]) * dims[1] * (k1 - k0) * 4);
  auto axis = [](int i, int n) { return -1.0 + 2.0 * i / (n - 1); };
  for (int k = k0; k < k1; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        pts.insert(pts.end(), {axis(i, dims[0]), axis(j, dims[1]), axis(k, dims[2]), q_phi});
  return pts;
}

}  // namespace

template <typename T>
Reconstruction reconstruct(const SirenNet<T>& net, const ReconRequest& req) {
  if (req.slab_layers < 1) throw InputError("slab_layers must be >= 1");
  GridMeta meta = recon_meta(req.dims, req.bounds);
  meta.kind = GridKind::Sdf;
  meta.flow_rate_percent = req.phi_percent;
  Reconstruction out;
  out.extrapolated = req.phi_percent < req.bounds.phi_min || req.phi_percent > req.bounds.phi_max;
  out.field = VoxelGrid(meta);
  auto data = out.field.data();
  const std::size_t layer = static_cast<std::size_t>(req.dims[0]) * req.dims[1];
  const int slabs = (req.dims[2] + req.slab_layers - 1) / req.slab_layers;
  // Slabs run in order; forward parallelizes inside each one.
  for (int s = 0; s < slabs; ++s) {
    const int k0 = s * req.slab_layers;
    const int k1 = std::min(req.dims[2], k0 + req.slab_layers);
    const auto values = forward(net, layer_points(req.bounds, req.dims, k0, k1, req.phi_percent));
    std::copy(values.begin(), values.end(), data.begin() + static_cast<std::ptrdiff_t>(k0 * layer));
  }
  const auto act = net.config().final_activation;
  out.occupancy = threshold(out.field, req.iso.value_or(default_iso(act)), threshold_mode_for(act));
  return out;
}

template <typename T>
Image2D evaluate_slice(const SirenNet<T>& net, const DomainBounds& bounds, const Dims3& dims, int k, double phi) {
  if (k < 0 || k >= dims[2]) throw InputError("slice index out of range");
  recon_meta(dims, bounds);
  const auto values = forward(net, layer_points(bounds, dims, k, k + 1, phi));
  Image2D img(dims[0], dims[1]);
  std::copy(values.begin(), values.end(), img.pixels.begin());
  return img;
}

Image2D slice_z(const VoxelGrid& grid, int k) {
  const GridMeta& m = grid.meta();
  if (k < 0 || k >= m.dims[2]) throw InputError("slice index " + std::to_string(k) + " out of range");
  Image2D img(m.dims[0], m.dims[1]);
  for (int j = 0; j < m.dims[1]; ++j)
    for (int i = 0; i < m.dims[0]; ++i) img.at(i, j) = grid.at(i, j, k);
  return img;
}

VoxelGrid stack_z(const std::vector<Image2D>& slices, const GridMeta& meta) {
  if (slices.size() != static_cast<std::size_t>(meta.dims[2])) throw InputError("slice count does not match dims");
  std::vector<float> data;
  data.reserve(meta.sample_count());
  for (const auto& s : slices) {
    if (s.width != meta.dims[0] || s.height != meta.dims[1]) throw InputError("slice size does not match dims");
    for (double v : s.pixels) data.push_back(static_cast<float>(v));
  }
  return VoxelGrid(meta, std::move(data));
}

void write_pgm(const Image2D& image, const std::filesystem::path& path, double lo, double hi) {
  if (!(hi > lo)) throw InputError("write_pgm: hi must exceed lo");
  const std::string head = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(head.begin(), head.end());
  // PGM rows run top to bottom; put +y at the top.
  for (int y = image.height - 1; y >= 0; --y)
    for (int x = 0; x < image.width; ++x) {
      const double t = std::clamp((image.at(x, y) - lo) / (hi - lo), 0.0, 1.0);
      bytes.push_back(static_cast<std::uint8_t>(std::lround(255.0 * t)));
    }
  binio::write_file(path, bytes);
}

std::vector<double> default_weight_phis() {
  std::vector<double> phis;
  for (int p = 0; p <= 300; p += 5) phis.push_back(p);
  return phis;
}

template <typename T>
std::vector<std::pair<double, double>> weight_curve(const SirenNet<T>& net, const DomainBounds& bounds,
                                                    const Dims3& dims, const std::vector<double>& phis,
                                                    const WeightParams& params) {
  if (phis.empty()) throw InputError("weight_curve: no flow rates");
  std::vector<std::pair<double, double>> out;
  for (double phi : phis) {
    ReconRequest req;
    req.phi_percent = phi;
    req.dims = dims;
    req.bounds = bounds;
    out.emplace_back(phi, digital_weight(reconstruct(net, req).occupancy, params));
  }
  return out;
}

#define FIELDFORGE_INSTANTIATE(T)                                                                        \
  template Reconstruction reconstruct(const SirenNet<T>&, const ReconRequest&);                         \
  template Image2D evaluate_slice(const SirenNet<T>&, const DomainBounds&, const Dims3&, int, double);  \
  template std::vector<std::pair<double, double>> weight_curve(const SirenNet<T>&, const DomainBounds&, \
                                                               const Dims3&, const std::vector<double>&, \
                                                               const WeightParams&);

FIELDFORGE_INSTANTIATE(float)
FIELDFORGE_INSTANTIATE(double)

#undef FIELDFORGE_INSTANTIATE

}  // namespace fieldforge
