#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "fieldforge/neuralfield.hpp"
#include "fieldforge/sampler.hpp"
#include "fieldforge/voxvol.hpp"

namespace fieldforge {

struct ReconRequest {
  double phi_percent = 100.0;
  Dims3 dims{32, 32, 32};
  DomainBounds bounds;
  // Defaults to 0.5 for sigmoid (occupancy) nets and 0.0 for linear (SDF) nets.
  std::optional<double> iso;
  int slab_layers = 8;  // z layers evaluated per work item
};

struct Reconstruction {
  VoxelGrid field;      // raw network output, stored as a real-valued grid
  VoxelGrid occupancy;  // field thresholded at iso
  bool extrapolated = false;  // phi outside the training range
};

// Grid whose voxel centres span bounds: centre i sits at min + i*(max-min)/(n-1).
GridMeta recon_meta(const Dims3& dims, const DomainBounds& bounds);

double default_iso(FinalActivation act);
ThresholdMode threshold_mode_for(FinalActivation act);

template <typename T>
Reconstruction reconstruct(const SirenNet<T>& net, const ReconRequest& req);

// Raw field on one z layer of the reconstruction grid.
template <typename T>
Image2D evaluate_slice(const SirenNet<T>& net, const DomainBounds& bounds, const Dims3& dims, int k, double phi);

Image2D slice_z(const VoxelGrid& grid, int k);
// Inverse of slicing every layer of a grid with `meta`.
VoxelGrid stack_z(const std::vector<Image2D>& slices, const GridMeta& meta);

// Binary P5 PGM; values are mapped from [lo, hi] to 0..255 with clipping.
void write_pgm(const Image2D& image, const std::filesystem::path& path, double lo = 0.0, double hi = 1.0);

// 0, 5, ..., 300.
std::vector<double> default_weight_phis();

// (phi, grams) per phi: reconstruct, threshold, digital_weight.
template <typename T>
std::vector<std::pair<double, double>> weight_curve(const SirenNet<T>& net, const DomainBounds& bounds,
                                                    const Dims3& dims, const std::vector<double>& phis,
                                                    const WeightParams& params = {});

}  // namespace fieldforge
