#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fieldforge/voxvol.hpp"

namespace fieldforge {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double data_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;

  double c1() const { return (k1 * data_range) * (k1 * data_range); }
  double c2() const { return (k2 * data_range) * (k2 * data_range); }
  // Normalized 1D Gaussian taps; the 2D window is their outer product.
  std::vector<double> kernel() const;
  void validate() const;
};

// Mean of the SSIM map over all positions where the window fits entirely
// inside the image. Throws InputError on size mismatch or images smaller
// than the window.
double ssim_2d(const Image2D& x, const Image2D& y, const SsimParams& params = {});

struct SsimVolume {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across slices
  std::vector<double> per_slice;
};

// SSIM of every z-slice, values clipped to [0, 1] first.
SsimVolume ssim_volume(const VoxelGrid& a, const VoxelGrid& b, const SsimParams& params = {});

// (1/N) sum |a - b| over all voxels.
double l1_norm(const VoxelGrid& a, const VoxelGrid& b);

struct MetricReport {
  double l1 = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  std::vector<double> per_slice_ssim;

  // l1 * 1000 is added as "l1_display".
  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row(const std::string& volume_a, const std::string& volume_b) const;
};

MetricReport compare(const VoxelGrid& a, const VoxelGrid& b, const SsimParams& params = {});

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fieldforge
