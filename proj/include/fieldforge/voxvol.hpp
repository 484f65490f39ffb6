#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fieldforge {

using Vec3 = std::array<double, 3>;
using Dims3 = std::array<int, 3>;

enum class GridKind { Occupancy, Sdf };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

struct GridMeta {
  Dims3 dims{1, 1, 1};
  Vec3 voxel_size_mm{1.0, 1.0, 1.0};
  GridKind kind = GridKind::Occupancy;
  std::optional<double> flow_rate_percent;
  Vec3 origin_mm{0.0, 0.0, 0.0};

  std::size_t sample_count() const;
  // x-fastest, then y, then z.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  Vec3 voxel_center(int i, int j, int k) const {
    return {origin_mm[0] + (i + 0.5) * voxel_size_mm[0], origin_mm[1] + (j + 0.5) * voxel_size_mm[1],
            origin_mm[2] + (k + 0.5) * voxel_size_mm[2]};
  }
  // Throws InvariantError on non-positive dims or voxel sizes.
  void validate() const;

  bool operator==(const GridMeta&) const = default;
};

// Dense scalar volume. Occupancy samples are 0 or 1, SDF (and any other
// real-valued field) samples are finite floats. Storage is x-fastest.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(GridMeta meta);
  VoxelGrid(GridMeta meta, std::vector<float> data);

  const GridMeta& meta() const { return meta_; }
  GridMeta& meta() { return meta_; }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  std::size_t size() const { return data_.size(); }

  float at(int i, int j, int k) const { return data_[meta_.index(i, j, k)]; }
  float& at(int i, int j, int k) { return data_[meta_.index(i, j, k)]; }

  std::size_t count_occupied() const;

  // Checks the value invariants for the grid kind; throws InvariantError.
  void validate() const;

  bool operator==(const VoxelGrid&) const = default;

 private:
  GridMeta meta_;
  std::vector<float> data_;
};

// Row-major 2D image (x fastest), used for z-slices and expected layers.
struct Image2D {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image2D() = default;
  Image2D(int w, int h, double fill = 0.0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Image2D&) const = default;
};

struct WeightParams {
  double density_g_per_cm3 = 1.25;  // PLA
};

// AtLeast: value >= iso is occupied (field outputs). AtMost: value <= iso is
// occupied (SDF, inside negative; the zero level set counts as inside).
enum class ThresholdMode { AtLeast, AtMost };

VoxelGrid threshold(const VoxelGrid& grid, double iso, ThresholdMode mode);
// Mode picked from the grid kind: Sdf -> AtMost, Occupancy -> AtLeast.
VoxelGrid threshold(const VoxelGrid& grid, double iso);

// Occupied count x voxel volume (cm^3) x density.
double digital_weight(const VoxelGrid& grid, const WeightParams& params = {});

std::vector<std::uint8_t> encode_vgrid(const VoxelGrid& grid);
VoxelGrid decode_vgrid(std::span<const std::uint8_t> bytes);
void write_vgrid(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid read_vgrid(const std::filesystem::path& path);

}  // namespace fieldforge
