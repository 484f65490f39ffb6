#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "fieldforge/voxvol.hpp"

namespace fieldforge {

// Parametric stand-ins for the printed parts. Every shape lives in a local
// frame whose bounding box is centred on the origin; generate_volume places
// that origin at the grid centre.
struct Sphere {
  double r_mm = 8.0;
};
struct Cylinder {
  double r_mm = 6.0;
  double h_mm = 12.0;
};
// Hexagonal head (head_r is the circumradius) at the bottom, round shaft on top.
struct HexBolt {
  double head_r = 6.0;
  double head_h = 4.0;
  double shaft_r = 3.0;
  double shaft_h = 12.0;
};
struct GearDisk {
  double r_mm = 10.0;
  double h_mm = 4.0;
  int n_teeth = 12;
  double tooth_depth = 2.0;
};
// Spherical body with two capsule ears rising from its upper half.
struct BunnyProxy {
  double body_r = 6.0;
  double ear_r = 1.2;
  double ear_h = 5.0;
};

struct ShapeSpec {
  std::variant<Sphere, Cylinder, HexBolt, GearDisk, BunnyProxy> base = Sphere{};

  std::string name() const;
  // Throws InvariantError for non-positive dimensions.
  void validate() const;
};

struct MorphologyModel {
  double alpha_mm = 0.6;                  // dilation per unit fractional over-extrusion
  double void_threshold_percent = 60.0;   // voids appear below this flow rate
  double void_period_mm = 3.0;            // hatch period
  double void_gain = 1.5;

  void validate() const;
};

struct LocalBox {
  Vec3 lo;
  Vec3 hi;
};

// Signed distance of the undeformed shape (mm, inside negative). Exact for
// single primitives; unions take the minimum, exact outside the part.
double base_sdf(const ShapeSpec& spec, const Vec3& p);
LocalBox shape_bounds(const ShapeSpec& spec);

// Flow-rate-dependent oracle: linear dilation by alpha*(phi-100)/100, plus
// deterministic sinusoidal void carving below the void threshold.
double oracle_sdf(const ShapeSpec& spec, const MorphologyModel& model, const Vec3& p, double phi);

// Maps a voxel centre of `meta` into the shape's local frame.
Vec3 grid_to_local(const GridMeta& meta, const Vec3& physical);

// Occupancy at every voxel centre (oracle_sdf <= 0). Throws InputError when the
// dilated shape does not fit with a 2-voxel margin.
VoxelGrid generate_volume(const ShapeSpec& spec, const MorphologyModel& model, const GridMeta& meta, double phi);

inline const std::vector<double> kDefaultFlowRates = {45, 50, 60, 80, 100, 130, 170, 220, 280};

struct ManifestEntry {
  std::filesystem::path path;
  double flow_rate_percent = 0.0;
};

struct Manifest {
  std::string shape;
  std::vector<ManifestEntry> volumes;
};

// Writes one VGRID per flow rate plus manifest.json into out_dir.
Manifest generate_dataset(const ShapeSpec& spec, const MorphologyModel& model, const GridMeta& meta,
                          const std::vector<double>& phis, const std::filesystem::path& out_dir);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
// Relative volume paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double ("45", "62.5").
std::string format_number(double value);

}  // namespace fieldforge
