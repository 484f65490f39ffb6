#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fieldforge/neuralfield.hpp"
#include "fieldforge/sampler.hpp"
#include "fieldforge/synthgen.hpp"
#include "fieldforge/voxvol.hpp"

namespace fieldforge {

struct ExpectedLayerImage {
  int z_index = 0;
  Image2D image;  // occupancy, nx x ny
  bool empty() const;
};

// Cross-sections of the shape as manufactured at the calibrated 100% flow.
std::vector<ExpectedLayerImage> expected_layers(const ShapeSpec& spec, const GridMeta& meta,
                                                const MorphologyModel& model = {});

// Layer k taken from the shape generated at phi_per_layer[k].
std::vector<ExpectedLayerImage> expected_layers(const ShapeSpec& spec, const GridMeta& meta,
                                                const MorphologyModel& model,
                                                const std::vector<double>& phi_per_layer);

// Layers (rows) x flow-rate candidates (columns).
struct FitnessGrid {
  std::vector<int> layers;
  std::vector<double> candidates;
  std::vector<double> values;  // row-major

  double at(std::size_t row, std::size_t col) const { return values[row * candidates.size() + col]; }
  // Header "layer,<phi>,<phi>,..." then one row per layer.
  std::string to_csv() const;
};

struct FlowScheduleEntry {
  int layer = 0;
  double z_mm = 0.0;
  double phi_percent = 100.0;
  double fitness = 0.0;
  bool operator==(const FlowScheduleEntry&) const = default;
};

struct FlowSchedule {
  std::vector<FlowScheduleEntry> entries;
  double candidate_min = 45.0;
  double candidate_max = 280.0;
  bool operator==(const FlowSchedule&) const = default;
};

// 45, 46, ..., 280.
std::vector<double> default_candidates();

// Mean absolute difference between the thresholded field slice at (z_index,
// phi) and the expected image.
template <typename T>
double fitness(const SirenNet<T>& net, int z_index, double phi, const ExpectedLayerImage& expected,
               const DomainBounds& bounds, const Dims3& dims);

// Exhaustive search per layer. Ties go to the candidate closest to 100, then
// to the smaller one. Layers whose expected image is empty get phi = 100 and
// fitness 0.
template <typename T>
std::pair<FlowSchedule, FitnessGrid> optimize_schedule(const SirenNet<T>& net,
                                                       const std::vector<ExpectedLayerImage>& expected,
                                                       const std::vector<double>& candidates,
                                                       const DomainBounds& bounds, const Dims3& dims);

// CSV "layer,z_mm,phi_percent,fitness".
std::string schedule_csv(const FlowSchedule& schedule);
// Reads entries back; candidate range is left at its defaults.
FlowSchedule parse_schedule_csv(const std::string& text);
// One "M221 S<phi>" line per layer, in layer order.
std::string m221_commands(const FlowSchedule& schedule);
void export_schedule(const FlowSchedule& schedule, const std::filesystem::path& csv_path,
                     const std::filesystem::path& m221_path);

}  // namespace fieldforge
