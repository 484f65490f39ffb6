#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldforge/fidelity.hpp"
#include "fieldforge/neuralfield.hpp"
#include "fieldforge/regalign.hpp"
#include "fieldforge/synthgen.hpp"
#include "fieldforge/trainer.hpp"
#include "fieldforge/voxvol.hpp"

namespace fieldforge {

nlohmann::json to_json(const ShapeSpec& s);
ShapeSpec shape_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MorphologyModel& m);
MorphologyModel morphology_from_json(const nlohmann::json& j);

// Layers whose z index is at or above the cut get top_phi, the rest base_phi.
// The cut sits so that the top `top_fraction` of the occupied z-span of the
// 100% part (plus everything above it) is covered.
struct LayerProfile {
  double top_fraction = 0.0;
  double top_phi = 100.0;
  double base_phi = 100.0;
};

std::vector<double> layer_profile(const VoxelGrid& reference, const LayerProfile& profile);

enum class Precision { F32, F64 };

// Everything a CLI run needs, read from one JSON document. Unknown keys are
// rejected so typos surface as config errors.
struct RunConfig {
  std::uint64_t seed = 0;
  ShapeSpec shape{BunnyProxy{2.4, 0.5, 2.4}};
  MorphologyModel morphology;
  GridMeta grid;
  std::vector<double> flow_rates = kDefaultFlowRates;
  std::vector<double> holdout_flow_rates;  // generated but never trained on
  double phi_min = 45.0;
  double phi_max = 280.0;
  TrainConfig train;
  SirenConfig network;
  Precision precision = Precision::F32;
  double recon_phi = 100.0;
  std::optional<Dims3> recon_dims;       // defaults to grid dims
  std::optional<Dims3> weight_dims;      // defaults to half the grid dims
  std::vector<double> weight_phis;       // defaults to 0..300 step 5
  WeightParams weight;
  std::vector<double> candidates;        // defaults to 45..280 step 1
  LayerProfile profile;
  SsimParams ssim;
  CpdConfig cpd;
  std::size_t register_points = 1500;

  RunConfig();
};

// Throws ConfigError; JSON syntax errors report line and column.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace fieldforge
