#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fieldforge/neuralfield.hpp"
#include "fieldforge/sampler.hpp"

namespace fieldforge {

enum class FieldMode { Occupancy, Sdf };

std::string to_string(FieldMode m);
FieldMode field_mode_from_string(const std::string& s);
// Sigmoid for occupancy targets in [0, 1], linear for SDF targets in [-1, 1].
FinalActivation activation_for(FieldMode m);

// Step-size bound of the Rprop optimizer over the run: cosine decay from
// step_max_initial to step_max_initial * final_ratio.
struct AnnealSchedule {
  double step_max_initial = 1e-2;
  double final_ratio = 0.1;
};

struct TrainConfig {
  int epochs = 5;
  std::size_t batch_size = 50000;
  std::size_t proxies_per_step = 50000;
  double lambda = 1e-2;
  double lr = 1e-4;  // initial Rprop step size
  AnnealSchedule schedule;
  std::uint64_t seed = 0;
  FieldMode mode = FieldMode::Occupancy;
  bool resample_proxies = true;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct RpropState {
  std::vector<double> step;
  std::vector<double> prev_grad;
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double step_min = 1e-8;
  double step_max = 1e-2;

  RpropState() = default;
  RpropState(std::size_t n, double initial_step, double step_max);
};

// Rprop without weight backtracking. Same sign as last time: step *= eta_plus;
// flipped sign: step *= eta_minus, no move, and the stored gradient is zeroed
// so the next step neither grows nor shrinks; zero gradient: nothing changes.
// Steps are clamped to [step_min, step_max]. Throws NumericError naming the
// first non-finite gradient component.
template <typename T>
void rprop_step(std::span<T> params, std::span<const double> grad, RpropState& state);

// final + (initial - final) * (1 + cos(pi * t / total)) / 2, final = initial / 10.
double cosine_anneal(double step_max_initial, std::size_t step, std::size_t total_steps, double final_ratio = 0.1);

struct TrainReport {
  std::vector<LossBreakdown> history;  // one per optimizer step
  std::vector<double> epoch_seconds;
  std::string checkpoint_path;
  double gdir_seconds = 0.0;
  double total_seconds = 0.0;
  // Time in the proxy pass relative to the rest of the step.
  double gdir_overhead_fraction = 0.0;
  bool diverged = false;
  std::string divergence_reason;

  // Deterministic content only; wall-clock figures live in timing_json().
  nlohmann::json to_json() const;
  nlohmann::json timing_json() const;
  std::string history_csv() const;
};

template <typename T>
struct TrainResult {
  SirenNet<T> net;
  TrainReport report;
};

using StepCallback = std::function<void(std::size_t step, std::size_t total_steps, const LossBreakdown&)>;

// Rprop over epochs x mini-batches. Each step evaluates mse on the batch plus
// lambda times the proxy penalty on a Latin-hypercube proxy set. If the loss
// turns non-finite the run stops and returns the last parameters that gave a
// finite loss, with report.diverged set.
template <typename T>
TrainResult<T> train(const PointSet5D& dataset, const TrainConfig& config, const SirenConfig& net_config,
                     const StepCallback& on_step = {});

// Same, starting from given parameters.
template <typename T>
TrainResult<T> train_from(SirenNet<T> net, const PointSet5D& dataset, const TrainConfig& config,
                          const StepCallback& on_step = {});

struct OmegaCandidate {
  double omega_first = 30.0;
  double omega_hidden = 30.0;
  bool operator==(const OmegaCandidate&) const = default;
};

struct OmegaSearchResult {
  OmegaCandidate best;
  std::vector<std::pair<OmegaCandidate, double>> validation_mse;  // in candidate order
};

// Trains every candidate on a seeded `subsample` fraction of the data and
// scores it by mse on a disjoint held-out 1%. Lowest score wins; ties go to
// the smaller omega_first, then the smaller omega_hidden.
template <typename T>
OmegaSearchResult omega_grid_search(const PointSet5D& dataset, const std::vector<OmegaCandidate>& candidates,
                                    const TrainConfig& config, const SirenConfig& net_config, double subsample = 0.1);

}  // namespace fieldforge
