#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace fieldforge {

enum class FinalActivation { Linear, Sigmoid };

std::string to_string(FinalActivation a);
FinalActivation final_activation_from_string(const std::string& s);

// Layout: input (x, y, z, phi) -> hidden_layers sine layers of hidden_width
// -> one linear output. A sine layer computes sin(omega * W a + b), with
// omega_first on the first layer and omega_hidden on the rest.
struct SirenConfig {
  int in_dim = 4;
  int hidden_layers = 3;
  int hidden_width = 64;
  double omega_first = 30.0;
  double omega_hidden = 30.0;
  int out_dim = 1;
  FinalActivation final_activation = FinalActivation::Sigmoid;

  void validate() const;
  std::size_t parameter_count() const;
  bool operator==(const SirenConfig&) const = default;
};

nlohmann::json to_json(const SirenConfig& c);
SirenConfig siren_config_from_json(const nlohmann::json& j);

// Index of the flow-rate coordinate in a normalized input point.
inline constexpr int kPhiAxis = 3;

// Parameters live in one contiguous buffer, layer by layer, each layer's
// weight matrix row-major (out x in) followed by its bias. That is also the
// checkpoint payload order.
template <typename T>
class SirenNet {
 public:
  using Scalar = T;

  // All parameters zero.
  explicit SirenNet(const SirenConfig& config);

  // First layer W ~ U(-1/in, 1/in); later layers W ~ U(-sqrt(6/fan_in)/omega,
  // +sqrt(6/fan_in)/omega). Sine-layer biases are drawn so the phase spread
  // matches sin(omega * (W a + b)) with b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
  // the output bias uses the plain range.
  static SirenNet initialized(const SirenConfig& config, std::uint64_t seed);

  const SirenConfig& config() const { return config_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }

  int layer_count() const { return config_.hidden_layers + 1; }
  int layer_inputs(int layer) const;
  int layer_outputs(int layer) const;
  double layer_omega(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[static_cast<std::size_t>(layer)] +
           static_cast<std::size_t>(layer_inputs(layer)) * static_cast<std::size_t>(layer_outputs(layer));
  }

  T& weight(int layer, int row, int col) {
    return params_[weight_offset(layer) + static_cast<std::size_t>(row) * layer_inputs(layer) + col];
  }
  T weight(int layer, int row, int col) const {
    return params_[weight_offset(layer) + static_cast<std::size_t>(row) * layer_inputs(layer) + col];
  }
  T& bias(int layer, int row) { return params_[bias_offset(layer) + static_cast<std::size_t>(row)]; }
  T bias(int layer, int row) const { return params_[bias_offset(layer) + static_cast<std::size_t>(row)]; }

  template <typename U>
  SirenNet<U> cast() const {
    SirenNet<U> out(config_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<U>(params_[i]);
    return out;
  }

  bool operator==(const SirenNet&) const = default;

 private:
  SirenConfig config_;
  std::vector<T> params_;
  std::vector<std::size_t> offsets_;
};

using AnySirenNet = std::variant<SirenNet<float>, SirenNet<double>>;

// Normalized points are stored row-major, 4 values per point.
struct PointBatch {
  std::span<const double> coords;   // size = 4 * n
  std::span<const double> targets;  // size = n
  std::size_t size() const { return targets.size(); }
};

struct LossBreakdown {
  double mse = 0.0;
  double gdir = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

template <typename T>
std::vector<T> forward(const SirenNet<T>& net, std::span<const double> points);

// Exact dF/dphi (phi is input coordinate 3), forward-mode through every layer.
template <typename T>
std::vector<T> dF_dphi(const SirenNet<T>& net, std::span<const double> points);

// (1/N) sum (S_i - F(X_i))^2. Throws InputError on an empty batch.
template <typename T>
double loss_mse(const SirenNet<T>& net, const PointBatch& batch);

// (1/M) sum (dF/dphi)^2 over the proxies. Throws InputError when empty.
template <typename T>
double gdir_penalty(const SirenNet<T>& net, std::span<const double> proxies);

// Adds d(mse)/dTheta into grad and returns the mse.
template <typename T>
double accumulate_mse_gradient(const SirenNet<T>& net, const PointBatch& batch, std::span<double> grad);

// Adds lambda * d(gdir)/dTheta into grad and returns the (unweighted) gdir
// penalty. Differentiates through the input-derivative graph.
template <typename T>
double accumulate_gdir_gradient(const SirenNet<T>& net, std::span<const double> proxies, double lambda,
                                std::span<double> grad);

// Gradient of mse + lambda * gdir with respect to every parameter. With
// lambda == 0 the proxy pass is skipped and gdir is reported as 0.
template <typename T>
LossBreakdown grad_total_loss(const SirenNet<T>& net, const PointBatch& batch, std::span<const double> proxies,
                              double lambda, std::vector<double>& grad);

// Checkpoint: "SRNC", u32 version, u32 header length, JSON header, then the
// raw little-endian parameter buffer. `extra` is stored under "extra".
template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const SirenNet<T>& net, const nlohmann::json& extra = nlohmann::json::object());
AnySirenNet decode_checkpoint(std::span<const std::uint8_t> bytes, nlohmann::json* extra = nullptr);

template <typename T>
void save_checkpoint(const SirenNet<T>& net, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
AnySirenNet load_checkpoint(const std::filesystem::path& path, nlohmann::json* extra = nullptr);

}  // namespace fieldforge
