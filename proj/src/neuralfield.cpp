#include "fieldforge/neuralfield.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

#include "binio.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"
#include "fieldforge/random.hpp"

namespace fieldforge {

std::string to_string(FinalActivation a) { return a == FinalActivation::Linear ? "linear" : "sigmoid"; }

FinalActivation final_activation_from_string(const std::string& s) {
  if (s == "linear") return FinalActivation::Linear;
  if (s == "sigmoid") return FinalActivation::Sigmoid;
  throw ConfigError("unknown final activation '" + s + "'");
}

void SirenConfig::validate() const {
  if (in_dim != 4) throw ConfigError("SirenConfig: in_dim must be 4");
  if (out_dim != 1) throw ConfigError("SirenConfig: out_dim must be 1");
  if (hidden_layers < 1) throw ConfigError("SirenConfig: hidden_layers must be >= 1");
  if (hidden_width < 1) throw ConfigError("SirenConfig: hidden_width must be >= 1");
  if (!(omega_first > 0.0) || !(omega_hidden > 0.0) || !std::isfinite(omega_first) || !std::isfinite(omega_hidden))
    throw ConfigError("SirenConfig: omegas must be finite and > 0");
}

std::size_t SirenConfig::parameter_count() const {
  const auto h = static_cast<std::size_t>(hidden_width);
  std::size_t n = h * static_cast<std::size_t>(in_dim) + h;
  n += static_cast<std::size_t>(hidden_layers - 1) * (h * h + h);
  n += static_cast<std::size_t>(out_dim) * h + static_cast<std::size_t>(out_dim);
  return n;
}

nlohmann::json to_json(const SirenConfig& c) {
  return {{"in_dim", c.in_dim},
          {"hidden_layers", c.hidden_layers},
          {"hidden_width", c.hidden_width},
          {"omega_first", c.omega_first},
          {"omega_hidden", c.omega_hidden},
          {"out_dim", c.out_dim},
          {"final_activation", to_string(c.final_activation)}};
}

SirenConfig siren_config_from_json(const nlohmann::json& j) {
  SirenConfig c;
  try {
    c.in_dim = j.value("in_dim", c.in_dim);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.omega_first = j.value("omega_first", c.omega_first);
    c.omega_hidden = j.value("omega_hidden", c.omega_hidden);
    c.out_dim = j.value("out_dim", c.out_dim);
    if (j.contains("final_activation"))
      c.final_activation = final_activation_from_string(j.at("final_activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
SirenNet<T>::SirenNet(const SirenConfig& config) : config_(config) {
  config_.validate();
  params_.assign(config_.parameter_count(), T(0));
  std::size_t off = 0;
  for (int l = 0; l < layer_count(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(layer_outputs(l)) * (static_cast<std::size_t>(layer_inputs(l)) + 1);
  }
}

template <typename T>
int SirenNet<T>::layer_inputs(int layer) const {
  return layer == 0 ? config_.in_dim : config_.hidden_width;
}

template <typename T>
int SirenNet<T>::layer_outputs(int layer) const {
  return layer == layer_count() - 1 ? config_.out_dim : config_.hidden_width;
}

template <typename T>
double SirenNet<T>::layer_omega(int layer) const {
  if (layer == layer_count() - 1) return 1.0;
  return layer == 0 ? config_.omega_first : config_.omega_hidden;
}

template <typename T>
SirenNet<T> SirenNet<T>::initialized(const SirenConfig& config, std::uint64_t seed) {
  SirenNet net(config);
  Rng rng(derive_seed(seed, "siren-init"));
  for (int l = 0; l < net.layer_count(); ++l) {
    const int in = net.layer_inputs(l);
    const int out = net.layer_outputs(l);
    const bool sine = l < net.layer_count() - 1;
    const double w_bound = l == 0 ? 1.0 / in : std::sqrt(6.0 / in) / (sine ? net.layer_omega(l) : config.omega_hidden);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) net.weight(l, r, c) = static_cast<T>(uniform(rng, -w_bound, w_bound));
    const double b_bound = (sine ? net.layer_omega(l) : 1.0) / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r) net.bias(l, r) = static_cast<T>(uniform(rng, -b_bound, b_bound));
  }
  return net;
}

namespace {

constexpr std::size_t kChunk = 512;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const RowMat<T>> weights(const SirenNet<T>& net, int l) {
  return {net.parameters().data() + net.weight_offset(l), net.layer_outputs(l), net.layer_inputs(l)};
}

template <typename T>
Eigen::Map<const Vec<T>> biases(const SirenNet<T>& net, int l) {
  return {net.parameters().data() + net.bias_offset(l), net.layer_outputs(l)};
}

std::size_t point_count(std::span<const double> points) {
  if (points.size() % 4 != 0) throw InputError("point buffer size is not a multiple of 4");
  return points.size() / 4;
}

// Vectorized kernels treat a ragged tail differently from full packets, so
// evaluation chunks are padded to a multiple of kPad columns (copies of the
// last point). That keeps a point's value independent of where it sits in
// the batch.
constexpr std::size_t kPad = 16;

template <typename T>
Mat<T> load_inputs(std::span<const double> points, std::size_t start, std::size_t count, bool pad) {
  Eigen::Map<const Eigen::Matrix<double, 4, Eigen::Dynamic>> x(points.data() + 4 * start, 4,
                                                                static_cast<Eigen::Index>(count));
  if (!pad || count % kPad == 0) return x.template cast<T>();
  const auto cols = static_cast<Eigen::Index>((count + kPad - 1) / kPad * kPad);
  Mat<T> out(4, cols);
  out.leftCols(x.cols()) = x.template cast<T>();
  for (Eigen::Index c = x.cols(); c < cols; ++c) out.col(c) = out.col(x.cols() - 1);
  return out;
}

// First and second derivative of the final activation, given pre-activation u
// and activation y.
template <typename T>
struct ActDerivs {
  Eigen::Array<T, 1, Eigen::Dynamic> y, d1, d2;
};

template <typename T>
ActDerivs<T> activate(FinalActivation act, const Eigen::Array<T, 1, Eigen::Dynamic>& u) {
  ActDerivs<T> out;
  if (act == FinalActivation::Linear) {
    out.y = u;
    out.d1.setOnes(u.size());
    out.d2.setZero(u.size());
  } else {
    out.y = T(1) / (T(1) + (-u).exp());
    out.d1 = out.y * (T(1) - out.y);
    out.d2 = out.d1 * (T(1) - T(2) * out.y);
  }
  return out;
}

// Forward pass over one chunk, keeping what the backward passes need.
template <typename T>
struct Trace {
  std::vector<Mat<T>> a;  // a[0] = input, a[l+1] = sin(z) of sine layer l
  std::vector<Mat<T>> c;  // cos(z) of sine layer l
  Eigen::Array<T, 1, Eigen::Dynamic> u;
};

template <typename T>
Trace<T> run_forward(const SirenNet<T>& net, std::span<const double> points, std::size_t start, std::size_t count,
                     bool keep_cos, bool pad = false) {
  const int sines = net.layer_count() - 1;
  Trace<T> tr;
  tr.a.reserve(static_cast<std::size_t>(sines) + 1);
  tr.a.push_back(load_inputs<T>(points, start, count, pad));
  for (int l = 0; l < sines; ++l) {
    Mat<T> z = weights(net, l) * tr.a.back();
    z *= static_cast<T>(net.layer_omega(l));
    z.colwise() += biases(net, l);
    if (keep_cos) tr.c.push_back(z.array().cos().matrix());
    tr.a.push_back(z.array().sin().matrix());
  }
  const int out = sines;
  tr.u = (weights(net, out) * tr.a.back()).array();
  tr.u += biases(net, out)(0);
  return tr;
}

// Tangent of every sine layer along the phi input direction:
// zdot[l] = d z_l / d phi, adot[l] = d a_{l+1} / d phi.
template <typename T>
struct Tangent {
  std::vector<Mat<T>> zdot;
  std::vector<Mat<T>> adot;
  Eigen::Array<T, 1, Eigen::Dynamic> udot;
};

template <typename T>
Tangent<T> run_tangent(const SirenNet<T>& net, const Trace<T>& tr) {
  const int sines = net.layer_count() - 1;
  const auto cols = tr.a[0].cols();
  Tangent<T> tg;
  for (int l = 0; l < sines; ++l) {
    Mat<T> zd;
    if (l == 0) {
      Vec<T> col = weights(net, 0).col(kPhiAxis) * static_cast<T>(net.layer_omega(0));
      zd = col.replicate(1, cols);
    } else {
      zd = weights(net, l) * tg.adot.back();
      zd *= static_cast<T>(net.layer_omega(l));
    }
    tg.adot.push_back((tr.c[static_cast<std::size_t>(l)].array() * zd.array()).matrix());
    tg.zdot.push_back(std::move(zd));
  }
  tg.udot = (weights(net, sines) * tg.adot.back()).array();
  return tg;
}

void add_layer_gradient(std::vector<double>& g, std::size_t w_off, std::size_t b_off, const auto& gw, const auto& gb) {
  const auto rows = gw.rows();
  const auto cols = gw.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c)
      g[w_off + static_cast<std::size_t>(r * cols + c)] += static_cast<double>(gw(r, c));
    g[b_off + static_cast<std::size_t>(r)] += static_cast<double>(gb(r));
  }
}

template <typename T>
double mse_chunk(const SirenNet<T>& net, const PointBatch& batch, std::size_t start, std::size_t count, double scale,
                 std::vector<double>* grad) {
  Trace<T> tr = run_forward(net, batch.coords, start, count, grad != nullptr);
  ActDerivs<T> ad = activate(net.config().final_activation, tr.u);
  Eigen::Map<const Eigen::Array<double, 1, Eigen::Dynamic>> s(batch.targets.data() + start,
                                                              static_cast<Eigen::Index>(count));
  Eigen::Array<double, 1, Eigen::Dynamic> err = ad.y.template cast<double>() - s;
  const double sse = err.square().sum();
  if (!grad) return sse;

  const int out = net.layer_count() - 1;
  Eigen::Matrix<T, 1, Eigen::Dynamic> ubar = ((err * (2.0 * scale)).template cast<T>() * ad.d1).matrix();
  {
    Mat<T> gw = ubar * tr.a.back().transpose();
    Vec<T> gb = Vec<T>::Constant(1, ubar.sum());
    add_layer_gradient(*grad, net.weight_offset(out), net.bias_offset(out), gw, gb);
  }
  Mat<T> abar = weights(net, out).transpose() * ubar;
  for (int l = out - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const T omega = static_cast<T>(net.layer_omega(l));
    Mat<T> zbar = (abar.array() * tr.c[li].array()).matrix();
    Mat<T> gw = (zbar * tr.a[li].transpose()) * omega;
    Vec<T> gb = zbar.rowwise().sum();
    add_layer_gradient(*grad, net.weight_offset(l), net.bias_offset(l), gw, gb);
    if (l > 0) abar = (weights(net, l).transpose() * zbar) * omega;
  }
  return sse;
}

// Returns the sum of squared output derivatives over the chunk and, when grad
// is given, adds coef * d(sum ydot^2)/dTheta.
template <typename T>
double gdir_chunk(const SirenNet<T>& net, std::span<const double> proxies, std::size_t start, std::size_t count,
                  double coef, std::vector<double>* grad) {
  Trace<T> tr = run_forward(net, proxies, start, count, true);
  Tangent<T> tg = run_tangent(net, tr);
  ActDerivs<T> ad = activate(net.config().final_activation, tr.u);
  Eigen::Array<T, 1, Eigen::Dynamic> ydot = ad.d1 * tg.udot;
  const double sum_sq = ydot.template cast<double>().square().sum();
  if (!grad) return sum_sq;

  const int out = net.layer_count() - 1;
  Eigen::Array<T, 1, Eigen::Dynamic> g = ydot * static_cast<T>(2.0 * coef);
  // Adjoints of u and of udot.
  Eigen::Matrix<T, 1, Eigen::Dynamic> udbar = (g * ad.d1).matrix();
  Eigen::Matrix<T, 1, Eigen::Dynamic> ubar = (g * ad.d2 * tg.udot).matrix();
  {
    Mat<T> gw = udbar * tg.adot.back().transpose() + ubar * tr.a.back().transpose();
    Vec<T> gb = Vec<T>::Constant(1, ubar.sum());
    add_layer_gradient(*grad, net.weight_offset(out), net.bias_offset(out), gw, gb);
  }
  Mat<T> abar = weights(net, out).transpose() * ubar;
  Mat<T> adbar = weights(net, out).transpose() * udbar;
  for (int l = out - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const T omega = static_cast<T>(net.layer_omega(l));
    const auto& c = tr.c[li].array();
    const auto& s = tr.a[li + 1].array();
    Mat<T> zdbar = (adbar.array() * c).matrix();
    Mat<T> zbar = (abar.array() * c - adbar.array() * s * tg.zdot[li].array()).matrix();
    Mat<T> gw = zbar * tr.a[li].transpose();
    if (l == 0) {
      gw.col(kPhiAxis) += zdbar.rowwise().sum();
    } else {
      gw.noalias() += zdbar * tg.adot[li - 1].transpose();
    }
    gw *= omega;
    Vec<T> gb = zbar.rowwise().sum();
    add_layer_gradient(*grad, net.weight_offset(l), net.bias_offset(l), gw, gb);
    if (l > 0) {
      abar = (weights(net, l).transpose() * zbar) * omega;
      adbar = (weights(net, l).transpose() * zdbar) * omega;
    }
  }
  return sum_sq;
}

// Runs fn over fixed-size chunks and combines partial sums in chunk order, so
// the result is independent of the worker count.
template <typename Fn>
double chunked(std::size_t n, std::size_t param_count, std::span<double> grad, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<std::vector<double>> partial(grad.empty() ? 0 : chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kChunk;
    const std::size_t count = std::min(kChunk, n - start);
    std::vector<double>* g = nullptr;
    if (!grad.empty()) {
      partial[c].assign(param_count, 0.0);
      g = &partial[c];
    }
    sums[c] = fn(start, count, g);
  });
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sums[c];
    if (!grad.empty())
      for (std::size_t i = 0; i < param_count; ++i) grad[i] += partial[c][i];
  }
  return total;
}

void check_batch(const PointBatch& batch) {
  if (batch.size() == 0) throw InputError("empty batch");
  if (batch.coords.size() != 4 * batch.size()) throw InputError("batch coords/targets size mismatch");
}

}  // namespace

template <typename T>
std::vector<T> forward(const SirenNet<T>& net, std::span<const double> points) {
  const std::size_t n = point_count(points);
  std::vector<T> out(n);
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kChunk;
    const std::size_t count = std::min(kChunk, n - start);
    Trace<T> tr = run_forward(net, points, start, count, false, true);
    ActDerivs<T> ad = activate(net.config().final_activation, tr.u);
    for (std::size_t i = 0; i < count; ++i) out[start + i] = ad.y(static_cast<Eigen::Index>(i));
  });
  return out;
}

template <typename T>
std::vector<T> dF_dphi(const SirenNet<T>& net, std::span<const double> points) {
  const std::size_t n = point_count(points);
  std::vector<T> out(n);
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kChunk;
    const std::size_t count = std::min(kChunk, n - start);
    Trace<T> tr = run_forward(net, points, start, count, true, true);
    Tangent<T> tg = run_tangent(net, tr);
    ActDerivs<T> ad = activate(net.config().final_activation, tr.u);
    for (std::size_t i = 0; i < count; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out[start + i] = ad.d1(k) * tg.udot(k);
    }
  });
  return out;
}

template <typename T>
double loss_mse(const SirenNet<T>& net, const PointBatch& batch) {
  check_batch(batch);
  const std::size_t n = batch.size();
  const double sse = chunked(n, net.parameter_count(), {}, [&](std::size_t s, std::size_t c, std::vector<double>*) {
    return mse_chunk(net, batch, s, c, 0.0, nullptr);
  });
  return sse / static_cast<double>(n);
}

template <typename T>
double gdir_penalty(const SirenNet<T>& net, std::span<const double> proxies) {
  const std::size_t m = point_count(proxies);
  if (m == 0) throw InputError("empty proxy set");
  const double sum = chunked(m, net.parameter_count(), {}, [&](std::size_t s, std::size_t c, std::vector<double>*) {
    return gdir_chunk(net, proxies, s, c, 0.0, nullptr);
  });
  return sum / static_cast<double>(m);
}

template <typename T>
double accumulate_mse_gradient(const SirenNet<T>& net, const PointBatch& batch, std::span<double> grad) {
  check_batch(batch);
  if (grad.size() != net.parameter_count()) throw InputError("gradient buffer size mismatch");
  const std::size_t n = batch.size();
  const double scale = 1.0 / static_cast<double>(n);
  const double sse = chunked(n, net.parameter_count(), grad, [&](std::size_t s, std::size_t c, std::vector<double>* g) {
    return mse_chunk(net, batch, s, c, scale, g);
  });
  return sse * scale;
}

template <typename T>
double accumulate_gdir_gradient(const SirenNet<T>& net, std::span<const double> proxies, double lambda,
                                std::span<double> grad) {
  const std::size_t m = point_count(proxies);
  if (m == 0) throw InputError("empty proxy set");
  if (grad.size() != net.parameter_count()) throw InputError("gradient buffer size mismatch");
  const double coef = lambda / static_cast<double>(m);
  const double sum = chunked(m, net.parameter_count(), grad, [&](std::size_t s, std::size_t c, std::vector<double>* g) {
    return gdir_chunk(net, proxies, s, c, coef, g);
  });
  return sum / static_cast<double>(m);
}

template <typename T>
LossBreakdown grad_total_loss(const SirenNet<T>& net, const PointBatch& batch, std::span<const double> proxies,
                              double lambda, std::vector<double>& grad) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
  grad.assign(net.parameter_count(), 0.0);
  LossBreakdown lb;
  lb.lambda = lambda;
  lb.mse = accumulate_mse_gradient(net, batch, grad);
  if (lambda > 0.0) lb.gdir = accumulate_gdir_gradient(net, proxies, lambda, grad);
  lb.total = lb.mse + lambda * lb.gdir;
  return lb;
}

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'R', 'N', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
std::string dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const SirenNet<T>& net, const nlohmann::json& extra) {
  nlohmann::json shapes = nlohmann::json::array();
  for (int l = 0; l < net.layer_count(); ++l) shapes.push_back({net.layer_outputs(l), net.layer_inputs(l)});
  nlohmann::json header = {{"config", to_json(net.config())},
                           {"layer_shapes", shapes},
                           {"dtype", dtype_name<T>()},
                           {"parameter_count", net.parameter_count()},
                           {"extra", extra}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  binio::append_le<std::uint32_t>(out, kCheckpointVersion);
  binio::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + net.parameter_count() * sizeof(T));
  for (T v : net.parameters()) binio::append_le<T>(out, v);
  return out;
}

namespace {

template <typename T>
SirenNet<T> read_params(const SirenConfig& config, std::span<const std::uint8_t> payload) {
  SirenNet<T> net(config);
  if (payload.size() != net.parameter_count() * sizeof(T))
    throw FormatError("checkpoint payload size does not match the network shape");
  auto p = net.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = binio::read_le<T>(payload, i * sizeof(T));
  return net;
}

}  // namespace

AnySirenNet decode_checkpoint(std::span<const std::uint8_t> bytes, nlohmann::json* extra) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("not a checkpoint (bad magic)");
  const auto version = binio::read_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = binio::read_le<std::uint32_t>(bytes, 8);
  if (bytes.size() - 12 < hlen) throw FormatError("truncated checkpoint header");
  nlohmann::json header;
  SirenConfig config;
  std::string dtype;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + hlen);
    config = siren_config_from_json(header.at("config"));
    dtype = header.at("dtype").get<std::string>();
    const auto& shapes = header.at("layer_shapes");
    SirenNet<double> probe(config);
    if (!shapes.is_array() || shapes.size() != static_cast<std::size_t>(probe.layer_count()))
      throw FormatError("checkpoint layer shapes do not match config");
    for (int l = 0; l < probe.layer_count(); ++l) {
      const auto& s = shapes.at(static_cast<std::size_t>(l));
      if (s.at(0).get<int>() != probe.layer_outputs(l) || s.at(1).get<int>() != probe.layer_inputs(l))
        throw FormatError("checkpoint layer shapes do not match config");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what());
  }
  if (extra) *extra = header.value("extra", nlohmann::json::object());
  auto payload = bytes.subspan(12 + hlen);
  if (dtype == "f32") return read_params<float>(config, payload);
  if (dtype == "f64") return read_params<double>(config, payload);
  throw FormatError("unknown checkpoint dtype '" + dtype + "'");
}

template <typename T>
void save_checkpoint(const SirenNet<T>& net, const std::filesystem::path& path, const nlohmann::json& extra) {
  binio::write_file(path, encode_checkpoint(net, extra));
}

AnySirenNet load_checkpoint(const std::filesystem::path& path, nlohmann::json* extra) {
  return decode_checkpoint(binio::read_file(path), extra);
}

#define FIELDFORGE_INSTANTIATE(T)                                                                                   \
  template class SirenNet<T>;                                                                                      \
  template std::vector<T> forward(const SirenNet<T>&, std::span<const double>);                                    \
  template std::vector<T> dF_dphi(const SirenNet<T>&, std::span<const double>);                                    \
  template double loss_mse(const SirenNet<T>&, const PointBatch&);                                                 \
  template double gdir_penalty(const SirenNet<T>&, std::span<const double>);                                       \
  template double accumulate_mse_gradient(const SirenNet<T>&, const PointBatch&, std::span<double>);               \
  template double accumulate_gdir_gradient(const SirenNet<T>&, std::span<const double>, double, std::span<double>); \
  template LossBreakdown grad_total_loss(const SirenNet<T>&, const PointBatch&, std::span<const double>, double,   \
                                         std::vector<double>&);                                                    \
  template std::vector<std::uint8_t> encode_checkpoint(const SirenNet<T>&, const nlohmann::json&);                 \
  template void save_checkpoint(const SirenNet<T>&, const std::filesystem::path&, const nlohmann::json&);

FIELDFORGE_INSTANTIATE(float)
FIELDFORGE_INSTANTIATE(double)

#undef FIELDFORGE_INSTANTIATE

}  // namespace fieldforge
