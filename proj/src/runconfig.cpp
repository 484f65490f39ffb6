#include "fieldforge/runconfig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fieldforge/error.hpp"
#include "fieldforge/recon.hpp"
#include "fieldforge/flowopt.hpp"

namespace fieldforge {
namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> k(known.begin(), known.end());
  for (const auto& item : j.items())
    if (!k.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

}  // namespace

nlohmann::json to_json(const ShapeSpec& s) {
  return std::visit(
      [&](const auto& v) -> nlohmann::json {
        using S = std::decay_t<decltype(v)>;
        nlohmann::json j = {{"type", s.name()}};
        if constexpr (std::is_same_v<S, Sphere>) {
          j["r_mm"] = v.r_mm;
        } else if constexpr (std::is_same_v<S, Cylinder>) {
          j["r_mm"] = v.r_mm;
          j["h_mm"] = v.h_mm;
        } else if constexpr (std::is_same_v<S, HexBolt>) {
          j["head_r"] = v.head_r;
          j["head_h"] = v.head_h;
          j["shaft_r"] = v.shaft_r;
          j["shaft_h"] = v.shaft_h;
        } else if constexpr (std::is_same_v<S, GearDisk>) {
          j["r_mm"] = v.r_mm;
          j["h_mm"] = v.h_mm;
          j["n_teeth"] = v.n_teeth;
          j["tooth_depth"] = v.tooth_depth;
        } else {
          j["body_r"] = v.body_r;
          j["ear_r"] = v.ear_r;
          j["ear_h"] = v.ear_h;
        }
        return j;
      },
      s.base);
}

ShapeSpec shape_from_json(const nlohmann::json& j) {
  ShapeSpec s;
  const std::string type = j.value("type", std::string());
  if (type == "sphere") {
    reject_unknown(j, {"type", "r_mm"}, "shape");
    Sphere v;
    v.r_mm = j.value("r_mm", v.r_mm);
    s.base = v;
  } else if (type == "cylinder") {
    reject_unknown(j, {"type", "r_mm", "h_mm"}, "shape");
    Cylinder v;
    v.r_mm = j.value("r_mm", v.r_mm);
    v.h_mm = j.value("h_mm", v.h_mm);
    s.base = v;
  } else if (type == "hex_bolt") {
    reject_unknown(j, {"type", "head_r", "head_h", "shaft_r", "shaft_h"}, "shape");
    HexBolt v;
    v.head_r = j.value("head_r", v.head_r);
    v.head_h = j.value("head_h", v.head_h);
    v.shaft_r = j.value("shaft_r", v.shaft_r);
    v.shaft_h = j.value("shaft_h", v.shaft_h);
    s.base = v;
  } else if (type == "gear_disk") {
    reject_unknown(j, {"type", "r_mm", "h_mm", "n_teeth", "tooth_depth"}, "shape");
    GearDisk v;
    v.r_mm = j.value("r_mm", v.r_mm);
    v.h_mm = j.value("h_mm", v.h_mm);
    v.n_teeth = j.value("n_teeth", v.n_teeth);
    v.tooth_depth = j.value("tooth_depth", v.tooth_depth);
    s.base = v;
  } else if (type == "bunny_proxy") {
    reject_unknown(j, {"type", "body_r", "ear_r", "ear_h"}, "shape");
    BunnyProxy v;
    v.body_r = j.value("body_r", v.body_r);
    v.ear_r = j.value("ear_r", v.ear_r);
    v.ear_h = j.value("ear_h", v.ear_h);
    s.base = v;
  } else {
    throw ConfigError("shape: unknown type '" + type + "'");
  }
  try {
    s.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("shape: ") + e.what());
  }
  return s;
}

nlohmann::json to_json(const MorphologyModel& m) {
  return {{"alpha_mm", m.alpha_mm},
          {"void_threshold_percent", m.void_threshold_percent},
          {"void_period_mm", m.void_period_mm},
          {"void_gain", m.void_gain}};
}

MorphologyModel morphology_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"alpha_mm", "void_threshold_percent", "void_period_mm", "void_gain"}, "morphology");
  MorphologyModel m;
  m.alpha_mm = j.value("alpha_mm", m.alpha_mm);
  m.void_threshold_percent = j.value("void_threshold_percent", m.void_threshold_percent);
  m.void_period_mm = j.value("void_period_mm", m.void_period_mm);
  m.void_gain = j.value("void_gain", m.void_gain);
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("morphology: ") + e.what());
  }
  return m;
}

std::vector<double> layer_profile(const VoxelGrid& reference, const LayerProfile& profile) {
  const int nz = reference.meta().dims[2];
  std::vector<double> out(static_cast<std::size_t>(nz), profile.base_phi);
  if (profile.top_fraction <= 0.0) return out;
  int lo = nz, hi = -1;
  for (int k = 0; k < nz; ++k) {
    const Image2D s = slice_z(reference, k);
    if (std::any_of(s.pixels.begin(), s.pixels.end(), [](double v) { return v != 0.0; })) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
  }
  if (hi < 0) return out;
  const int span = hi - lo + 1;
  const int top = static_cast<int>(std::ceil(profile.top_fraction * span - 1e-9));
  for (int k = hi - top + 1; k < nz; ++k) out[static_cast<std::size_t>(k)] = profile.top_phi;
  return out;
}

RunConfig::RunConfig() {
  grid.dims = {48, 48, 48};
  grid.voxel_size_mm = {0.2, 0.2, 0.2};
  train.epochs = 20;
  weight_phis = default_weight_phis();
  candidates = default_candidates();
}

namespace {

Dims3 dims_from_json(const nlohmann::json& j, const char* what) {
  auto d = j.get<Dims3>();
  for (int v : d)
    if (v < 1) throw ConfigError(std::string(what) + ": dims must be >= 1");
  return d;
}

std::string describe_parse_error(const std::string& text, const nlohmann::json::parse_error& e) {
  const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
  int line = 1, col = 1;
  for (std::size_t i = 0; i < pos; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "config is not valid JSON (line " + std::to_string(line) + ", column " + std::to_string(col) + ")";
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(describe_parse_error(text, e));
  }
  RunConfig c;
  try {
    reject_unknown(j,
                   {"seed", "shape", "morphology", "grid", "flow_rates", "holdout_flow_rates", "phi_range", "train",
                    "network", "precision", "reconstruct", "weight_curve", "optimize", "metrics", "register"},
                   "config");
    c.seed = j.value("seed", c.seed);
    if (j.contains("shape")) c.shape = shape_from_json(j.at("shape"));
    if (j.contains("morphology")) c.morphology = morphology_from_json(j.at("morphology"));
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      reject_unknown(g, {"dims", "voxel_size_mm", "origin_mm"}, "grid");
      if (g.contains("dims")) c.grid.dims = dims_from_json(g.at("dims"), "grid");
      c.grid.voxel_size_mm = g.value("voxel_size_mm", c.grid.voxel_size_mm);
      c.grid.origin_mm = g.value("origin_mm", c.grid.origin_mm);
      try {
        c.grid.validate();
      } catch (const InvariantError& e) {
        throw ConfigError(std::string("grid: ") + e.what());
      }
    }
    c.flow_rates = j.value("flow_rates", c.flow_rates);
    if (c.flow_rates.empty()) throw ConfigError("flow_rates must not be empty");
    c.holdout_flow_rates = j.value("holdout_flow_rates", c.holdout_flow_rates);
    if (j.contains("phi_range")) {
      auto r = j.at("phi_range").get<std::array<double, 2>>();
      c.phi_min = r[0];
      c.phi_max = r[1];
      if (!(c.phi_max > c.phi_min)) throw ConfigError("phi_range: max must exceed min");
    }
    if (j.contains("train")) {
      reject_unknown(j.at("train"),
                     {"epochs", "batch_size", "proxies_per_step", "lambda", "lr", "step_max_initial", "final_ratio",
                      "seed", "mode", "resample_proxies"},
                     "train");
      nlohmann::json t = j.at("train");
      if (!t.contains("seed")) t["seed"] = c.seed;
      c.train = train_config_from_json(t);
    } else {
      c.train.seed = c.seed;
    }
    if (j.contains("network")) {
      reject_unknown(j.at("network"),
                     {"hidden_layers", "hidden_width", "omega_first", "omega_hidden", "in_dim", "out_dim"}, "network");
      c.network = siren_config_from_json(j.at("network"));
    }
    c.network.final_activation = activation_for(c.train.mode);
    if (j.contains("precision")) {
      const auto p = j.at("precision").get<std::string>();
      if (p == "f32") {
        c.precision = Precision::F32;
      } else if (p == "f64") {
        c.precision = Precision::F64;
      } else {
        throw ConfigError("precision must be f32 or f64");
      }
    }
    if (j.contains("reconstruct")) {
      const auto& r = j.at("reconstruct");
      reject_unknown(r, {"phi_percent", "dims"}, "reconstruct");
      c.recon_phi = r.value("phi_percent", c.recon_phi);
      if (r.contains("dims")) c.recon_dims = dims_from_json(r.at("dims"), "reconstruct");
    }
    if (j.contains("weight_curve")) {
      const auto& w = j.at("weight_curve");
      reject_unknown(w, {"dims", "phis", "density_g_per_cm3"}, "weight_curve");
      if (w.contains("dims")) c.weight_dims = dims_from_json(w.at("dims"), "weight_curve");
      c.weight_phis = w.value("phis", c.weight_phis);
      c.weight.density_g_per_cm3 = w.value("density_g_per_cm3", c.weight.density_g_per_cm3);
      if (c.weight_phis.empty()) throw ConfigError("weight_curve.phis must not be empty");
    }
    if (j.contains("optimize")) {
      const auto& o = j.at("optimize");
      reject_unknown(o, {"candidates", "profile"}, "optimize");
      if (o.contains("candidates") && o.at("candidates").is_array()) {
        c.candidates = o.at("candidates").get<std::vector<double>>();
        if (c.candidates.empty()) throw ConfigError("optimize.candidates must not be empty");
      } else if (o.contains("candidates")) {
        const auto& cr = o.at("candidates");
        reject_unknown(cr, {"min", "max", "step"}, "optimize.candidates");
        const double lo = cr.value("min", 45.0), hi = cr.value("max", 280.0), step = cr.value("step", 1.0);
        if (!(step > 0.0) || hi < lo) throw ConfigError("optimize.candidates: need step > 0 and max >= min");
        c.candidates.clear();
        for (int i = 0; lo + i * step <= hi + 1e-9; ++i) c.candidates.push_back(lo + i * step);
      }
      if (o.contains("profile")) {
        const auto& p = o.at("profile");
        reject_unknown(p, {"top_fraction", "top_phi", "base_phi"}, "optimize.profile");
        c.profile.top_fraction = p.value("top_fraction", c.profile.top_fraction);
        c.profile.top_phi = p.value("top_phi", c.profile.top_phi);
        c.profile.base_phi = p.value("base_phi", c.profile.base_phi);
        if (c.profile.top_fraction < 0.0 || c.profile.top_fraction > 1.0)
          throw ConfigError("optimize.profile.top_fraction must be in [0, 1]");
      }
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      reject_unknown(m, {"ssim_window", "ssim_sigma"}, "metrics");
      c.ssim.window = m.value("ssim_window", c.ssim.window);
      c.ssim.sigma = m.value("ssim_sigma", c.ssim.sigma);
      c.ssim.validate();
    }
    if (j.contains("register")) {
      const auto& r = j.at("register");
      reject_unknown(r, {"max_iter", "tol", "outlier_w", "points"}, "register");
      c.cpd.max_iter = r.value("max_iter", c.cpd.max_iter);
      c.cpd.tol = r.value("tol", c.cpd.tol);
      c.cpd.outlier_w = r.value("outlier_w", c.cpd.outlier_w);
      c.register_points = r.value("points", c.register_points);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

namespace {

// Range form when the candidates are evenly spaced and it regenerates them
// exactly, else the explicit list.
nlohmann::json candidates_json(const std::vector<double>& c) {
  if (c.size() >= 2) {
    const double step = c[1] - c[0];
    std::vector<double> regen;
    for (int i = 0; c[0] + i * step <= c.back() + 1e-9 && step > 0.0; ++i) regen.push_back(c[0] + i * step);
    if (regen == c) return {{"min", c.front()}, {"max", c.back()}, {"step", step}};
  }
  return c;
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["shape"] = to_json(c.shape);
  j["morphology"] = to_json(c.morphology);
  j["grid"] = {{"dims", c.grid.dims}, {"voxel_size_mm", c.grid.voxel_size_mm}, {"origin_mm", c.grid.origin_mm}};
  j["flow_rates"] = c.flow_rates;
  j["holdout_flow_rates"] = c.holdout_flow_rates;
  j["phi_range"] = {c.phi_min, c.phi_max};
  j["train"] = to_json(c.train);
  nlohmann::json net = to_json(c.network);
  net.erase("final_activation");
  j["network"] = net;
  j["precision"] = c.precision == Precision::F32 ? "f32" : "f64";
  j["reconstruct"] = {{"phi_percent", c.recon_phi}};
  if (c.recon_dims) j["reconstruct"]["dims"] = *c.recon_dims;
  j["weight_curve"] = {{"phis", c.weight_phis}, {"density_g_per_cm3", c.weight.density_g_per_cm3}};
  if (c.weight_dims) j["weight_curve"]["dims"] = *c.weight_dims;
  j["optimize"] = {{"candidates", candidates_json(c.candidates)},
                   {"profile",
                    {{"top_fraction", c.profile.top_fraction},
                     {"top_phi", c.profile.top_phi},
                     {"base_phi", c.profile.base_phi}}}};
  j["metrics"] = {{"ssim_window", c.ssim.window}, {"ssim_sigma", c.ssim.sigma}};
  j["register"] = {
      {"max_iter", c.cpd.max_iter}, {"tol", c.cpd.tol}, {"outlier_w", c.cpd.outlier_w}, {"points", c.register_points}};
  return j;
}

}  // namespace fieldforge
