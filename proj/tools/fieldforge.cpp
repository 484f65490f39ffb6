#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <string>

#include "fieldforge/error.hpp"
#include "fieldforge/fidelity.hpp"
#include "fieldforge/flowopt.hpp"
#include "fieldforge/neuralfield.hpp"
#include "fieldforge/parallel.hpp"
#include "fieldforge/random.hpp"
#include "fieldforge/recon.hpp"
#include "fieldforge/regalign.hpp"
#include "fieldforge/runconfig.hpp"
#include "fieldforge/sampler.hpp"
#include "fieldforge/sdfconv.hpp"
#include "fieldforge/synthgen.hpp"
#include "fieldforge/trainer.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace fieldforge;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kNumeric = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;
};

RunConfig load_config(const Common& c) {
  RunConfig rc = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (c.seed) {
    rc.seed = *c.seed;
    rc.train.seed = *c.seed;
  }
  return rc;
}

fs::path prepare_out(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
  return c.out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

struct LoadedModel {
  AnySirenNet net;
  DomainBounds bounds;
  FieldMode mode = FieldMode::Occupancy;
  Dims3 grid_dims{0, 0, 0};
};

LoadedModel load_model(const std::string& path) {
  nlohmann::json extra;
  LoadedModel m{load_checkpoint(path, &extra), {}, {}, {}};
  try {
    m.bounds = domain_bounds_from_json(extra.at("bounds"));
    m.mode = field_mode_from_string(extra.at("mode").get<std::string>());
    m.grid_dims = extra.at("grid_dims").get<Dims3>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint lacks training metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  return m;
}

std::string phi_tag(double phi) { return "phi" + format_number(phi); }

// generate ---------------------------------------------------------------

int cmd_generate(const Common& common) {
  const RunConfig rc = load_config(common);
  const fs::path out = prepare_out(common);
  std::vector<double> phis = rc.flow_rates;
  for (double p : rc.holdout_flow_rates)
    if (std::find(phis.begin(), phis.end(), p) == phis.end()) phis.push_back(p);
  GridMeta meta = rc.grid;
  meta.kind = GridKind::Occupancy;
  generate_dataset(rc.shape, rc.morphology, meta, phis, out);
  write_json(out / "config.json", to_json(rc));
  std::cout << (out / "manifest.json").string() << "\n";
  return kOk;
}

// train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::optional<double> lambda;
  std::optional<std::string> mode;
  std::optional<int> epochs;
};

template <typename T>
int run_training(const RunConfig& rc, const PointSet5D& ps, const GridMeta& meta, const fs::path& out) {
  const auto result = train<T>(ps, rc.train, rc.network, [](std::size_t step, std::size_t total, const LossBreakdown& lb) {
    if (step % 20 == 0 || step + 1 == total)
      std::cerr << "step " << step + 1 << "/" << total << "  mse " << lb.mse << "  gdir " << lb.gdir << "\n";
  });
  nlohmann::json extra = {{"bounds", to_json(ps.bounds)},
                          {"mode", to_string(rc.train.mode)},
                          {"grid_dims", meta.dims},
                          {"train", to_json(rc.train)}};
  const fs::path ckpt = out / "model.srnc";
  save_checkpoint(result.net, ckpt, extra);
  TrainReport report = result.report;
  report.checkpoint_path = ckpt.filename().string();
  nlohmann::json j = report.to_json();
  j["config"] = to_json(rc);
  write_json(out / "train_report.json", j);
  write_json(out / "timing.json", report.timing_json());
  write_text(out / "loss_history.csv", report.history_csv());
  std::cout << (out / "train_report.json").string() << "\n";
  if (report.diverged) {
    std::cerr << "training diverged: " << report.divergence_reason << " (last good parameters saved)\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_train(const Common& common, const TrainArgs& args) {
  RunConfig rc = load_config(common);
  if (args.lambda) rc.train.lambda = *args.lambda;
  if (args.mode) rc.train.mode = field_mode_from_string(*args.mode);
  if (args.epochs) rc.train.epochs = *args.epochs;
  rc.train.validate();
  rc.network.final_activation = activation_for(rc.train.mode);
  const fs::path out = prepare_out(common);

  const Manifest manifest = read_manifest(args.manifest);
  const std::set<double> holdout(rc.holdout_flow_rates.begin(), rc.holdout_flow_rates.end());
  std::vector<VoxelGrid> volumes;
  for (const auto& v : manifest.volumes) {
    if (holdout.count(v.flow_rate_percent)) continue;
    VoxelGrid g = read_vgrid(v.path);
    if (rc.train.mode == FieldMode::Sdf) {
      const auto phi = g.meta().flow_rate_percent;
      g = normalize_sdf(occupancy_to_sdf(g));
      g.meta().flow_rate_percent = phi;
    }
    volumes.push_back(std::move(g));
  }
  if (volumes.empty()) throw ConfigError("no training volumes left after removing held-out flow rates");
  const GridMeta meta = volumes.front().meta();
  const PointSet5D ps = flatten(volumes, DomainBounds::from_grid(meta, rc.phi_min, rc.phi_max));
  return rc.precision == Precision::F32 ? run_training<float>(rc, ps, meta, out)
                                         : run_training<double>(rc, ps, meta, out);
}

// reconstruct ------------------------------------------------------------

struct ModelArgs {
  std::string checkpoint;
  std::optional<double> phi;
  std::vector<int> dims;
};

Dims3 pick_dims(const std::vector<int>& cli, const std::optional<Dims3>& config, const Dims3& fallback) {
  if (!cli.empty()) {
    if (cli.size() != 3) throw ConfigError("--dims takes three values");
    return {cli[0], cli[1], cli[2]};
  }
  return config.value_or(fallback);
}

int cmd_reconstruct(const Common& common, const ModelArgs& args) {
  const RunConfig rc = load_config(common);
  const LoadedModel model = load_model(args.checkpoint);
  const fs::path out = prepare_out(common);
  ReconRequest req;
  req.phi_percent = args.phi.value_or(rc.recon_phi);
  req.dims = pick_dims(args.dims, rc.recon_dims, model.grid_dims);
  req.bounds = model.bounds;
  const Reconstruction rec = std::visit([&](const auto& net) { return reconstruct(net, req); }, model.net);
  if (rec.extrapolated)
    std::cerr << "warning: flow rate " << format_number(req.phi_percent) << " lies outside the training range ["
              << format_number(req.bounds.phi_min) << ", " << format_number(req.bounds.phi_max) << "]\n";
  const std::string tag = phi_tag(req.phi_percent);
  write_vgrid(rec.occupancy, out / ("recon_" + tag + ".vgrid"));
  write_vgrid(rec.field, out / ("field_" + tag + ".vgrid"));
  const int mid = req.dims[2] / 2;
  const double lo = model.mode == FieldMode::Occupancy ? 0.0 : -1.0;
  write_pgm(slice_z(rec.field, mid), out / ("slice_" + tag + "_z" + std::to_string(mid) + ".pgm"), lo, 1.0);
  std::cout << (out / ("recon_" + tag + ".vgrid")).string() << "\n";
  return kOk;
}

// evaluate ---------------------------------------------------------------

int cmd_evaluate(const Common& common, const std::string& a_path, const std::string& b_path) {
  const RunConfig rc = load_config(common);
  const fs::path out = prepare_out(common);
  const VoxelGrid a = read_vgrid(a_path);
  const VoxelGrid b = read_vgrid(b_path);
  const MetricReport r = compare(a, b, rc.ssim);
  nlohmann::json j = r.to_json();
  j["volume_a"] = fs::path(a_path).filename().string();
  j["volume_b"] = fs::path(b_path).filename().string();
  write_json(out / "metrics.json", j);
  write_text(out / "metrics.csv", MetricReport::csv_header() + "\n" +
                                      r.csv_row(fs::path(a_path).filename().string(), fs::path(b_path).filename().string()) +
                                      "\n");
  std::cout << "l1 " << r.l1 << "  ssim " << r.ssim_mean << " +- " << r.ssim_std << "\n";
  return kOk;
}

// weight-curve -----------------------------------------------------------

int cmd_weight_curve(const Common& common, const ModelArgs& args) {
  const RunConfig rc = load_config(common);
  const LoadedModel model = load_model(args.checkpoint);
  const fs::path out = prepare_out(common);
  const Dims3 half{std::max(2, model.grid_dims[0] / 2), std::max(2, model.grid_dims[1] / 2),
                   std::max(2, model.grid_dims[2] / 2)};
  const Dims3 dims = pick_dims(args.dims, rc.weight_dims, half);
  const auto curve = std::visit(
      [&](const auto& net) { return weight_curve(net, model.bounds, dims, rc.weight_phis, rc.weight); }, model.net);

  std::string csv = "phi_percent,weight_g\n";
  std::vector<double> in_phi, in_w;
  svg::Series series{"digital weight", {}};
  for (auto [phi, g] : curve) {
    csv += format_number(phi) + "," + format_number(g) + "\n";
    series.points.emplace_back(phi, g);
    if (phi >= model.bounds.phi_min && phi <= model.bounds.phi_max) {
      in_phi.push_back(phi);
      in_w.push_back(g);
    }
  }
  write_text(out / "weight_curve.csv", csv);
  write_text(out / "weight_curve.svg", svg::line_plot({series}, "Digital weight vs flow rate", "flow rate (%)", "weight (g)"));
  nlohmann::json j = {{"dims", dims}, {"points", curve.size()}};
  if (in_phi.size() >= 2) j["spearman_in_range"] = spearman(in_phi, in_w);
  write_json(out / "weight_curve.json", j);
  std::cout << (out / "weight_curve.csv").string() << "\n";
  return kOk;
}

// optimize ---------------------------------------------------------------

int cmd_optimize(const Common& common, const ModelArgs& args) {
  const RunConfig rc = load_config(common);
  const LoadedModel model = load_model(args.checkpoint);
  const fs::path out = prepare_out(common);
  GridMeta meta = rc.grid;
  meta.kind = GridKind::Occupancy;
  if (meta.dims != model.grid_dims) throw ConfigError("config grid does not match the checkpoint's training grid");
  const VoxelGrid reference = generate_volume(rc.shape, rc.morphology, meta, 100.0);
  const auto expected = expected_layers(rc.shape, meta, rc.morphology, layer_profile(reference, rc.profile));
  const auto [schedule, grid] = std::visit(
      [&](const auto& net) { return optimize_schedule(net, expected, rc.candidates, model.bounds, meta.dims); },
      model.net);
  export_schedule(schedule, out / "schedule.csv", out / "schedule.gcode");
  write_text(out / "fitness_grid.csv", grid.to_csv());
  std::vector<int> marker;
  for (const auto& e : schedule.entries) {
    const auto it = std::find(rc.candidates.begin(), rc.candidates.end(), e.phi_percent);
    marker.push_back(it == rc.candidates.end() ? -1 : static_cast<int>(it - rc.candidates.begin()));
  }
  write_text(out / "fitness_landscape.svg",
             svg::heatmap(grid.values, static_cast<int>(grid.layers.size()), static_cast<int>(grid.candidates.size()),
                          "Fitness landscape", "flow rate (%)", "layer", rc.candidates.front(), rc.candidates.back(),
                          marker));
  std::cout << (out / "schedule.csv").string() << "\n";
  return kOk;
}

// register ---------------------------------------------------------------

int cmd_register(const Common& common, const std::string& source_path, const std::string& target_path) {
  const RunConfig rc = load_config(common);
  const fs::path out = prepare_out(common);
  const VoxelGrid source = read_vgrid(source_path);
  const VoxelGrid target = read_vgrid(target_path);
  const PlaneFit ps = fit_plane(extract_depth_map(source), source.meta());
  const PlaneFit pt = fit_plane(extract_depth_map(target), target.meta());
  const VoxelGrid src_level = level_volume(source, ps);
  const VoxelGrid tgt_level = level_volume(target, pt);
  const auto sp = surface_points(src_level, rc.register_points, derive_seed(rc.seed, "register-source"));
  const auto tp = surface_points(tgt_level, rc.register_points, derive_seed(rc.seed, "register-target"));
  const CpdResult cpd = cpd_rigid_z(sp, tp, rc.cpd);
  write_vgrid(transform_volume(src_level, cpd.transform), out / "registered.vgrid");
  write_vgrid(tgt_level, out / "target_leveled.vgrid");
  nlohmann::json j = {{"source_tilt_deg", tilt_angle(ps) * 180.0 / std::numbers::pi},
                      {"target_tilt_deg", tilt_angle(pt) * 180.0 / std::numbers::pi},
                      {"source_plane", {{"normal", ps.normal}, {"offset", ps.offset}, {"rms", ps.rms_residual}}},
                      {"target_plane", {{"normal", pt.normal}, {"offset", pt.offset}, {"rms", pt.rms_residual}}},
                      {"tx_mm", cpd.transform.tx},
                      {"ty_mm", cpd.transform.ty},
                      {"theta_z_deg", cpd.transform.theta_z * 180.0 / std::numbers::pi},
                      {"sigma2", cpd.sigma2},
                      {"iterations", cpd.iterations},
                      {"converged", cpd.converged}};
  write_json(out / "registration.json", j);
  std::cout << (out / "registration.json").string() << "\n";
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Root seed (overrides the config)");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads (default: FIELDFORGE_THREADS or 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fieldforge: flow-rate-conditioned neural fields for extrusion printing"};
  app.require_subcommand(1);
  Common common;
  TrainArgs train_args;
  ModelArgs model_args;
  std::string vol_a, vol_b;

  auto* gen = app.add_subcommand("generate", "Write the synthetic volume set and manifest");
  add_common(gen, common);

  auto* tr = app.add_subcommand("train", "Train a field on a manifest's volumes");
  add_common(tr, common);
  tr->add_option("--manifest", train_args.manifest, "manifest.json from generate")->required()->check(CLI::ExistingFile);
  tr->add_option("--lambda", train_args.lambda, "Interpolation penalty weight");
  tr->add_option("--mode", train_args.mode, "occupancy or sdf");
  tr->add_option("--epochs", train_args.epochs, "Epoch count");

  auto* rec = app.add_subcommand("reconstruct", "Evaluate the field on a grid at one flow rate");
  add_common(rec, common);
  rec->add_option("--checkpoint", model_args.checkpoint)->required()->check(CLI::ExistingFile);
  rec->add_option("--phi", model_args.phi, "Flow rate in percent");
  rec->add_option("--dims", model_args.dims, "Grid resolution nx ny nz")->expected(3);

  auto* ev = app.add_subcommand("evaluate", "L1 and per-slice SSIM between two volumes");
  add_common(ev, common);
  ev->add_option("--a", vol_a)->required()->check(CLI::ExistingFile);
  ev->add_option("--b", vol_b)->required()->check(CLI::ExistingFile);

  auto* wc = app.add_subcommand("weight-curve", "Digital weight over flow rates");
  add_common(wc, common);
  wc->add_option("--checkpoint", model_args.checkpoint)->required()->check(CLI::ExistingFile);
  wc->add_option("--dims", model_args.dims, "Grid resolution nx ny nz")->expected(3);

  auto* opt = app.add_subcommand("optimize", "Per-layer flow-rate schedule");
  add_common(opt, common);
  opt->add_option("--checkpoint", model_args.checkpoint)->required()->check(CLI::ExistingFile);

  auto* reg = app.add_subcommand("register", "Level and align a scanned volume to a reference");
  add_common(reg, common);
  reg->add_option("--source", vol_a)->required()->check(CLI::ExistingFile);
  reg->add_option("--target", vol_b)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (common.threads > 0) set_thread_count(common.threads);
    if (gen->parsed()) return cmd_generate(common);
    if (tr->parsed()) return cmd_train(common, train_args);
    if (rec->parsed()) return cmd_reconstruct(common, model_args);
    if (ev->parsed()) return cmd_evaluate(common, vol_a, vol_b);
    if (wc->parsed()) return cmd_weight_curve(common, model_args);
    if (opt->parsed()) return cmd_optimize(common, model_args);
    if (reg->parsed()) return cmd_register(common, vol_a, vol_b);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const InvariantError& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
