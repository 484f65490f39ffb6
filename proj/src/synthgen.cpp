#include "fieldforge/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "binio.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"

namespace fieldforge {
namespace {

using std::numbers::pi;

struct Vec2 {
  double x, y;
};

double length2(double x, double y) { return std::sqrt(x * x + y * y); }

// Combines a 2D cross-section distance with a slab |z| <= half_h.
double extrude(double d2, double z, double half_h) {
  const double wx = d2;
  const double wy = std::abs(z) - half_h;
  return std::min(std::max(wx, wy), 0.0) + length2(std::max(wx, 0.0), std::max(wy, 0.0));
}

double cylinder_sdf(const Vec3& p, double r, double half_h) {
  return extrude(length2(p[0], p[1]) - r, p[2], half_h);
}

double hex_prism_sdf(const Vec3& p, double circumradius, double half_h) {
  const double kx = -0.8660254037844386, ky = 0.5, kz = 0.5773502691896258;
  const double apothem = circumradius * 0.8660254037844386;
  double px = std::abs(p[0]), py = std::abs(p[1]);
  const double dot = std::min(kx * px + ky * py, 0.0);
  px -= 2.0 * dot * kx;
  py -= 2.0 * dot * ky;
  const double cx = std::clamp(px, -kz * apothem, kz * apothem);
  const double d2 = length2(px - cx, py - apothem) * (py - apothem < 0.0 ? -1.0 : 1.0);
  return extrude(d2, p[2], half_h);
}

double capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  Vec3 pa{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  Vec3 ba{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double h = std::clamp((pa[0] * ba[0] + pa[1] * ba[1] + pa[2] * ba[2]) /
                                  (ba[0] * ba[0] + ba[1] * ba[1] + ba[2] * ba[2]),
                              0.0, 1.0);
  const double dx = pa[0] - ba[0] * h, dy = pa[1] - ba[1] * h, dz = pa[2] - ba[2] * h;
  return std::sqrt(dx * dx + dy * dy + dz * dz) - r;
}

std::vector<Vec2> gear_outline(const GearDisk& g) {
  std::vector<Vec2> v;
  const double pitch = 2.0 * pi / g.n_teeth;
  const double root = g.r_mm - g.tooth_depth;
  const double fractions[4] = {0.0, 0.15, 0.45, 0.6};
  const double radii[4] = {root, g.r_mm, g.r_mm, root};
  for (int t = 0; t < g.n_teeth; ++t) {
    for (int c = 0; c < 4; ++c) {
      const double a = (t + fractions[c]) * pitch;
      v.push_back({radii[c] * std::cos(a), radii[c] * std::sin(a)});
    }
  }
  return v;
}

// Exact signed distance to a simple polygon, negative inside.
double polygon_sdf(const std::vector<Vec2>& v, double px, double py) {
  double d = (px - v[0].x) * (px - v[0].x) + (py - v[0].y) * (py - v[0].y);
  double s = 1.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i, ++i) {
    const double ex = v[j].x - v[i].x, ey = v[j].y - v[i].y;
    const double wx = px - v[i].x, wy = py - v[i].y;
    const double t = std::clamp((wx * ex + wy * ey) / (ex * ex + ey * ey), 0.0, 1.0);
    const double bx = wx - ex * t, by = wy - ey * t;
    d = std::min(d, bx * bx + by * by);
    const bool c0 = py >= v[i].y, c1 = py < v[j].y, c2 = ex * wy > ey * wx;
    if ((c0 && c1 && c2) || (!c0 && !c1 && !c2)) s = -s;
  }
  return s * std::sqrt(d);
}

struct BunnyLayout {
  Vec3 body_center;
  Vec3 ear_base[2];
  Vec3 ear_tip[2];
  LocalBox box;
};

BunnyLayout bunny_layout(const BunnyProxy& b) {
  // Raw frame: body at the origin, ears rooted in the upper half of the body.
  const double ear_x = 0.45 * b.body_r;
  const double ear_z0 = 0.45 * b.body_r;
  const double half_x = std::max(b.body_r, ear_x + b.ear_r);
  const double z_lo = -b.body_r;
  const double z_hi = std::max(b.body_r, ear_z0 + b.ear_h + b.ear_r);
  const double zc = 0.5 * (z_lo + z_hi);
  BunnyLayout out;
  out.body_center = {0.0, 0.0, -zc};
  for (int s = 0; s < 2; ++s) {
    const double x = s == 0 ? -ear_x : ear_x;
    out.ear_base[s] = {x, 0.0, ear_z0 - zc};
    out.ear_tip[s] = {x, 0.0, ear_z0 + b.ear_h - zc};
  }
  const double half_z = 0.5 * (z_hi - z_lo);
  out.box = {{-half_x, -b.body_r, -half_z}, {half_x, b.body_r, half_z}};
  return out;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvariantError(std::string("shape dimension must be positive: ") + what);
}

}  // namespace

std::string ShapeSpec::name() const {
  struct {
    std::string operator()(const Sphere&) const { return "sphere"; }
    std::string operator()(const Cylinder&) const { return "cylinder"; }
    std::string operator()(const HexBolt&) const { return "hex_bolt"; }
    std::string operator()(const GearDisk&) const { return "gear_disk"; }
    std::string operator()(const BunnyProxy&) const { return "bunny_proxy"; }
  } visitor;
  return std::visit(visitor, base);
}

void ShapeSpec::validate() const {
  if (const auto* s = std::get_if<Sphere>(&base)) {
    require_positive(s->r_mm, "r_mm");
  } else if (const auto* c = std::get_if<Cylinder>(&base)) {
    require_positive(c->r_mm, "r_mm");
    require_positive(c->h_mm, "h_mm");
  } else if (const auto* h = std::get_if<HexBolt>(&base)) {
    require_positive(h->head_r, "head_r");
    require_positive(h->head_h, "head_h");
    require_positive(h->shaft_r, "shaft_r");
    require_positive(h->shaft_h, "shaft_h");
  } else if (const auto* g = std::get_if<GearDisk>(&base)) {
    require_positive(g->r_mm, "r_mm");
    require_positive(g->h_mm, "h_mm");
    require_positive(g->tooth_depth, "tooth_depth");
    if (g->n_teeth < 3) throw InvariantError("gear needs at least 3 teeth");
    if (g->tooth_depth >= g->r_mm) throw InvariantError("tooth depth must be smaller than the gear radius");
  } else if (const auto* b = std::get_if<BunnyProxy>(&base)) {
    require_positive(b->body_r, "body_r");
    require_positive(b->ear_r, "ear_r");
    require_positive(b->ear_h, "ear_h");
  }
}

void MorphologyModel::validate() const {
  if (!(void_period_mm > 0.0)) throw InvariantError("void_period_mm must be positive");
  if (!(alpha_mm >= 0.0)) throw InvariantError("alpha_mm must be >= 0");
  if (!(void_gain >= 0.0)) throw InvariantError("void_gain must be >= 0");
}

LocalBox shape_bounds(const ShapeSpec& spec) {
  if (const auto* s = std::get_if<Sphere>(&spec.base)) {
    return {{-s->r_mm, -s->r_mm, -s->r_mm}, {s->r_mm, s->r_mm, s->r_mm}};
  }
  if (const auto* c = std::get_if<Cylinder>(&spec.base)) {
    return {{-c->r_mm, -c->r_mm, -0.5 * c->h_mm}, {c->r_mm, c->r_mm, 0.5 * c->h_mm}};
  }
  if (const auto* h = std::get_if<HexBolt>(&spec.base)) {
    const double r = std::max(h->head_r, h->shaft_r);
    const double hz = 0.5 * (h->head_h + h->shaft_h);
    return {{-r, -r, -hz}, {r, r, hz}};
  }
  if (const auto* g = std::get_if<GearDisk>(&spec.base)) {
    return {{-g->r_mm, -g->r_mm, -0.5 * g->h_mm}, {g->r_mm, g->r_mm, 0.5 * g->h_mm}};
  }
  return bunny_layout(std::get<BunnyProxy>(spec.base)).box;
}

double base_sdf(const ShapeSpec& spec, const Vec3& p) {
  if (const auto* s = std::get_if<Sphere>(&spec.base)) {
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) - s->r_mm;
  }
  if (const auto* c = std::get_if<Cylinder>(&spec.base)) {
    return cylinder_sdf(p, c->r_mm, 0.5 * c->h_mm);
  }
  if (const auto* h = std::get_if<HexBolt>(&spec.base)) {
    const double total = h->head_h + h->shaft_h;
    const double head_mid = -0.5 * total + 0.5 * h->head_h;
    const double shaft_mid = 0.5 * total - 0.5 * h->shaft_h;
    const double head = hex_prism_sdf({p[0], p[1], p[2] - head_mid}, h->head_r, 0.5 * h->head_h);
    const double shaft = cylinder_sdf({p[0], p[1], p[2] - shaft_mid}, h->shaft_r, 0.5 * h->shaft_h);
    return std::min(head, shaft);
  }
  if (const auto* g = std::get_if<GearDisk>(&spec.base)) {
    return extrude(polygon_sdf(gear_outline(*g), p[0], p[1]), p[2], 0.5 * g->h_mm);
  }
  const auto& b = std::get<BunnyProxy>(spec.base);
  const BunnyLayout lay = bunny_layout(b);
  const double dx = p[0] - lay.body_center[0], dy = p[1] - lay.body_center[1], dz = p[2] - lay.body_center[2];
  double d = std::sqrt(dx * dx + dy * dy + dz * dz) - b.body_r;
  for (int s = 0; s < 2; ++s) d = std::min(d, capsule_sdf(p, lay.ear_base[s], lay.ear_tip[s], b.ear_r));
  return d;
}

double oracle_sdf(const ShapeSpec& spec, const MorphologyModel& model, const Vec3& p, double phi) {
  double d = base_sdf(spec, p) - model.alpha_mm * (phi - 100.0) / 100.0;
  if (phi < model.void_threshold_percent) {
    const double period = model.void_period_mm;
    const double wave = std::sin(2.0 * pi * p[0] / period) * std::sin(2.0 * pi * p[1] / period);
    const double hatch = period / (2.0 * pi) * (1.0 + wave) / 2.0;
    d = std::max(d, model.void_gain * (model.void_threshold_percent - phi) / 100.0 - hatch);
  }
  return d;
}

Vec3 grid_to_local(const GridMeta& meta, const Vec3& physical) {
  Vec3 out;
  for (int a = 0; a < 3; ++a)
    out[a] = physical[a] - (meta.origin_mm[a] + 0.5 * meta.dims[a] * meta.voxel_size_mm[a]);
  return out;
}

VoxelGrid generate_volume(const ShapeSpec& spec, const MorphologyModel& model, const GridMeta& meta, double phi) {
  spec.validate();
  model.validate();
  if (meta.kind != GridKind::Occupancy) throw InputError("generate_volume needs an occupancy grid meta");
  if (!(phi >= 0.0)) throw InputError("flow rate must be >= 0");

  const LocalBox box = shape_bounds(spec);
  const double grow = std::max(0.0, model.alpha_mm * (phi - 100.0) / 100.0);
  for (int a = 0; a < 3; ++a) {
    const double half_extent = 0.5 * meta.dims[a] * meta.voxel_size_mm[a];
    const double limit = half_extent - 2.0 * meta.voxel_size_mm[a];
    if (box.hi[a] + grow > limit || -(box.lo[a] - grow) > limit)
      throw InputError("shape exceeds grid bounds (needs a 2-voxel margin) at flow rate " + format_number(phi));
  }

  GridMeta out_meta = meta;
  out_meta.flow_rate_percent = phi;
  VoxelGrid grid(out_meta);
  auto data = grid.data();
  parallel_for(static_cast<std::size_t>(meta.dims[2]), [&](std::size_t k) {
    for (int j = 0; j < meta.dims[1]; ++j)
      for (int i = 0; i < meta.dims[0]; ++i) {
        const Vec3 p = grid_to_local(meta, meta.voxel_center(i, j, static_cast<int>(k)));
        data[meta.index(i, j, static_cast<int>(k))] = oracle_sdf(spec, model, p, phi) <= 0.0 ? 1.0f : 0.0f;
      }
  });
  return grid;
}

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Manifest generate_dataset(const ShapeSpec& spec, const MorphologyModel& model, const GridMeta& meta,
                          const std::vector<double>& phis, const std::filesystem::path& out_dir) {
  if (phis.empty()) throw InputError("generate_dataset needs at least one flow rate");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.shape = spec.name();
  for (double phi : phis) {
    const VoxelGrid grid = generate_volume(spec, model, meta, phi);
    const std::filesystem::path name = manifest.shape + "_phi" + format_number(phi) + ".vgrid";
    write_vgrid(grid, out_dir / name);
    manifest.volumes.push_back({name, phi});
  }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  nlohmann::json j;
  j["shape"] = manifest.shape;
  j["volumes"] = nlohmann::json::array();
  for (const auto& v : manifest.volumes)
    j["volumes"].push_back({{"path", v.path.generic_string()}, {"flow_rate_percent", v.flow_rate_percent}});
  binio::write_text(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    m.shape = j.at("shape").get<std::string>();
    for (const auto& v : j.at("volumes")) {
      std::filesystem::path p = v.at("path").get<std::string>();
      if (p.is_relative()) p = path.parent_path() / p;
      m.volumes.push_back({p, v.at("flow_rate_percent").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid manifest " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace fieldforge
