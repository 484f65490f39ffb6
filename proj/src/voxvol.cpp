#include "fieldforge/voxvol.hpp"

#include <cmath>
#include <string_view>

#include <json.hpp>

#include "binio.hpp"
#include "fieldforge/error.hpp"

namespace fieldforge {
namespace {

constexpr std::string_view kMagic = "VGRD";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::string to_string(GridKind kind) { return kind == GridKind::Occupancy ? "occupancy" : "sdf"; }

GridKind grid_kind_from_string(const std::string& s) {
  if (s == "occupancy") return GridKind::Occupancy;
  if (s == "sdf") return GridKind::Sdf;
  throw FormatError("unknown grid kind '" + s + "'");
}

std::size_t GridMeta::sample_count() const {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
}

void GridMeta::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw InvariantError("grid dims must be positive");
    if (!(voxel_size_mm[a] > 0.0) || !std::isfinite(voxel_size_mm[a]))
      throw InvariantError("voxel size must be strictly positive");
    if (!std::isfinite(origin_mm[a])) throw InvariantError("grid origin must be finite");
  }
  if (flow_rate_percent && !(*flow_rate_percent >= 0.0)) throw InvariantError("flow rate must be >= 0");
}

VoxelGrid::VoxelGrid(GridMeta meta) : meta_(meta) {
  meta_.validate();
  data_.assign(meta_.sample_count(), 0.0f);
}

VoxelGrid::VoxelGrid(GridMeta meta, std::vector<float> data) : meta_(meta), data_(std::move(data)) {
  meta_.validate();
  if (data_.size() != meta_.sample_count()) throw InvariantError("sample count does not match grid dims");
  validate();
}

std::size_t VoxelGrid::count_occupied() const {
  std::size_t n = 0;
  for (float v : data_) n += (v != 0.0f);
  return n;
}

void VoxelGrid::validate() const {
  meta_.validate();
  if (data_.size() != meta_.sample_count()) throw InvariantError("sample count does not match grid dims");
  if (meta_.kind == GridKind::Occupancy) {
    for (float v : data_)
      if (v != 0.0f && v != 1.0f) throw InvariantError("occupancy grid holds a value other than 0 or 1");
  } else {
    for (float v : data_)
      if (!std::isfinite(v)) throw InvariantError("sdf grid holds a non-finite value");
  }
}

VoxelGrid threshold(const VoxelGrid& grid, double iso, ThresholdMode mode) {
  GridMeta meta = grid.meta();
  meta.kind = GridKind::Occupancy;
  std::vector<float> out(grid.size());
  auto in = grid.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool inside = mode == ThresholdMode::AtLeast ? in[i] >= iso : in[i] <= iso;
    out[i] = inside ? 1.0f : 0.0f;
  }
  return VoxelGrid(meta, std::move(out));
}

VoxelGrid threshold(const VoxelGrid& grid, double iso) {
  return threshold(grid, iso, grid.meta().kind == GridKind::Sdf ? ThresholdMode::AtMost : ThresholdMode::AtLeast);
}

double digital_weight(const VoxelGrid& grid, const WeightParams& params) {
  if (grid.meta().kind != GridKind::Occupancy) throw InputError("digital weight needs an occupancy grid");
  if (!(params.density_g_per_cm3 > 0.0)) throw InvariantError("density must be positive");
  const auto& v = grid.meta().voxel_size_mm;
  const double voxel_cm3 = v[0] * v[1] * v[2] / 1000.0;
  return static_cast<double>(grid.count_occupied()) * voxel_cm3 * params.density_g_per_cm3;
}

std::vector<std::uint8_t> encode_vgrid(const VoxelGrid& grid) {
  grid.validate();
  const auto& m = grid.meta();
  const bool occupancy = m.kind == GridKind::Occupancy;
  nlohmann::json header = {
      {"dims", {m.dims[0], m.dims[1], m.dims[2]}},
      {"voxel_size_mm", {m.voxel_size_mm[0], m.voxel_size_mm[1], m.voxel_size_mm[2]}},
      {"origin_mm", {m.origin_mm[0], m.origin_mm[1], m.origin_mm[2]}},
      {"dtype", occupancy ? "u8" : "f32"},
      {"kind", to_string(m.kind)},
      {"flow_rate_percent", m.flow_rate_percent ? nlohmann::json(*m.flow_rate_percent) : nlohmann::json(nullptr)},
  };
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(12 + text.size() + grid.size() * (occupancy ? 1 : 4));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  binio::append_le<std::uint32_t>(out, kVersion);
  binio::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  if (occupancy) {
    for (float v : grid.data()) out.push_back(static_cast<std::uint8_t>(v));
  } else {
    for (float v : grid.data()) binio::append_le<float>(out, v);
  }
  return out;
}

VoxelGrid decode_vgrid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw FormatError("not a VGRID file (bad magic)");
  const auto version = binio::read_le<std::uint32_t>(bytes, 4);
  if (version != kVersion) throw FormatError("unsupported VGRID version " + std::to_string(version));
  const auto header_len = binio::read_le<std::uint32_t>(bytes, 8);
  if (header_len > bytes.size() - 12) throw FormatError("corrupt VGRID header length");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt VGRID header: ") + e.what());
  }

  GridMeta meta;
  std::string dtype;
  try {
    for (int a = 0; a < 3; ++a) {
      meta.dims[a] = header.at("dims").at(a).get<int>();
      meta.voxel_size_mm[a] = header.at("voxel_size_mm").at(a).get<double>();
      meta.origin_mm[a] = header.at("origin_mm").at(a).get<double>();
    }
    dtype = header.at("dtype").get<std::string>();
    meta.kind = grid_kind_from_string(header.at("kind").get<std::string>());
    const auto& flow = header.at("flow_rate_percent");
    if (!flow.is_null()) meta.flow_rate_percent = flow.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt VGRID header: ") + e.what());
  }
  try {
    meta.validate();
  } catch (const InvariantError& e) {
    throw FormatError(std::string("corrupt VGRID header: ") + e.what());
  }

  std::size_t sample_bytes;
  if (dtype == "u8") {
    sample_bytes = 1;
  } else if (dtype == "f32") {
    sample_bytes = 4;
  } else {
    throw FormatError("unknown VGRID dtype '" + dtype + "'");
  }

  const std::size_t payload_offset = 12 + header_len;
  const std::size_t payload = bytes.size() - payload_offset;
  const std::size_t expected = meta.sample_count();
  if (payload != expected * sample_bytes) {
    throw FormatError("VGRID dims/payload mismatch: header implies " + std::to_string(expected) +
                      " samples, payload holds " + std::to_string(payload / sample_bytes));
  }

  std::vector<float> data(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    data[i] = sample_bytes == 1 ? static_cast<float>(bytes[payload_offset + i])
                                : binio::read_le<float>(bytes, payload_offset + 4 * i);
  }
  try {
    return VoxelGrid(meta, std::move(data));
  } catch (const InvariantError& e) {
    throw FormatError(std::string("invalid VGRID payload: ") + e.what());
  }
}

void write_vgrid(const VoxelGrid& grid, const std::filesystem::path& path) {
  binio::write_file(path, encode_vgrid(grid));
}

VoxelGrid read_vgrid(const std::filesystem::path& path) { return decode_vgrid(binio::read_file(path)); }

}  // namespace fieldforge
