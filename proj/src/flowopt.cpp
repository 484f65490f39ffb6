#include "fieldforge/flowopt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "binio.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/parallel.hpp"
#include "fieldforge/recon.hpp"

namespace fieldforge {

bool ExpectedLayerImage::empty() const {
  return std::none_of(image.pixels.begin(), image.pixels.end(), [](double v) { return v != 0.0; });
}

std::vector<ExpectedLayerImage> expected_layers(const ShapeSpec& spec, const GridMeta& meta,
                                                const MorphologyModel& model) {
  return expected_layers(spec, meta, model, std::vector<double>(static_cast<std::size_t>(meta.dims[2]), 100.0));
}

std::vector<ExpectedLayerImage> expected_layers(const ShapeSpec& spec, const GridMeta& meta,
                                                const MorphologyModel& model,
                                                const std::vector<double>& phi_per_layer) {
  if (phi_per_layer.size() != static_cast<std::size_t>(meta.dims[2]))
    throw InputError("expected_layers: one flow rate per layer required");
  std::vector<double> distinct = phi_per_layer;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<VoxelGrid> volumes;
  for (double phi : distinct) volumes.push_back(generate_volume(spec, model, meta, phi));
  std::vector<ExpectedLayerImage> out;
  for (int k = 0; k < meta.dims[2]; ++k) {
    const auto which = std::lower_bound(distinct.begin(), distinct.end(), phi_per_layer[static_cast<std::size_t>(k)]) -
                       distinct.begin();
    out.push_back({k, slice_z(volumes[static_cast<std::size_t>(which)], k)});
  }
  return out;
}

std::string FitnessGrid::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "layer";
  for (double c : candidates) out << ',' << format_number(c);
  out << '\n';
  for (std::size_t r = 0; r < layers.size(); ++r) {
    out << layers[r];
    for (std::size_t c = 0; c < candidates.size(); ++c) out << ',' << at(r, c);
    out << '\n';
  }
  return out.str();
}

std::vector<double> default_candidates() {
  std::vector<double> c;
  for (int p = 45; p <= 280; ++p) c.push_back(p);
  return c;
}

namespace {

template <typename T>
double slice_fitness(const SirenNet<T>& net, int z_index, double phi, const Image2D& expected,
                     const DomainBounds& bounds, const Dims3& dims) {
  if (expected.width != dims[0] || expected.height != dims[1])
    throw InputError("expected layer size does not match reconstruction dims");
  const Image2D raw = evaluate_slice(net, bounds, dims, z_index, phi);
  const auto act = net.config().final_activation;
  const double iso = default_iso(act);
  const bool at_least = threshold_mode_for(act) == ThresholdMode::AtLeast;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    const bool occ = at_least ? raw.pixels[i] >= iso : raw.pixels[i] <= iso;
    if (occ != (expected.pixels[i] != 0.0)) ++mismatches;
  }
  return static_cast<double>(mismatches) / static_cast<double>(raw.pixels.size());
}

}  // namespace

template <typename T>
double fitness(const SirenNet<T>& net, int z_index, double phi, const ExpectedLayerImage& expected,
               const DomainBounds& bounds, const Dims3& dims) {
  return slice_fitness(net, z_index, phi, expected.image, bounds, dims);
}

template <typename T>
std::pair<FlowSchedule, FitnessGrid> optimize_schedule(const SirenNet<T>& net,
                                                       const std::vector<ExpectedLayerImage>& expected,
                                                       const std::vector<double>& candidates,
                                                       const DomainBounds& bounds, const Dims3& dims) {
  if (expected.empty()) throw InputError("optimize_schedule: no expected layers");
  if (candidates.empty()) throw InputError("optimize_schedule: no candidates");
  const GridMeta meta = recon_meta(dims, bounds);
  FitnessGrid grid;
  grid.candidates = candidates;
  grid.values.assign(expected.size() * candidates.size(), 0.0);
  for (const auto& e : expected) grid.layers.push_back(e.z_index);

  FlowSchedule schedule;
  schedule.candidate_min = *std::min_element(candidates.begin(), candidates.end());
  schedule.candidate_max = *std::max_element(candidates.begin(), candidates.end());
  schedule.entries.resize(expected.size());
  // Layers are independent; each work item owns one row.
  parallel_for(expected.size(), [&](std::size_t r) {
    const auto& e = expected[r];
    double* row = grid.values.data() + r * candidates.size();
    FlowScheduleEntry entry;
    entry.layer = e.z_index;
    entry.z_mm = meta.voxel_center(0, 0, e.z_index)[2];
    for (std::size_t c = 0; c < candidates.size(); ++c)
      row[c] = slice_fitness(net, e.z_index, candidates[c], e.image, bounds, dims);
    if (e.empty()) {
      entry.phi_percent = 100.0;
      entry.fitness = 0.0;
    } else {
      std::size_t best = 0;
      for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double db = std::abs(candidates[best] - 100.0);
        const double dc = std::abs(candidates[c] - 100.0);
        if (row[c] < row[best] || (row[c] == row[best] && (dc < db || (dc == db && candidates[c] < candidates[best]))))
          best = c;
      }
      entry.phi_percent = candidates[best];
      entry.fitness = row[best];
    }
    schedule.entries[r] = entry;
  });
  return {schedule, grid};
}

std::string schedule_csv(const FlowSchedule& schedule) {
  std::string out = "layer,z_mm,phi_percent,fitness\n";
  for (const auto& e : schedule.entries)
    out += std::to_string(e.layer) + "," + format_number(e.z_mm) + "," + format_number(e.phi_percent) + "," +
           format_number(e.fitness) + "\n";
  return out;
}

namespace {

double parse_double(const std::string& field, int line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw FormatError("schedule CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

FlowSchedule parse_schedule_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "layer,z_mm,phi_percent,fitness")
    throw FormatError("schedule CSV: missing or wrong header");
  FlowSchedule s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 4) throw FormatError("schedule CSV line " + std::to_string(lineno) + ": expected 4 fields");
    FlowScheduleEntry e;
    const double layer = parse_double(f[0], lineno);
    if (layer != std::floor(layer) || layer < 0)
      throw FormatError("schedule CSV line " + std::to_string(lineno) + ": bad layer index");
    e.layer = static_cast<int>(layer);
    e.z_mm = parse_double(f[1], lineno);
    e.phi_percent = parse_double(f[2], lineno);
    e.fitness = parse_double(f[3], lineno);
    s.entries.push_back(e);
  }
  return s;
}

std::string m221_commands(const FlowSchedule& schedule) {
  std::vector<FlowScheduleEntry> sorted = schedule.entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.layer < b.layer; });
  std::string out;
  for (const auto& e : sorted) out += "M221 S" + format_number(e.phi_percent) + "\n";
  return out;
}

void export_schedule(const FlowSchedule& schedule, const std::filesystem::path& csv_path,
                     const std::filesystem::path& m221_path) {
  binio::write_text(csv_path, schedule_csv(schedule));
  binio::write_text(m221_path, m221_commands(schedule));
}

#define FIELDFORGE_INSTANTIATE(T)                                                                             \
  template double fitness(const SirenNet<T>&, int, double, const ExpectedLayerImage&, const DomainBounds&,   \
                          const Dims3&);                                                                     \
  template std::pair<FlowSchedule, FitnessGrid> optimize_schedule(const SirenNet<T>&,                        \
                                                                  const std::vector<ExpectedLayerImage>&,    \
                                                                  const std::vector<double>&,                \
                                                                  const DomainBounds&, const Dims3&);

FIELDFORGE_INSTANTIATE(float)
FIELDFORGE_INSTANTIATE(double)

#undef FIELDFORGE_INSTANTIATE

}  // namespace fieldforge
