#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sipheat {

/// Dense 2D grid of doubles on a uniform pitch, anchored in the package
/// plane. Shared by power maps, layer temperature slices and heatmap export.
/// Values are row-major: v[iy * nx + ix], iy = 0 is the row nearest oy_mm.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double pitch_um = 0.0;
  double ox_mm = 0.0;
  double oy_mm = 0.0;
  std::string label;  // layer name in the CSV header
  std::vector<double> v;

  double& at(int ix, int iy) { return v[static_cast<size_t>(iy) * nx + ix]; }
  double at(int ix, int iy) const { return v[static_cast<size_t>(iy) * nx + ix]; }
  size_t size() const { return v.size(); }

  double min() const;
  double max() const;
};

// CSV layout: `# pitch_um=<f>`, `# origin_mm=<x>,<y>`, `# layer=<name>`,
// then ny rows of nx comma-separated values written with 17 significant
// digits (doubles round-trip exactly).
Grid2D read_grid_csv(const std::filesystem::path& path);
void write_grid_csv(const Grid2D& grid, const std::filesystem::path& path);

}  // namespace sipheat
