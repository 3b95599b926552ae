#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sipheat/stack.hpp"

namespace sipheat {

/// 2D grid of per-cell power (W) attached to a named active layer.
/// Cells are row-major, iy * nx + ix; cell (0,0) is at the origin corner.
struct PowerMap {
  int nx = 0;
  int ny = 0;
  double pitch_um = 0.0;
  double origin_x_mm = 0.0;
  double origin_y_mm = 0.0;
  std::string target_layer;
  std::vector<double> cells;

  double& at(int ix, int iy) { return cells[static_cast<size_t>(iy) * nx + ix]; }
  double at(int ix, int iy) const { return cells[static_cast<size_t>(iy) * nx + ix]; }
  Rect rect() const {
    const double w = nx * pitch_um * 1e-3, h = ny * pitch_um * 1e-3;
    return {origin_x_mm, origin_y_mm, origin_x_mm + w, origin_y_mm + h};
  }
};

/// Exact sum of all cells, W.
double total_power(const PowerMap& map);

/// Placement of a generated map: origin corner and target layer.
struct MapFootprint {
  double ox_mm = 0.0;
  double oy_mm = 0.0;
  std::string layer;
};

PowerMap gen_uniform(double total_w, int nx, int ny, double pitch_um,
                     const MapFootprint& at);

/// Grid of (nx/block x ny/block) sub-blocks, each carrying total/#blocks with
/// a radially linear (cone) profile around a seeded-random center cell.
/// peak_ratio is the exact ratio of a sub-block's peak cell to its mean cell.
PowerMap gen_clustered(double total_w, int nx, int ny, double pitch_um,
                       const MapFootprint& at, int block_cells,
                       double peak_ratio, std::uint64_t seed);

/// All power uniform in the central square region covering `concentration`
/// of the map area; `background_total_w` (default 0) is spread uniformly
/// over the remaining cells.
PowerMap gen_center_focused(double total_w, int nx, int ny, double pitch_um,
                            const MapFootprint& at, double concentration,
                            double background_total_w = 0.0);

PowerMap load_power_map(const std::filesystem::path& path);
void save_power_map(const PowerMap& map, const std::filesystem::path& path);

enum class ResampleMethod {
  kAreaWeighted,      // exact conservative overlap averaging
  kBilinearFiltered,  // bilinear density interpolation + 3x3 binomial smooth
};

/// What to do when the footprint is not an integer number of cells at the
/// new pitch. kExact errors; kPad grows the footprint with zero-power cells;
/// kCrop shrinks it and renormalizes to preserve total power.
enum class FootprintFit { kExact, kPad, kCrop };

PowerMap resample(const PowerMap& map, double new_pitch_um,
                  ResampleMethod method, FootprintFit fit = FootprintFit::kExact);

}  // namespace sipheat
