#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sipheat/field.hpp"

namespace sipheat {

struct PeakInfo {
  double t_c = 0.0;
  double x_mm = 0.0, y_mm = 0.0, z_um = 0.0;
  std::string layer;
  int ix = 0, iy = 0, iz = 0;
};

/// Peak over all voxels (tie-break: lowest active id).
PeakInfo peak(const TemperatureField& field);
/// Peak over one layer's voxels; throws ValidationError on unknown layer.
PeakInfo peak(const TemperatureField& field, std::string_view layer);

/// Area mean of the layer slice.
double layer_mean_c(const TemperatureField& field, std::string_view layer);

/// Max in-plane gradient magnitude of the layer slice, K/mm. Central
/// differences at mesh pitch, one-sided on boundary cells.
double max_lateral_gradient_k_mm(const TemperatureField& field,
                                 std::string_view layer);

struct DeltaReport {
  double peak_delta_k = 0.0;  // a - b
  double mean_delta_k = 0.0;  // a - b on the named layer
  int peak_sign = 0;          // sign(peak_delta_k)
};

/// Field deltas (a minus b). Fields must share footprint, pitch and grid
/// dims; temperatures are never silently resampled.
DeltaReport delta_report(const TemperatureField& a, const TemperatureField& b,
                         std::string_view layer);

struct HeatmapScale {
  bool fixed = false;
  double min_c = 0.0, max_c = 0.0;

  static HeatmapScale Auto() { return {}; }
  static HeatmapScale Fixed(double lo, double hi) { return {true, lo, hi}; }
};

/// Writes <base>.ppm (binary P6, linear blue->red colormap) and <base>.csv
/// (lossless grid twin). Fixed scale gives byte-identical output for equal
/// fields. Returns the ppm path.
std::filesystem::path export_heatmap(const TemperatureField& field,
                                     std::string_view layer,
                                     const std::filesystem::path& base,
                                     const HeatmapScale& scale);

/// Heatmap of an arbitrary grid (used by the CLI `export` verb).
void write_ppm(const Grid2D& grid, const std::filesystem::path& path,
               const HeatmapScale& scale);

}  // namespace sipheat
