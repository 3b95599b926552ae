#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sipheat/power_map.hpp"
#include "sipheat/stack.hpp"

namespace sipheat {

/// z-discretization policy. one_cell_per_layer gives every level exactly one
/// cell; max_aspect(r) subdivides levels so cell thickness <= r * pitch.
struct ZPolicy {
  bool one_cell_per_layer = false;
  double max_aspect = 8.0;

  static ZPolicy OneCellPerLayer() { return {true, 0.0}; }
  static ZPolicy MaxAspect(double r) { return {false, r}; }
};

struct MeshOptions {
  double pitch_um = 200.0;
  ZPolicy z_policy{};
  std::int64_t voxel_cap = 20'000'000;  // grid cells, inactive included
  // Restrict the mesh to a plan window and/or a contiguous span of layers
  // (both inclusive); used by the local-refinement flow.
  std::optional<Rect> clip_rect;
  std::optional<std::pair<std::string, std::string>> layer_span;
};

/// Structured voxel mesh over the active (material-filled) region of a
/// package stack. Voxels outside every mold cluster are excluded and act as
/// adiabatic surroundings. Active voxels are indexed x-major/y/z-minor so
/// each (ix,iy) column is a contiguous id range.
class Mesh {
 public:
  // grid geometry
  int nx = 0, ny = 0, nz = 0;
  double pitch_um = 0.0;
  double x0_mm = 0.0, y0_mm = 0.0;     // plan origin of cell (0,0)
  std::vector<double> z_edges_um;      // nz + 1, ascending from stack base
  std::vector<std::int16_t> slab_level;  // per z-slab: index into layout.levels

  // active voxels
  std::int64_t n_active = 0;
  std::vector<std::int32_t> active_index;  // dense [(ix*ny+iy)*nz+iz] -> id | -1
  std::vector<std::int32_t> ax, ay, az;    // per id: grid coordinates
  std::vector<double> k_w_mk;              // per id
  std::vector<std::int16_t> layer_of;      // per id: layer index | -1 for mold
  std::vector<double> power_w;             // per id

  std::shared_ptr<const PackageStack> stack;
  StackLayout layout;  // layout of the full (unclipped) stack
  int span_lo = -1, span_hi = -1;  // level range kept after layer_span clip

  std::int32_t id_at(int ix, int iy, int iz) const {
    if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz) return -1;
    return active_index[(static_cast<size_t>(ix) * ny + iy) * nz + iz];
  }
  double dz_um(int iz) const { return z_edges_um[iz + 1] - z_edges_um[iz]; }
  double z_center_um(int iz) const {
    return 0.5 * (z_edges_um[iz] + z_edges_um[iz + 1]);
  }
  double x_center_mm(int ix) const { return x0_mm + (ix + 0.5) * pitch_um * 1e-3; }
  double y_center_mm(int iy) const { return y0_mm + (iy + 0.5) * pitch_um * 1e-3; }
  double z_base_um() const { return z_edges_um.front(); }
  double z_top_um() const { return z_edges_um.back(); }
  Rect plan_rect() const {
    return {x0_mm, y0_mm, x0_mm + nx * pitch_um * 1e-3, y0_mm + ny * pitch_um * 1e-3};
  }

  /// z-slab indices covered by a layer (empty if the layer is not meshed).
  std::vector<int> slabs_of_layer(int layer_id) const;
  double total_power_w() const;
};

/// Voxelizes the stack at the given pitch. The stack must validate cleanly.
Mesh discretize(const PackageStack& stack, const MeshOptions& opts);

/// Conservatively bins map cells into the top z-slab of the map's target
/// layer; repeated calls accumulate. Total binned power matches the map
/// total to <= 1e-9 relative.
void attach_power(Mesh& mesh, const PowerMap& map);

}  // namespace sipheat
