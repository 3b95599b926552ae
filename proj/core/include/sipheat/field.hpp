#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sipheat/grid.hpp"
#include "sipheat/mesh.hpp"

namespace sipheat {

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  std::string preconditioner;
  bool deterministic = true;
};

/// Steady-state temperature per active voxel, degC.
class TemperatureField {
 public:
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> t_c;  // per active voxel id
  double ambient_ref_c = 25.0;
  SolveStats stats;

  double at_id(std::int32_t id) const { return t_c[id]; }
  /// Temperature at grid coords; throws if the voxel is inactive.
  double at(int ix, int iy, int iz) const;
  bool active(int ix, int iy, int iz) const { return mesh->id_at(ix, iy, iz) >= 0; }

  double min_c() const;
  double max_c() const;

  /// Per-(x,y) max over the layer's z-cells, on the layer's footprint.
  /// Cells of the slice grid that fall outside the meshed region carry the
  /// ambient reference.
  Grid2D layer_slice(std::string_view layer) const;

  /// Trilinear sample at a point (mm, mm, um). Inactive neighbors are
  /// dropped and the remaining weights renormalized, so results stay within
  /// the field's range. Out-of-grid coordinates clamp.
  double sample(double x_mm, double y_mm, double z_um) const;
};

}  // namespace sipheat
