#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sipheat/field.hpp"
#include "sipheat/metrics.hpp"
#include "sipheat/power_map.hpp"
#include "sipheat/solver.hpp"

namespace sipheat {

/// Plan window and layer span for a fine local solve. rect_mm is the solved
/// region (core plus margin), core_mm the reported region.
struct Window {
  Rect rect_mm;
  Rect core_mm;
  double fine_pitch_um = 5.0;
  std::string span_bottom;  // bottom-most layer included
  std::string span_top;     // top-most layer included
  int margin_coarse_cells = 2;
  double z_max_aspect = 2.0;  // local z subdivision (global default is 8)
};

/// Window of core_w x core_h centered on the peak voxel of the named layer,
/// clamped inside the global footprint, padded by margin_coarse_cells and
/// snapped to the fine grid. Peak ties break toward the lowest voxel id.
Window find_hottest_window(const TemperatureField& global_field,
                           double core_w_mm, double core_h_mm,
                           std::string_view layer, double fine_pitch_um,
                           std::string_view span_bottom,
                           std::string_view span_top,
                           int margin_coarse_cells = 2);

/// Dirichlet temperatures for the window's cut faces, interpolated from the
/// global field to the local mesh's face centers. Faces that coincide with
/// the global domain boundary keep the original boundary condition and get
/// no grid. Lateral grids are indexed (along-face, z-slab).
struct LocalBCs {
  std::shared_ptr<const Mesh> local_mesh;
  std::optional<Grid2D> xm, xp, ym, yp;  // lateral cut faces
  std::optional<Grid2D> top, bottom;     // present when the span truncates z
  PeakInfo global_peak;                  // context for reports
  double global_min_c = 0.0, global_max_c = 0.0;
};

LocalBCs extract_boundary(const TemperatureField& global_field,
                          const PackageStack& stack, const Window& window);

struct LocalResult {
  TemperatureField field;
  PeakInfo global_context_peak;
};

/// Fine-pitch solve on the window with Dirichlet cut faces. fine_power
/// replaces the coarse power inside the window; power outside enters only
/// through the boundary temperatures.
LocalResult solve_local(const PackageStack& stack, const Window& window,
                        const PowerMap& fine_power, const LocalBCs& bcs,
                        const SolverOptions& opts = {});

}  // namespace sipheat
