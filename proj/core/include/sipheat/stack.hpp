#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sipheat {

/// Axis-aligned rectangle in package-plane coordinates, mm.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
  bool overlaps(const Rect& r) const {
    return r.x0 < x1 && r.x1 > x0 && r.y0 < y1 && r.y1 > y0;
  }
  Rect expanded(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }
  void include(const Rect& r);
};

struct Material {
  std::string name;
  double k_w_mk = 0.0;  // isotropic thermal conductivity
};

/// One slab of the package. z placement is derived from list order: a layer
/// sits on top of the previous one unless `same_level_as_previous` is set
/// (side-by-side dies) or an explicit `z0_um` is given.
struct Layer {
  std::string name;
  double dx_mm = 0.0;
  double dy_mm = 0.0;
  double thickness_um = 0.0;
  Material material;
  double offset_x_mm = 0.0;
  double offset_y_mm = 0.0;
  bool same_level_as_previous = false;
  std::optional<double> z0_um;
  bool allow_overhang = false;  // e.g. heat sink wider than the spreader

  Rect rect() const {
    return {offset_x_mm, offset_y_mm, offset_x_mm + dx_mm, offset_y_mm + dy_mm};
  }
};

/// Convective boundary on the package's outermost top/bottom faces.
/// htc = 0 means adiabatic.
struct BoundaryCondition {
  double htc_w_m2k = 0.0;
  double ambient_c = 25.0;
};

struct PackageStack {
  std::vector<Layer> layers;  // bottom to top
  Material gap_fill;          // mold compound between side-by-side dies
  BoundaryCondition top;
  BoundaryCondition bottom;
  // Non-fatal observations made while loading (e.g. defaulted boundary).
  std::vector<std::string> warnings;
  // Every implementer default baked into this stack, for report ledgers.
  std::vector<std::string> assumptions;

  const Layer* find_layer(std::string_view name) const;
  int layer_index(std::string_view name) const;  // -1 if absent
};

struct Violation {
  std::string layer;    // offending layer name(s), empty for stack-level
  std::string field;    // which invariant
  std::string message;  // human-readable detail

  std::string str() const;
};

// ---------------------------------------------------------------------------
// Derived geometry. Layer z extents are resolved from list order, then the
// stack is cut into "levels" at every layer boundary. Consecutive levels that
// share a layer form a cluster; mold (gap_fill) tiles each cluster's bounding
// rectangle around the layers present, so side-by-side dies of unequal height
// end up embedded in mold rather than in void. Plan regions outside a
// cluster's bounding rectangle are not meshed (adiabatic by omission).
// ---------------------------------------------------------------------------

struct LayerExtent {
  double z0_um = 0.0;
  double z1_um = 0.0;
};

struct Level {
  double z0_um = 0.0;
  double z1_um = 0.0;
  std::vector<int> layer_ids;  // layers covering this z interval
  Rect fill_bbox;              // mold region (cluster bounding rectangle)
  double thickness_um() const { return z1_um - z0_um; }
};

struct StackLayout {
  std::vector<LayerExtent> extents;  // parallel to stack.layers
  std::vector<Level> levels;         // ascending in z
  Rect bbox;                         // plan bounding box of all layers
  double height_um = 0.0;
};

/// Computes layer z extents, levels and mold regions. Tolerant of invalid
/// stacks (validate() reports problems); throws only on empty stacks.
StackLayout compute_layout(const PackageStack& stack);

/// Returns every violated invariant, ordered bottom-to-top then by field
/// name. Empty result means the stack is valid.
std::vector<Violation> validate(const PackageStack& stack);

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

enum class Preset {
  kSip25d,        // full 2.5D SiP, computing chiplet as a bulk-Si block
  kStack1Fspdn,   // SiP with the frontside-PDN computing chiplet cross-section
  kStack2Bspdn,   // SiP with the backside-PDN computing chiplet cross-section
};

PackageStack build_preset(Preset preset);
std::optional<Preset> preset_from_name(std::string_view name);
std::string_view preset_name(Preset preset);

// ---------------------------------------------------------------------------
// Stack file I/O (JSON; see docs/stack-format.md)
// ---------------------------------------------------------------------------

PackageStack load_stack(const std::filesystem::path& path);
PackageStack stack_from_json_text(std::string_view text, std::string_view origin);
void save_stack(const PackageStack& stack, const std::filesystem::path& path);
std::string stack_to_json_text(const PackageStack& stack);

}  // namespace sipheat
