#include "sipheat/stack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sipheat/errors.hpp"

namespace sipheat {

namespace {
// Layer thicknesses are specified in um; treat z values closer than this as
// the same breakpoint.
constexpr double kZEpsUm = 1e-6;
constexpr double kPlanEpsMm = 1e-9;
}  // namespace

void Rect::include(const Rect& r) {
  x0 = std::min(x0, r.x0);
  y0 = std::min(y0, r.y0);
  x1 = std::max(x1, r.x1);
  y1 = std::max(y1, r.y1);
}

const Layer* PackageStack::find_layer(std::string_view name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

int PackageStack::layer_index(std::string_view name) const {
  for (size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return static_cast<int>(i);
  return -1;
}

std::string Violation::str() const {
  std::ostringstream os;
  if (!layer.empty()) os << "[" << layer << "] ";
  os << field << ": " << message;
  return os.str();
}

StackLayout compute_layout(const PackageStack& stack) {
  if (stack.layers.empty()) throw ValidationError("stack has no layers");

  StackLayout out;
  const auto& layers = stack.layers;
  out.extents.resize(layers.size());

  // Resolve z extents from list order.
  for (size_t i = 0; i < layers.size(); ++i) {
    double z0 = 0.0;
    if (layers[i].z0_um) {
      z0 = *layers[i].z0_um;
    } else if (i > 0) {
      z0 = layers[i].same_level_as_previous ? out.extents[i - 1].z0_um
                                            : out.extents[i - 1].z1_um;
    }
    out.extents[i] = {z0, z0 + layers[i].thickness_um};
  }

  out.bbox = layers[0].rect();
  for (const auto& l : layers) out.bbox.include(l.rect());

  // Cut at every layer boundary.
  std::vector<double> breaks;
  for (const auto& e : out.extents) {
    breaks.push_back(e.z0_um);
    breaks.push_back(e.z1_um);
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> edges;
  for (double b : breaks) {
    if (edges.empty() || b - edges.back() > kZEpsUm) edges.push_back(b);
  }
  out.height_um = edges.back();

  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    Level lvl;
    lvl.z0_um = edges[k];
    lvl.z1_um = edges[k + 1];
    const double mid = 0.5 * (lvl.z0_um + lvl.z1_um);
    for (size_t i = 0; i < layers.size(); ++i) {
      if (out.extents[i].z0_um <= mid && mid < out.extents[i].z1_um)
        lvl.layer_ids.push_back(static_cast<int>(i));
    }
    out.levels.push_back(std::move(lvl));
  }

  // Group consecutive levels that share a layer into clusters; mold tiles
  // each cluster's bounding rectangle.
  size_t begin = 0;
  while (begin < out.levels.size()) {
    size_t end = begin + 1;
    while (end < out.levels.size()) {
      const auto& a = out.levels[end - 1].layer_ids;
      const auto& b = out.levels[end].layer_ids;
      const bool share = std::any_of(a.begin(), a.end(), [&](int id) {
        return std::find(b.begin(), b.end(), id) != b.end();
      });
      if (!share) break;
      ++end;
    }
    Rect bbox{0, 0, 0, 0};
    bool first = true;
    for (size_t k = begin; k < end; ++k) {
      for (int id : out.levels[k].layer_ids) {
        if (first) {
          bbox = layers[id].rect();
          first = false;
        } else {
          bbox.include(layers[id].rect());
        }
      }
    }
    for (size_t k = begin; k < end; ++k) out.levels[k].fill_bbox = bbox;
    begin = end;
  }

  return out;
}

namespace {

struct Finding {
  int order;  // lowest involved layer index; -1 for stack-level findings
  Violation v;
};

bool rect_covered_by(const Rect& r, const Rect& cover) {
  return cover.x0 <= r.x0 + kPlanEpsMm && cover.x1 >= r.x1 - kPlanEpsMm &&
         cover.y0 <= r.y0 + kPlanEpsMm && cover.y1 >= r.y1 - kPlanEpsMm;
}

}  // namespace

std::vector<Violation> validate(const PackageStack& stack) {
  std::vector<Finding> findings;
  auto add = [&](int order, std::string layer, std::string field,
                 std::string message) {
    findings.push_back({order, {std::move(layer), std::move(field), std::move(message)}});
  };

  const auto& layers = stack.layers;
  if (layers.empty()) {
    add(-1, "", "layers", "stack has no layers");
  }

  std::set<std::string> seen_names;
  std::map<std::string, double> material_k;
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const int oi = static_cast<int>(i);
    if (l.name.empty()) add(oi, "<unnamed>", "name", "layer name is empty");
    if (!seen_names.insert(l.name).second)
      add(oi, l.name, "name", "duplicate layer name");
    if (!(l.dx_mm > 0.0) || !(l.dy_mm > 0.0))
      add(oi, l.name, "dimensions", "non-positive in-plane extent");
    if (!(l.thickness_um > 0.0))
      add(oi, l.name, "thickness", "non-positive thickness");
    if (!(l.material.k_w_mk > 0.0))
      add(oi, l.name, "conductivity", "non-positive conductivity");
    if (!l.material.name.empty()) {
      auto [it, inserted] = material_k.emplace(l.material.name, l.material.k_w_mk);
      if (!inserted && it->second != l.material.k_w_mk)
        add(oi, l.name, "material",
            "material '" + l.material.name + "' redefined with a different conductivity");
    }
  }
  if (!(stack.gap_fill.k_w_mk > 0.0))
    add(-1, "", "gap_fill", "non-positive gap-fill conductivity");
  for (const auto* bc : {&stack.top, &stack.bottom}) {
    const char* side = bc == &stack.top ? "boundary.top" : "boundary.bottom";
    if (bc->htc_w_m2k < 0.0) add(-1, "", side, "negative heat transfer coefficient");
    if (!std::isfinite(bc->ambient_c)) add(-1, "", side, "ambient not finite");
  }

  if (layers.empty()) {
    std::vector<Violation> out;
    for (auto& f : findings) out.push_back(std::move(f.v));
    return out;
  }

  const StackLayout layout = compute_layout(stack);

  // Pairwise 3D overlap.
  for (size_t i = 0; i < layers.size(); ++i) {
    for (size_t j = i + 1; j < layers.size(); ++j) {
      const auto& a = layout.extents[i];
      const auto& b = layout.extents[j];
      const double zo = std::min(a.z1_um, b.z1_um) - std::max(a.z0_um, b.z0_um);
      if (zo > kZEpsUm && layers[i].rect().overlaps(layers[j].rect()))
        add(static_cast<int>(i), layers[i].name + "+" + layers[j].name, "overlap",
            "layers overlap in z and in plan");
    }
  }

  // Vertical contiguity: every level must contain at least one layer.
  for (size_t k = 0; k < layout.levels.size(); ++k) {
    const auto& lvl = layout.levels[k];
    if (lvl.layer_ids.empty()) {
      std::ostringstream os;
      os << "unfilled vertical gap between " << lvl.z0_um << " um and "
         << lvl.z1_um << " um";
      add(-1, "", "contiguity", os.str());
    }
  }

  // Support: each layer above the base must rest on the level below it
  // (its layers plus the mold region), unless flagged allow_overhang.
  const double base_z = layout.levels.front().z0_um;
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& ext = layout.extents[i];
    if (ext.z0_um <= base_z + kZEpsUm) continue;  // bottom level is exempt
    if (layers[i].allow_overhang) continue;
    const Level* below = nullptr;
    for (const auto& lvl : layout.levels) {
      if (std::abs(lvl.z1_um - ext.z0_um) <= kZEpsUm) below = &lvl;
    }
    if (!below || below->layer_ids.empty()) continue;  // gap already reported
    if (!rect_covered_by(layers[i].rect(), below->fill_bbox))
      add(static_cast<int>(i), layers[i].name, "support",
          "footprint extends beyond the level below (set allow_overhang to accept)");
  }

  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    if (a.order != b.order) return a.order < b.order;
    return a.v.field < b.v.field;
  });
  std::vector<Violation> out;
  out.reserve(findings.size());
  for (auto& f : findings) out.push_back(std::move(f.v));
  return out;
}

}  // namespace sipheat
