#include "sipheat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sipheat/errors.hpp"

namespace sipheat {

namespace {
constexpr double kZEpsUm = 1e-6;

int cells_along(double extent_mm, double pitch_um, const char* axis) {
  const double n = extent_mm * 1e3 / pitch_um;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-6 * std::max(1.0, r)) {
    std::ostringstream os;
    os << "pitch " << pitch_um << " um does not divide the " << axis
       << " footprint of " << extent_mm
       << " mm; pad or crop the footprint (or pick a dividing pitch)";
    throw ValidationError(os.str());
  }
  return static_cast<int>(r);
}

// Grid index range of cell centers inside [lo, hi] (mm).
std::pair<int, int> center_range(double lo, double hi, double origin_mm,
                                 double pitch_mm, int n) {
  const double a = (lo - origin_mm) / pitch_mm - 0.5;
  const double b = (hi - origin_mm) / pitch_mm - 0.5;
  int i0 = static_cast<int>(std::ceil(a - 1e-9));
  int i1 = static_cast<int>(std::floor(b + 1e-9));
  i0 = std::max(i0, 0);
  i1 = std::min(i1, n - 1);
  return {i0, i1};
}

}  // namespace

std::vector<int> Mesh::slabs_of_layer(int layer_id) const {
  std::vector<int> out;
  const auto& ext = layout.extents[layer_id];
  for (int iz = 0; iz < nz; ++iz) {
    const double zc = z_center_um(iz);
    if (zc > ext.z0_um - kZEpsUm && zc < ext.z1_um + kZEpsUm &&
        std::find(layout.levels[slab_level[iz]].layer_ids.begin(),
                  layout.levels[slab_level[iz]].layer_ids.end(),
                  layer_id) != layout.levels[slab_level[iz]].layer_ids.end()) {
      out.push_back(iz);
    }
  }
  return out;
}

double Mesh::total_power_w() const {
  double s = 0.0;
  for (double p : power_w) s += p;
  return s;
}

Mesh discretize(const PackageStack& stack, const MeshOptions& opts) {
  if (!(opts.pitch_um > 0.0)) throw ValidationError("non-positive pitch");
  auto violations = validate(stack);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "cannot mesh an invalid stack:";
    for (const auto& v : violations) os << "\n  - " << v.str();
    throw ValidationError(os.str());
  }

  Mesh m;
  m.stack = std::make_shared<PackageStack>(stack);
  m.layout = compute_layout(stack);
  m.pitch_um = opts.pitch_um;

  // Level range restricted to the requested layer span.
  int lv_lo = 0, lv_hi = static_cast<int>(m.layout.levels.size()) - 1;
  if (opts.layer_span) {
    const int bot = stack.layer_index(opts.layer_span->first);
    const int top = stack.layer_index(opts.layer_span->second);
    if (bot < 0 || top < 0) {
      throw ValidationError("layer span names unknown: " + opts.layer_span->first +
                            ".." + opts.layer_span->second);
    }
    const double zlo = m.layout.extents[bot].z0_um;
    const double zhi = m.layout.extents[top].z1_um;
    if (!(zhi > zlo)) throw ValidationError("layer span is empty in z");
    lv_lo = -1;
    lv_hi = -1;
    for (int k = 0; k < static_cast<int>(m.layout.levels.size()); ++k) {
      const auto& lvl = m.layout.levels[k];
      if (lvl.z0_um >= zlo - kZEpsUm && lvl.z1_um <= zhi + kZEpsUm) {
        if (lv_lo < 0) lv_lo = k;
        lv_hi = k;
      }
    }
    if (lv_lo < 0) throw ValidationError("layer span covers no levels");
  }
  m.span_lo = lv_lo;
  m.span_hi = lv_hi;

  const Rect plan = opts.clip_rect ? *opts.clip_rect : m.layout.bbox;
  if (opts.clip_rect && !m.layout.bbox.contains(*opts.clip_rect))
    throw ValidationError("clip window extends beyond the package footprint");
  m.x0_mm = plan.x0;
  m.y0_mm = plan.y0;
  m.nx = cells_along(plan.width(), opts.pitch_um, "x");
  m.ny = cells_along(plan.height(), opts.pitch_um, "y");

  // z slabs per level.
  m.z_edges_um.push_back(m.layout.levels[lv_lo].z0_um);
  for (int k = lv_lo; k <= lv_hi; ++k) {
    const auto& lvl = m.layout.levels[k];
    int cells = 1;
    if (!opts.z_policy.one_cell_per_layer) {
      const double max_dz = opts.z_policy.max_aspect * opts.pitch_um;
      cells = std::max(1, static_cast<int>(std::ceil(lvl.thickness_um() / max_dz - 1e-9)));
    }
    const double dz = lvl.thickness_um() / cells;
    for (int c = 0; c < cells; ++c) {
      m.z_edges_um.push_back(c + 1 == cells ? lvl.z1_um : lvl.z0_um + (c + 1) * dz);
      m.slab_level.push_back(static_cast<std::int16_t>(k));
    }
  }
  m.nz = static_cast<int>(m.slab_level.size());

  const std::int64_t dense = static_cast<std::int64_t>(m.nx) * m.ny * m.nz;
  if (dense > opts.voxel_cap) {
    std::ostringstream os;
    os << "voxel budget exceeded: " << m.nx << "x" << m.ny << "x" << m.nz << " = "
       << dense << " > cap " << opts.voxel_cap;
    throw ValidationError(os.str());
  }

  // Per-level plan images: layer index, -1 mold, -2 unmeshed.
  const double pitch_mm = m.pitch_um * 1e-3;
  const size_t plane = static_cast<size_t>(m.nx) * m.ny;
  std::vector<std::vector<std::int16_t>> level_img(m.layout.levels.size());
  for (int k = lv_lo; k <= lv_hi; ++k) {
    const auto& lvl = m.layout.levels[k];
    auto& img = level_img[k];
    img.assign(plane, -2);
    auto paint = [&](const Rect& r, std::int16_t v) {
      const auto [ix0, ix1] = center_range(r.x0, r.x1, m.x0_mm, pitch_mm, m.nx);
      const auto [iy0, iy1] = center_range(r.y0, r.y1, m.y0_mm, pitch_mm, m.ny);
      for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) img[static_cast<size_t>(iy) * m.nx + ix] = v;
    };
    if (!lvl.layer_ids.empty()) paint(lvl.fill_bbox, -1);
    for (auto it = lvl.layer_ids.rbegin(); it != lvl.layer_ids.rend(); ++it)
      paint(stack.layers[*it].rect(), static_cast<std::int16_t>(*it));
  }

  // Active voxel indexing, x-major / z-minor so columns are contiguous.
  m.active_index.assign(static_cast<size_t>(dense), -1);
  std::int32_t next = 0;
  for (int ix = 0; ix < m.nx; ++ix) {
    for (int iy = 0; iy < m.ny; ++iy) {
      for (int iz = 0; iz < m.nz; ++iz) {
        const auto& img = level_img[m.slab_level[iz]];
        const std::int16_t mat = img[static_cast<size_t>(iy) * m.nx + ix];
        if (mat == -2) continue;
        m.active_index[(static_cast<size_t>(ix) * m.ny + iy) * m.nz + iz] = next;
        m.ax.push_back(ix);
        m.ay.push_back(iy);
        m.az.push_back(iz);
        m.layer_of.push_back(mat);
        m.k_w_mk.push_back(mat >= 0 ? stack.layers[mat].material.k_w_mk
                                    : stack.gap_fill.k_w_mk);
        ++next;
      }
    }
  }
  m.n_active = next;
  if (m.n_active == 0) throw ValidationError("mesh has no active voxels");
  m.power_w.assign(m.n_active, 0.0);
  return m;
}

void attach_power(Mesh& mesh, const PowerMap& map) {
  const int li = mesh.stack->layer_index(map.target_layer);
  if (li < 0) throw ValidationError("unknown power target layer: " + map.target_layer);
  const Rect lrect = mesh.stack->layers[li].rect();
  const Rect mrect = map.rect();
  if (!lrect.expanded(1e-9).contains(mrect)) {
    std::ostringstream os;
    os << "power map footprint [" << mrect.x0 << "," << mrect.y0 << "]..["
       << mrect.x1 << "," << mrect.y1 << "] mm overflows layer '"
       << map.target_layer << "'";
    throw ValidationError(os.str());
  }
  const auto slabs = mesh.slabs_of_layer(li);
  if (slabs.empty())
    throw ValidationError("power target layer '" + map.target_layer +
                          "' is not part of the meshed region");
  const int iz = slabs.back();  // top z-slab of the layer

  const double total = total_power(map);
  if (total == 0.0 && std::all_of(map.cells.begin(), map.cells.end(),
                                  [](double c) { return c == 0.0; })) {
    return;
  }

  // Exact per-axis overlaps between map cells and mesh columns (both in mm).
  const double pitch_mm = mesh.pitch_um * 1e-3;
  const double mp_mm = map.pitch_um * 1e-3;
  auto overlaps = [&](int n_map, double map_o, double mesh_o, int n_mesh) {
    std::vector<std::pair<int, std::vector<double>>> out(n_map);
    for (int i = 0; i < n_map; ++i) {
      const double a = map_o + i * mp_mm, b = map_o + (i + 1) * mp_mm;
      int j0 = static_cast<int>(std::floor((a - mesh_o) / pitch_mm + 1e-12));
      j0 = std::clamp(j0, 0, n_mesh - 1);
      out[i].first = j0;
      for (int j = j0; j < n_mesh; ++j) {
        const double lo = std::max(a, mesh_o + j * pitch_mm);
        const double hi = std::min(b, mesh_o + (j + 1) * pitch_mm);
        if (hi <= lo) {
          if (mesh_o + j * pitch_mm >= b) break;
          out[i].second.push_back(0.0);
          continue;
        }
        out[i].second.push_back((hi - lo) / mp_mm);
      }
    }
    return out;
  };
  const auto wx = overlaps(map.nx, map.origin_x_mm, mesh.x0_mm, mesh.nx);
  const auto wy = overlaps(map.ny, map.origin_y_mm, mesh.y0_mm, mesh.ny);

  std::vector<std::pair<std::int32_t, double>> deposits;
  double deposited = 0.0;
  for (int j = 0; j < map.ny; ++j) {
    for (int i = 0; i < map.nx; ++i) {
      const double p = map.at(i, j);
      if (p == 0.0) continue;
      for (size_t kj = 0; kj < wy[j].second.size(); ++kj) {
        const double fy = wy[j].second[kj];
        if (fy == 0.0) continue;
        const int iy = wy[j].first + static_cast<int>(kj);
        for (size_t ki = 0; ki < wx[i].second.size(); ++ki) {
          const double fx = wx[i].second[ki];
          if (fx == 0.0) continue;
          const int ix = wx[i].first + static_cast<int>(ki);
          const std::int32_t id = mesh.id_at(ix, iy, iz);
          if (id < 0) continue;  // sliver against an unmeshed cell
          const double dp = p * fx * fy;
          deposits.emplace_back(id, dp);
          deposited += dp;
        }
      }
    }
  }
  if (total > 0.0 && deposited < 0.99 * total) {
    throw ValidationError(
        "more than 1% of the power map fell outside the meshed region");
  }
  // Conservation: rescale the deposit so the binned total matches exactly.
  const double scale =
      (deposited > 0.0 && std::abs(deposited - total) > 1e-15 * total)
          ? total / deposited
          : 1.0;
  for (const auto& [id, dp] : deposits) mesh.power_w[id] += dp * scale;
}

}  // namespace sipheat
