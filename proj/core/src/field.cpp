#include "sipheat/field.hpp"

#include <algorithm>
#include <cmath>

#include "sipheat/errors.hpp"

namespace sipheat {

double TemperatureField::at(int ix, int iy, int iz) const {
  const std::int32_t id = mesh->id_at(ix, iy, iz);
  if (id < 0) throw ValidationError("voxel is not part of the meshed region");
  return t_c[id];
}

double TemperatureField::min_c() const {
  return t_c.empty() ? ambient_ref_c : *std::min_element(t_c.begin(), t_c.end());
}

double TemperatureField::max_c() const {
  return t_c.empty() ? ambient_ref_c : *std::max_element(t_c.begin(), t_c.end());
}

Grid2D TemperatureField::layer_slice(std::string_view layer) const {
  const Mesh& m = *mesh;
  const int li = m.stack->layer_index(layer);
  if (li < 0) throw ValidationError("unknown layer: " + std::string(layer));
  const auto slabs = m.slabs_of_layer(li);
  if (slabs.empty())
    throw ValidationError("layer '" + std::string(layer) + "' is not meshed");

  const Rect r = m.stack->layers[li].rect();
  const double pitch_mm = m.pitch_um * 1e-3;
  auto range = [&](double lo, double hi, double o, int n) {
    int i0 = static_cast<int>(std::ceil((lo - o) / pitch_mm - 0.5 - 1e-9));
    int i1 = static_cast<int>(std::floor((hi - o) / pitch_mm - 0.5 + 1e-9));
    return std::pair<int, int>{std::max(0, i0), std::min(n - 1, i1)};
  };
  const auto [ix0, ix1] = range(r.x0, r.x1, m.x0_mm, m.nx);
  const auto [iy0, iy1] = range(r.y0, r.y1, m.y0_mm, m.ny);
  if (ix1 < ix0 || iy1 < iy0)
    throw ValidationError("layer '" + std::string(layer) + "' lies outside the mesh window");

  Grid2D g;
  g.nx = ix1 - ix0 + 1;
  g.ny = iy1 - iy0 + 1;
  g.pitch_um = m.pitch_um;
  g.ox_mm = m.x0_mm + ix0 * pitch_mm;
  g.oy_mm = m.y0_mm + iy0 * pitch_mm;
  g.label = std::string(layer);
  g.v.assign(static_cast<size_t>(g.nx) * g.ny, ambient_ref_c);
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      double best = ambient_ref_c;
      bool any = false;
      for (int iz : slabs) {
        const std::int32_t id = m.id_at(ix, iy, iz);
        if (id < 0) continue;
        best = any ? std::max(best, t_c[id]) : t_c[id];
        any = true;
      }
      if (any) g.at(ix - ix0, iy - iy0) = best;
    }
  }
  return g;
}

double TemperatureField::sample(double x_mm, double y_mm, double z_um) const {
  const Mesh& m = *mesh;
  const double pitch_mm = m.pitch_um * 1e-3;

  // Fractional cell-center coordinates, clamped into the grid.
  double fx = (x_mm - m.x0_mm) / pitch_mm - 0.5;
  double fy = (y_mm - m.y0_mm) / pitch_mm - 0.5;
  fx = std::clamp(fx, 0.0, static_cast<double>(m.nx - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(m.ny - 1));
  const int ix0 = std::min(static_cast<int>(fx), m.nx - 1);
  const int iy0 = std::min(static_cast<int>(fy), m.ny - 1);
  const int ix1 = std::min(ix0 + 1, m.nx - 1);
  const int iy1 = std::min(iy0 + 1, m.ny - 1);
  const double wx = fx - ix0, wy = fy - iy0;

  // z: linear between the bracketing slab centers.
  int izlo = 0;
  while (izlo + 1 < m.nz && m.z_center_um(izlo + 1) <= z_um) ++izlo;
  int izhi = izlo;
  if (z_um > m.z_center_um(izlo) && izlo + 1 < m.nz) izhi = izlo + 1;
  double wz = 0.0;
  if (izhi != izlo) {
    const double zl = m.z_center_um(izlo), zh = m.z_center_um(izhi);
    wz = std::clamp((z_um - zl) / (zh - zl), 0.0, 1.0);
  }

  double acc = 0.0, wsum = 0.0;
  for (int dz = 0; dz <= (izhi != izlo ? 1 : 0); ++dz) {
    const int iz = dz ? izhi : izlo;
    const double w_z = dz ? wz : (izhi != izlo ? 1.0 - wz : 1.0);
    const int xs[2] = {ix0, ix1};
    const int ys[2] = {iy0, iy1};
    const double wxs[2] = {1.0 - wx, wx};
    const double wys[2] = {1.0 - wy, wy};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double w = w_z * wxs[a] * wys[b];
        if (w == 0.0) continue;
        const std::int32_t id = m.id_at(xs[a], ys[b], iz);
        if (id < 0) continue;  // dropped; weights renormalize below
        acc += w * t_c[id];
        wsum += w;
      }
    }
  }
  if (wsum <= 0.0) {
    // Point is surrounded by unmeshed voxels; fall back to the nearest
    // active voxel in the column neighborhood.
    for (int iz = 0; iz < m.nz; ++iz) {
      const std::int32_t id = m.id_at(ix0, iy0, iz);
      if (id >= 0) return t_c[id];
    }
    return ambient_ref_c;
  }
  return acc / wsum;
}

}  // namespace sipheat
