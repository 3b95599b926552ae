#include "sipheat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sipheat/errors.hpp"

namespace sipheat {

namespace {

PeakInfo peak_over(const TemperatureField& f, const std::vector<int>* slabs,
                   int layer_id) {
  const Mesh& m = *f.mesh;
  PeakInfo out;
  bool any = false;
  auto consider = [&](std::int32_t id) {
    if (f.t_c[id] > out.t_c) {
      out.t_c = f.t_c[id];
      out.ix = m.ax[id];
      out.iy = m.ay[id];
      out.iz = m.az[id];
      any = true;
    }
  };
  out.t_c = -std::numeric_limits<double>::infinity();
  if (!slabs) {
    for (std::int32_t id = 0; id < m.n_active; ++id) consider(id);
  } else {
    for (std::int32_t id = 0; id < m.n_active; ++id) {
      if (m.layer_of[id] == layer_id) consider(id);
    }
  }
  if (!any) throw ValidationError("peak: no voxels in range");
  out.x_mm = m.x_center_mm(out.ix);
  out.y_mm = m.y_center_mm(out.iy);
  out.z_um = m.z_center_um(out.iz);
  const std::int32_t id = m.id_at(out.ix, out.iy, out.iz);
  const int li = m.layer_of[id];
  out.layer = li >= 0 ? m.stack->layers[li].name : m.stack->gap_fill.name;
  return out;
}

}  // namespace

PeakInfo peak(const TemperatureField& field) { return peak_over(field, nullptr, -1); }

PeakInfo peak(const TemperatureField& field, std::string_view layer) {
  const int li = field.mesh->stack->layer_index(layer);
  if (li < 0) throw ValidationError("unknown layer: " + std::string(layer));
  const auto slabs = field.mesh->slabs_of_layer(li);
  if (slabs.empty())
    throw ValidationError("layer '" + std::string(layer) + "' is not meshed");
  return peak_over(field, &slabs, li);
}

double layer_mean_c(const TemperatureField& field, std::string_view layer) {
  const Mesh& m = *field.mesh;
  const int li = m.stack->layer_index(layer);
  if (li < 0) throw ValidationError("unknown layer: " + std::string(layer));
  double s = 0.0;
  std::int64_t count = 0;
  for (std::int32_t id = 0; id < m.n_active; ++id) {
    if (m.layer_of[id] == li) {
      s += field.t_c[id];
      ++count;
    }
  }
  if (count == 0)
    throw ValidationError("layer '" + std::string(layer) + "' is not meshed");
  return s / static_cast<double>(count);
}

double max_lateral_gradient_k_mm(const TemperatureField& field,
                                 std::string_view layer) {
  const Grid2D g = field.layer_slice(layer);
  const double pitch_mm = g.pitch_um * 1e-3;
  double best = 0.0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      double gx = 0.0, gy = 0.0;
      if (g.nx > 1) {
        const int xm = std::max(0, ix - 1), xp = std::min(g.nx - 1, ix + 1);
        gx = (g.at(xp, iy) - g.at(xm, iy)) / ((xp - xm) * pitch_mm);
      }
      if (g.ny > 1) {
        const int ym = std::max(0, iy - 1), yp = std::min(g.ny - 1, iy + 1);
        gy = (g.at(ix, yp) - g.at(ix, ym)) / ((yp - ym) * pitch_mm);
      }
      best = std::max(best, std::hypot(gx, gy));
    }
  }
  return best;
}

DeltaReport delta_report(const TemperatureField& a, const TemperatureField& b,
                         std::string_view layer) {
  const Mesh& ma = *a.mesh;
  const Mesh& mb = *b.mesh;
  const bool compatible = ma.nx == mb.nx && ma.ny == mb.ny &&
                          ma.pitch_um == mb.pitch_um && ma.x0_mm == mb.x0_mm &&
                          ma.y0_mm == mb.y0_mm;
  if (!compatible)
    throw ValidationError(
        "delta_report: fields come from incompatible grids (temperatures are "
        "never resampled)");
  DeltaReport d;
  d.peak_delta_k = peak(a).t_c - peak(b).t_c;
  d.mean_delta_k = layer_mean_c(a, layer) - layer_mean_c(b, layer);
  d.peak_sign = d.peak_delta_k > 0 ? 1 : (d.peak_delta_k < 0 ? -1 : 0);
  return d;
}

void write_ppm(const Grid2D& grid, const std::filesystem::path& path,
               const HeatmapScale& scale) {
  double lo = scale.min_c, hi = scale.max_c;
  if (!scale.fixed) {
    lo = grid.min();
    hi = grid.max();
  }
  const double span = hi - lo;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write heatmap: " + path.string());
  out << "P6\n" << grid.nx << " " << grid.ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(grid.nx) * 3);
  // Image rows top-down: the last grid row (largest y) comes first.
  for (int iy = grid.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      double t = span > 0.0 ? (grid.at(ix, iy) - lo) / span : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      // Linear blue -> red.
      row[static_cast<size_t>(ix) * 3 + 0] = static_cast<unsigned char>(std::lround(255.0 * t));
      row[static_cast<size_t>(ix) * 3 + 1] = 0;
      row[static_cast<size_t>(ix) * 3 + 2] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path export_heatmap(const TemperatureField& field,
                                     std::string_view layer,
                                     const std::filesystem::path& base,
                                     const HeatmapScale& scale) {
  const Grid2D g = field.layer_slice(layer);
  std::filesystem::path csv = base;
  csv += ".csv";
  std::filesystem::path ppm = base;
  ppm += ".ppm";
  write_grid_csv(g, csv);
  write_ppm(g, ppm, scale);
  return ppm;
}

}  // namespace sipheat
