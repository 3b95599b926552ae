#include "sipheat/power_map.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sipheat/errors.hpp"
#include "sipheat/grid.hpp"

namespace sipheat {

namespace {

void check_grid(double total_w, int nx, int ny, double pitch_um) {
  if (nx < 1 || ny < 1) throw ValidationError("non-positive grid dims");
  if (!(pitch_um > 0.0)) throw ValidationError("non-positive pitch");
  if (total_w < 0.0) throw ValidationError("negative total power");
  if (!std::isfinite(total_w)) throw ValidationError("total power not finite");
}

double cell_sum(const std::vector<double>& cells) {
  double s = 0.0;
  for (double c : cells) s += c;
  return s;
}

// Scales cells so they sum to `total`, skipping when already within 1e-12
// relative so exact-by-construction maps keep their bit pattern.
void renormalize(PowerMap& map, double total) {
  if (total == 0.0) return;
  const double s = cell_sum(map.cells);
  if (s == 0.0) return;
  if (std::abs(s - total) <= 1e-12 * std::abs(total)) return;
  const double f = total / s;
  for (double& c : map.cells) c *= f;
}

PowerMap blank(int nx, int ny, double pitch_um, const MapFootprint& at) {
  PowerMap m;
  m.nx = nx;
  m.ny = ny;
  m.pitch_um = pitch_um;
  m.origin_x_mm = at.ox_mm;
  m.origin_y_mm = at.oy_mm;
  m.target_layer = at.layer;
  m.cells.assign(static_cast<size_t>(nx) * ny, 0.0);
  return m;
}

// Overlap fractions of source cells against destination cells along one
// axis: how much of source cell i (fraction of its own width) lands in
// destination cell j. Both grids share the same origin coordinate.
struct AxisOverlap {
  // per source cell: first destination index and fractions
  std::vector<int> first;
  std::vector<std::vector<double>> frac;
};

AxisOverlap axis_overlap(int n_src, double p_src, int n_dst, double p_dst) {
  AxisOverlap o;
  o.first.resize(n_src);
  o.frac.resize(n_src);
  for (int i = 0; i < n_src; ++i) {
    const double a = i * p_src, b = (i + 1) * p_src;
    int j0 = std::max(0, static_cast<int>(std::floor(a / p_dst + 1e-12)));
    o.first[i] = std::min(j0, std::max(0, n_dst - 1));
    for (int j = o.first[i]; j < n_dst; ++j) {
      const double lo = std::max(a, j * p_dst);
      const double hi = std::min(b, (j + 1) * p_dst);
      if (hi <= lo) {
        if (j * p_dst >= b) break;
        o.frac[i].push_back(0.0);  // keep index alignment
        continue;
      }
      o.frac[i].push_back((hi - lo) / p_src);
    }
    if (o.frac[i].empty()) {
      o.frac[i].push_back(0.0);  // source cell entirely outside (crop)
    }
  }
  return o;
}

}  // namespace

double total_power(const PowerMap& map) { return cell_sum(map.cells); }

PowerMap gen_uniform(double total_w, int nx, int ny, double pitch_um,
                     const MapFootprint& at) {
  check_grid(total_w, nx, ny, pitch_um);
  PowerMap m = blank(nx, ny, pitch_um, at);
  const double v = total_w / (static_cast<double>(nx) * ny);
  for (double& c : m.cells) c = v;
  renormalize(m, total_w);
  return m;
}

PowerMap gen_clustered(double total_w, int nx, int ny, double pitch_um,
                       const MapFootprint& at, int block_cells,
                       double peak_ratio, std::uint64_t seed) {
  check_grid(total_w, nx, ny, pitch_um);
  if (block_cells < 1) throw ValidationError("block size must be >= 1 cell");
  if (nx % block_cells != 0 || ny % block_cells != 0) {
    std::ostringstream os;
    os << "grid " << nx << "x" << ny << " not divisible into " << block_cells
       << "x" << block_cells << " sub-blocks";
    throw ValidationError(os.str());
  }
  if (peak_ratio < 1.0) throw ValidationError("peak_ratio < 1");

  PowerMap m = blank(nx, ny, pitch_um, at);
  const double base = total_w / (static_cast<double>(nx) * ny);
  const int bx = nx / block_cells, by = ny / block_cells;
  const int b = block_cells;
  std::mt19937_64 rng(seed);

  std::vector<double> g(static_cast<size_t>(b) * b);
  for (int jb = 0; jb < by; ++jb) {
    for (int ib = 0; ib < bx; ++ib) {
      const int cx = static_cast<int>(rng() % static_cast<std::uint64_t>(b));
      const int cy = static_cast<int>(rng() % static_cast<std::uint64_t>(b));

      // Truncated cone around the seeded center. Shrink the radius until the
      // requested peak-to-mean ratio is representable with non-negative cells.
      double radius = 0.5 * b;
      double mean_g = 0.0;
      for (int attempt = 0; attempt < 64; ++attempt) {
        double sum = 0.0;
        for (int j = 0; j < b; ++j) {
          for (int i = 0; i < b; ++i) {
            const double r = std::hypot(static_cast<double>(i - cx),
                                        static_cast<double>(j - cy));
            const double w = std::max(0.0, 1.0 - r / radius);
            g[static_cast<size_t>(j) * b + i] = w;
            sum += w;
          }
        }
        mean_g = sum / (static_cast<double>(b) * b);
        if (peak_ratio == 1.0 || peak_ratio * mean_g < 1.0 || b == 1) break;
        radius *= 0.75;
        if (radius < 0.5) break;
      }
      if (b > 1 && peak_ratio > 1.0 && peak_ratio * mean_g >= 1.0) {
        std::ostringstream os;
        os << "peak_ratio " << peak_ratio << " not representable in a " << b
           << "x" << b << " sub-block (max ~" << 1.0 / mean_g << ")";
        throw ValidationError(os.str());
      }

      // factor = 1 + (pr-1) * (g - mean)/(1 - mean), rescaled to mean 1 so a
      // flat kernel (pr = 1) reproduces gen_uniform cell-for-cell.
      double wsum = 0.0;
      for (int j = 0; j < b; ++j) {
        for (int i = 0; i < b; ++i) {
          const double gg = g[static_cast<size_t>(j) * b + i];
          double f = 1.0;
          if (peak_ratio > 1.0 && b > 1) {
            f = 1.0 + (peak_ratio - 1.0) * (gg - mean_g) / (1.0 - mean_g);
          }
          g[static_cast<size_t>(j) * b + i] = f;
          wsum += f;
        }
      }
      const double scale = (static_cast<double>(b) * b) / wsum;
      for (int j = 0; j < b; ++j) {
        for (int i = 0; i < b; ++i) {
          const double f = g[static_cast<size_t>(j) * b + i] * scale;
          m.at(ib * b + i, jb * b + j) = base * f;
        }
      }
    }
  }
  renormalize(m, total_w);
  return m;
}

PowerMap gen_center_focused(double total_w, int nx, int ny, double pitch_um,
                            const MapFootprint& at, double concentration,
                            double background_total_w) {
  check_grid(total_w, nx, ny, pitch_um);
  if (!(concentration > 0.0) || concentration > 1.0)
    throw ValidationError("concentration must be in (0, 1]");
  if (background_total_w < 0.0 || background_total_w > total_w)
    throw ValidationError("background power must be in [0, total]");

  PowerMap m = blank(nx, ny, pitch_um, at);
  const double side = std::sqrt(concentration);
  const int nxc = std::min(nx, std::max(1, static_cast<int>(std::lround(nx * side))));
  const int nyc = std::min(ny, std::max(1, static_cast<int>(std::lround(ny * side))));
  const int x0 = (nx - nxc) / 2, y0 = (ny - nyc) / 2;
  const std::int64_t inside = static_cast<std::int64_t>(nxc) * nyc;
  const std::int64_t outside = static_cast<std::int64_t>(nx) * ny - inside;

  const double bg = outside > 0 ? background_total_w : 0.0;
  const double vin = (total_w - bg) / static_cast<double>(inside);
  const double vout = outside > 0 ? bg / static_cast<double>(outside) : 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const bool in = i >= x0 && i < x0 + nxc && j >= y0 && j < y0 + nyc;
      m.at(i, j) = in ? vin : vout;
    }
  }
  renormalize(m, total_w);
  return m;
}

PowerMap load_power_map(const std::filesystem::path& path) {
  const Grid2D g = read_grid_csv(path);
  if (!(g.pitch_um > 0.0))
    throw ParseError(path.string() + ": non-positive pitch_um");
  PowerMap m;
  m.nx = g.nx;
  m.ny = g.ny;
  m.pitch_um = g.pitch_um;
  m.origin_x_mm = g.ox_mm;
  m.origin_y_mm = g.oy_mm;
  m.target_layer = g.label;
  m.cells = g.v;
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const double c = m.at(i, j);
      if (c < 0.0 || !std::isfinite(c)) {
        std::ostringstream os;
        os << path.string() << ": negative or non-finite cell at row " << j
           << " col " << i;
        throw ValidationError(os.str());
      }
    }
  }
  return m;
}

void save_power_map(const PowerMap& map, const std::filesystem::path& path) {
  Grid2D g;
  g.nx = map.nx;
  g.ny = map.ny;
  g.pitch_um = map.pitch_um;
  g.ox_mm = map.origin_x_mm;
  g.oy_mm = map.origin_y_mm;
  g.label = map.target_layer;
  g.v = map.cells;
  write_grid_csv(g, path);
}

namespace {

PowerMap resample_area(const PowerMap& map, double new_pitch_um, int nxn, int nyn) {
  PowerMap out = blank(nxn, nyn, new_pitch_um,
                       {map.origin_x_mm, map.origin_y_mm, map.target_layer});
  const AxisOverlap ox = axis_overlap(map.nx, map.pitch_um, nxn, new_pitch_um);
  const AxisOverlap oy = axis_overlap(map.ny, map.pitch_um, nyn, new_pitch_um);

  // x pass then y pass (the overlap weights are separable).
  std::vector<double> tmp(static_cast<size_t>(map.ny) * nxn, 0.0);
  for (int j = 0; j < map.ny; ++j) {
    for (int i = 0; i < map.nx; ++i) {
      const double p = map.at(i, j);
      if (p == 0.0) continue;
      const int j0 = ox.first[i];
      for (size_t k = 0; k < ox.frac[i].size(); ++k) {
        const int J = j0 + static_cast<int>(k);
        if (J >= nxn) break;
        tmp[static_cast<size_t>(j) * nxn + J] += p * ox.frac[i][k];
      }
    }
  }
  for (int j = 0; j < map.ny; ++j) {
    const int J0 = oy.first[j];
    for (size_t k = 0; k < oy.frac[j].size(); ++k) {
      const int J = J0 + static_cast<int>(k);
      if (J >= nyn) break;
      const double w = oy.frac[j][k];
      if (w == 0.0) continue;
      for (int I = 0; I < nxn; ++I)
        out.at(I, J) += tmp[static_cast<size_t>(j) * nxn + I] * w;
    }
  }
  return out;
}

PowerMap resample_bilinear(const PowerMap& map, double new_pitch_um, int nxn, int nyn) {
  PowerMap out = blank(nxn, nyn, new_pitch_um,
                       {map.origin_x_mm, map.origin_y_mm, map.target_layer});
  const double area_old = map.pitch_um * map.pitch_um;
  const double area_new = new_pitch_um * new_pitch_um;

  auto density = [&](int i, int j) { return map.at(i, j) / area_old; };

  std::vector<double> interp(static_cast<size_t>(nxn) * nyn);
  for (int J = 0; J < nyn; ++J) {
    const double yc = (J + 0.5) * new_pitch_um / map.pitch_um - 0.5;
    const double jc = std::clamp(yc, 0.0, static_cast<double>(map.ny - 1));
    const int j0 = std::min(static_cast<int>(jc), map.ny - 1);
    const int j1 = std::min(j0 + 1, map.ny - 1);
    const double fy = jc - j0;
    for (int I = 0; I < nxn; ++I) {
      const double xc = (I + 0.5) * new_pitch_um / map.pitch_um - 0.5;
      const double ic = std::clamp(xc, 0.0, static_cast<double>(map.nx - 1));
      const int i0 = std::min(static_cast<int>(ic), map.nx - 1);
      const int i1 = std::min(i0 + 1, map.nx - 1);
      const double fx = ic - i0;
      const double d = (1 - fy) * ((1 - fx) * density(i0, j0) + fx * density(i1, j0)) +
                       fy * ((1 - fx) * density(i0, j1) + fx * density(i1, j1));
      interp[static_cast<size_t>(J) * nxn + I] = d * area_new;
    }
  }

  // 3x3 binomial smoothing; border weights renormalized over valid cells.
  static const double kW[3] = {1.0, 2.0, 1.0};
  for (int J = 0; J < nyn; ++J) {
    for (int I = 0; I < nxn; ++I) {
      double acc = 0.0, wsum = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        const int j = J + dj;
        if (j < 0 || j >= nyn) continue;
        for (int di = -1; di <= 1; ++di) {
          const int i = I + di;
          if (i < 0 || i >= nxn) continue;
          const double w = kW[dj + 1] * kW[di + 1];
          acc += w * interp[static_cast<size_t>(j) * nxn + i];
          wsum += w;
        }
      }
      out.at(I, J) = acc / wsum;
    }
  }
  return out;
}

}  // namespace

PowerMap resample(const PowerMap& map, double new_pitch_um,
                  ResampleMethod method, FootprintFit fit) {
  if (!(new_pitch_um > 0.0)) throw ValidationError("non-positive pitch");
  if (map.nx < 1 || map.ny < 1) throw ValidationError("empty map");

  auto cells_along = [&](double extent_um) {
    const double n = extent_um / new_pitch_um;
    const double r = std::round(n);
    if (std::abs(n - r) <= 1e-6 * std::max(1.0, r)) return static_cast<int>(r);
    switch (fit) {
      case FootprintFit::kPad: return static_cast<int>(std::ceil(n - 1e-9));
      case FootprintFit::kCrop: return std::max(1, static_cast<int>(std::floor(n + 1e-9)));
      case FootprintFit::kExact: break;
    }
    std::ostringstream os;
    os << "footprint " << extent_um << " um is not an integer number of "
       << new_pitch_um << " um cells; pass FootprintFit::kPad or kCrop";
    throw ValidationError(os.str());
  };
  const int nxn = cells_along(map.nx * map.pitch_um);
  const int nyn = cells_along(map.ny * map.pitch_um);

  PowerMap out = method == ResampleMethod::kAreaWeighted
                     ? resample_area(map, new_pitch_um, nxn, nyn)
                     : resample_bilinear(map, new_pitch_um, nxn, nyn);
  renormalize(out, total_power(map));
  return out;
}

}  // namespace sipheat
