#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here is test-side only and must stay independent of the solver internals
// it checks.

#include <cmath>
#include <numeric>
#include <vector>

#include "sipheat/mesh.hpp"
#include "sipheat/power_map.hpp"
#include "sipheat/stack.hpp"

namespace sipheat::testing {

// ---------------------------------------------------------------------------
// Analytic 1D resistance-chain oracle: a stack of slabs with a uniform heat
// flux injected at the base and a convective top face. Temperatures are the
// exact continuous solution.
// ---------------------------------------------------------------------------

struct Slab {
  double thickness_um;
  double k_w_mk;
};

// Temperature at height z_um above the base for upward flux q'' (W/m^2).
inline double chain_t_at(const std::vector<Slab>& slabs, double q_flux_w_m2,
                         double htc, double ambient_c, double z_um) {
  double r = 1.0 / htc;  // from the top surface into the fluid
  double z_top = 0.0;
  for (const auto& s : slabs) z_top += s.thickness_um;
  double z_cursor = z_top;
  for (auto it = slabs.rbegin(); it != slabs.rend(); ++it) {
    const double lo = z_cursor - it->thickness_um;
    if (z_um >= z_cursor) break;
    const double covered = std::min(z_cursor, std::max(z_um, lo));
    r += (z_cursor - covered) * 1e-6 / it->k_w_mk;
    z_cursor = lo;
    if (z_um >= lo) break;
  }
  return ambient_c + q_flux_w_m2 * r;
}

inline double chain_top_surface(const std::vector<Slab>&, double q_flux_w_m2,
                                double htc, double ambient_c) {
  return ambient_c + q_flux_w_m2 / htc;
}

inline double chain_bottom_surface(const std::vector<Slab>& slabs,
                                   double q_flux_w_m2, double htc,
                                   double ambient_c) {
  return chain_t_at(slabs, q_flux_w_m2, htc, ambient_c, 0.0);
}

// ---------------------------------------------------------------------------
// Small stacks used across the solver/refine tests.
// ---------------------------------------------------------------------------

// Slabs with a thin high-k heater at the base so that power attached to the
// heater acts as a base-surface heat flux for the chain oracle.
inline PackageStack slab_stack(const std::vector<Slab>& slabs, double size_mm,
                               double top_htc, double bottom_htc,
                               double ambient_c = 25.0) {
  PackageStack s;
  Layer heater;
  heater.name = "heater";
  heater.dx_mm = heater.dy_mm = size_mm;
  heater.thickness_um = 1.0;
  heater.material = {"heater", 1e4};
  s.layers.push_back(heater);
  int i = 0;
  for (const auto& sl : slabs) {
    Layer l;
    l.name = "slab" + std::to_string(i++);
    l.dx_mm = l.dy_mm = size_mm;
    l.thickness_um = sl.thickness_um;
    l.material = {"m" + std::to_string(i), sl.k_w_mk};
    s.layers.push_back(l);
  }
  s.gap_fill = {"mold", 3.0};
  s.top = {top_htc, ambient_c};
  s.bottom = {bottom_htc, ambient_c};
  return s;
}

// Three-layer die-like stack for superposition/refinement tests: a silicon
// base, a thin low-k source layer and a silicon cap.
inline PackageStack three_layer_stack(double size_mm = 2.0) {
  PackageStack s;
  auto add = [&](const char* name, double t_um, const char* mat, double k) {
    Layer l;
    l.name = name;
    l.dx_mm = l.dy_mm = size_mm;
    l.thickness_um = t_um;
    l.material = {mat, k};
    s.layers.push_back(l);
  };
  add("base_si", 100, "silicon", 140);
  add("src", 2, "feol", 7.9);
  add("cap_si", 50, "silicon", 140);
  s.gap_fill = {"mold", 3.0};
  s.top = {5000, 25.0};
  s.bottom = {200, 25.0};
  return s;
}

// Brute-force conservative resampling oracle: O(n^2 m^2) rectangle clipping.
inline PowerMap resample_brute(const PowerMap& in, double new_pitch_um) {
  const int nxn = static_cast<int>(std::lround(in.nx * in.pitch_um / new_pitch_um));
  const int nyn = static_cast<int>(std::lround(in.ny * in.pitch_um / new_pitch_um));
  PowerMap out;
  out.nx = nxn;
  out.ny = nyn;
  out.pitch_um = new_pitch_um;
  out.origin_x_mm = in.origin_x_mm;
  out.origin_y_mm = in.origin_y_mm;
  out.target_layer = in.target_layer;
  out.cells.assign(static_cast<size_t>(nxn) * nyn, 0.0);
  const double cell_area = in.pitch_um * in.pitch_um;
  for (int J = 0; J < nyn; ++J) {
    for (int I = 0; I < nxn; ++I) {
      const double X0 = I * new_pitch_um, X1 = (I + 1) * new_pitch_um;
      const double Y0 = J * new_pitch_um, Y1 = (J + 1) * new_pitch_um;
      double acc = 0.0;
      for (int j = 0; j < in.ny; ++j) {
        for (int i = 0; i < in.nx; ++i) {
          const double x0 = i * in.pitch_um, x1 = (i + 1) * in.pitch_um;
          const double y0 = j * in.pitch_um, y1 = (j + 1) * in.pitch_um;
          const double ox = std::max(0.0, std::min(x1, X1) - std::max(x0, X0));
          const double oy = std::max(0.0, std::min(y1, Y1) - std::max(y0, Y0));
          acc += in.at(i, j) * (ox * oy) / cell_area;
        }
      }
      out.at(I, J) = acc;
    }
  }
  return out;
}

}  // namespace sipheat::testing
