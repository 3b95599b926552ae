#include <algorithm>
#include <cmath>

#include "sipheat/errors.hpp"
#include "sipheat/system.hpp"
#include "sipheat/units.hpp"

namespace sipheat {

double LinearSystem::coefficient(std::int64_t i, std::int64_t j) const {
  for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
    if (col[k] == j) return val[k];
  return 0.0;
}

void LinearSystem::apply(const double* x, double* y) const {
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      acc += val[k] * x[col[k]];
    y[i] = acc;
  }
}

double LinearSystem::offdiag_abs_sum(std::int64_t i) const {
  double s = 0.0;
  for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
    if (col[k] != i) s += std::abs(val[k]);
  return s;
}

namespace {

// Series conductance between two adjacent cell centers: half cell of each
// material, harmonic combination. A in m^2, distances in m.
inline double face_g(double area_m2, double d1_m, double k1, double d2_m, double k2) {
  return area_m2 / (0.5 * d1_m / k1 + 0.5 * d2_m / k2);
}

// Convective exterior face: half-cell conduction in series with htc*A.
inline double conv_g(double area_m2, double d_m, double k, double htc) {
  return area_m2 / (0.5 * d_m / k + 1.0 / htc);
}

// Dirichlet face: half-cell conduction to the fixed face temperature.
inline double dirichlet_g(double area_m2, double d_m, double k) {
  return area_m2 / (0.5 * d_m / k);
}

}  // namespace

LinearSystem assemble_faces(std::shared_ptr<const Mesh> mesh_ptr,
                            const FaceSpecs& faces) {
  const Mesh& m = *mesh_ptr;
  LinearSystem sys;
  sys.mesh = mesh_ptr;
  sys.n = m.n_active;

  // Reference ambient: prefer a convective side, else 25 C; Dirichlet rises
  // are measured against it, which only shifts the solve variable.
  if (faces.top.kind == FaceBC::Kind::kConvective) {
    sys.ambient_ref_c = faces.top.ambient_c;
  } else if (faces.bottom.kind == FaceBC::Kind::kConvective) {
    sys.ambient_ref_c = faces.bottom.ambient_c;
  }
  sys.top_ambient_c = faces.top.ambient_c;
  sys.bottom_ambient_c = faces.bottom.ambient_c;

  const double pitch_m = m.pitch_um * kUmToM;
  const std::int64_t n = m.n_active;

  // Face conductances in +x/+y/+z; 0 where there is no active neighbor.
  std::vector<double> gxp(n, 0.0), gyp(n, 0.0), gzp(n, 0.0);
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    const int ix = m.ax[i], iy = m.ay[i], iz = m.az[i];
    const double dz_m = m.dz_um(iz) * kUmToM;
    const double a_x = pitch_m * dz_m;  // faces normal to x (and y)
    const std::int32_t jx = m.id_at(ix + 1, iy, iz);
    if (jx >= 0)
      gxp[i] = face_g(a_x, pitch_m, m.k_w_mk[i], pitch_m, m.k_w_mk[jx]);
    const std::int32_t jy = m.id_at(ix, iy + 1, iz);
    if (jy >= 0)
      gyp[i] = face_g(a_x, pitch_m, m.k_w_mk[i], pitch_m, m.k_w_mk[jy]);
    const std::int32_t jz = m.id_at(ix, iy, iz + 1);
    if (jz >= 0) {
      const double dz2_m = m.dz_um(iz + 1) * kUmToM;
      gzp[i] = face_g(pitch_m * pitch_m, dz_m, m.k_w_mk[i], dz2_m, m.k_w_mk[jz]);
    }
  }

  sys.row_ptr.assign(n + 1, 0);
  sys.diag.assign(n, 0.0);
  sys.b_rise_w.assign(n, 0.0);
  sys.zlow.assign(n, 0.0);

  struct Entry {
    std::int32_t col;
    double v;
  };
  std::vector<Entry> row;
  row.reserve(8);
  sys.col.reserve(static_cast<size_t>(n) * 7);
  sys.val.reserve(static_cast<size_t>(n) * 7);

  auto lateral_bc_value = [&](const FaceBC& bc, int along, int iz) {
    return bc.values->v[static_cast<size_t>(iz) * bc.values->nx + along];
  };

  for (std::int64_t i = 0; i < n; ++i) {
    const int ix = m.ax[i], iy = m.ay[i], iz = m.az[i];
    const double dz_m = m.dz_um(iz) * kUmToM;
    const double a_lat = pitch_m * dz_m;
    const double a_z = pitch_m * pitch_m;
    row.clear();
    double diag = 0.0;
    double rhs = m.power_w[i];

    auto couple = [&](std::int32_t j, double g) {
      row.push_back({j, -g});
      diag += g;
    };
    auto fixed_face = [&](double g, double t_c, bool count_dirichlet) {
      diag += g;
      rhs += g * (t_c - sys.ambient_ref_c);
      sys.boundary_conductance_w_k += g;
      if (count_dirichlet)
        sys.dirichlet_faces.push_back({static_cast<std::int32_t>(i), g, t_c});
    };

    // x- / y- / z- / z+ / y+ / x+ in ascending column order.
    const std::int32_t jxm = m.id_at(ix - 1, iy, iz);
    if (jxm >= 0) couple(jxm, gxp[jxm]);
    const std::int32_t jym = m.id_at(ix, iy - 1, iz);
    if (jym >= 0) couple(jym, gyp[jym]);
    const std::int32_t jzm = m.id_at(ix, iy, iz - 1);
    if (jzm >= 0) {
      couple(jzm, gzp[jzm]);
      sys.zlow[i] = gzp[jzm];
    }
    std::sort(row.begin(), row.end(),
              [](const Entry& a, const Entry& b) { return a.col < b.col; });
    const size_t diag_pos = row.size();
    row.push_back({static_cast<std::int32_t>(i), 0.0});  // patched below
    {
      const std::int32_t jz = m.id_at(ix, iy, iz + 1);
      if (jz >= 0) couple(jz, gzp[i]);
      const std::int32_t jy = m.id_at(ix, iy + 1, iz);
      if (jy >= 0) couple(jy, gyp[i]);
      const std::int32_t jx = m.id_at(ix + 1, iy, iz);
      if (jx >= 0) couple(jx, gxp[i]);
    }
    std::sort(row.begin() + diag_pos + 1, row.end(),
              [](const Entry& a, const Entry& b) { return a.col < b.col; });

    // Exterior horizontal faces. Boundary conditions apply only on the
    // outermost z planes; interior steps stay adiabatic.
    if (iz == m.nz - 1) {
      const FaceBC& bc = faces.top;
      if (bc.kind == FaceBC::Kind::kConvective && bc.htc_w_m2k > 0.0) {
        const double g = conv_g(a_z, dz_m, m.k_w_mk[i], bc.htc_w_m2k);
        diag += g;
        rhs += g * (bc.ambient_c - sys.ambient_ref_c);
        sys.boundary_conductance_w_k += g;
        sys.top_faces.push_back(
            {static_cast<std::int32_t>(i), g, bc.htc_w_m2k * a_z});
      } else if (bc.kind == FaceBC::Kind::kDirichlet) {
        fixed_face(dirichlet_g(a_z, dz_m, m.k_w_mk[i]), bc.values->at(ix, iy), true);
      }
    }
    if (iz == 0) {
      const FaceBC& bc = faces.bottom;
      if (bc.kind == FaceBC::Kind::kConvective && bc.htc_w_m2k > 0.0) {
        const double g = conv_g(a_z, dz_m, m.k_w_mk[i], bc.htc_w_m2k);
        diag += g;
        rhs += g * (bc.ambient_c - sys.ambient_ref_c);
        sys.boundary_conductance_w_k += g;
        sys.bottom_faces.push_back(
            {static_cast<std::int32_t>(i), g, bc.htc_w_m2k * a_z});
      } else if (bc.kind == FaceBC::Kind::kDirichlet) {
        fixed_face(dirichlet_g(a_z, dz_m, m.k_w_mk[i]), bc.values->at(ix, iy), true);
      }
    }
    if (ix == 0 && faces.xm.kind == FaceBC::Kind::kDirichlet)
      fixed_face(dirichlet_g(a_lat, pitch_m, m.k_w_mk[i]),
                 lateral_bc_value(faces.xm, iy, iz), true);
    if (ix == m.nx - 1 && faces.xp.kind == FaceBC::Kind::kDirichlet)
      fixed_face(dirichlet_g(a_lat, pitch_m, m.k_w_mk[i]),
                 lateral_bc_value(faces.xp, iy, iz), true);
    if (iy == 0 && faces.ym.kind == FaceBC::Kind::kDirichlet)
      fixed_face(dirichlet_g(a_lat, pitch_m, m.k_w_mk[i]),
                 lateral_bc_value(faces.ym, ix, iz), true);
    if (iy == m.ny - 1 && faces.yp.kind == FaceBC::Kind::kDirichlet)
      fixed_face(dirichlet_g(a_lat, pitch_m, m.k_w_mk[i]),
                 lateral_bc_value(faces.yp, ix, iz), true);

    row[diag_pos].v = diag;
    sys.diag[i] = diag;
    sys.b_rise_w[i] = rhs;
    for (const Entry& e : row) {
      sys.col.push_back(e.col);
      sys.val.push_back(e.v);
    }
    sys.row_ptr[i + 1] = static_cast<std::int64_t>(sys.col.size());
  }

  return sys;
}

LinearSystem assemble(std::shared_ptr<const Mesh> mesh,
                      const BoundaryCondition& top,
                      const BoundaryCondition& bottom) {
  FaceSpecs faces;
  faces.top = {FaceBC::Kind::kConvective, top.htc_w_m2k, top.ambient_c, nullptr};
  faces.bottom = {FaceBC::Kind::kConvective, bottom.htc_w_m2k, bottom.ambient_c, nullptr};
  if (top.htc_w_m2k <= 0.0) faces.top.kind = FaceBC::Kind::kAdiabatic;
  if (bottom.htc_w_m2k <= 0.0) faces.bottom.kind = FaceBC::Kind::kAdiabatic;
  return assemble_faces(std::move(mesh), faces);
}

}  // namespace sipheat
