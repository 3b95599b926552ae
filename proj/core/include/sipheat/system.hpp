#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sipheat/grid.hpp"
#include "sipheat/mesh.hpp"

namespace sipheat {

/// Boundary treatment of one exterior face of the meshed domain.
struct FaceBC {
  enum class Kind { kAdiabatic, kConvective, kDirichlet };
  Kind kind = Kind::kAdiabatic;
  double htc_w_m2k = 0.0;   // convective
  double ambient_c = 25.0;  // convective
  const Grid2D* values = nullptr;  // Dirichlet temperatures at face centers
};

/// Boundary specs for all six exterior faces. Horizontal faces apply only on
/// the outermost z planes; interior steps stay adiabatic. Lateral Dirichlet
/// grids are indexed (along-face, z-slab).
struct FaceSpecs {
  FaceBC top, bottom, xm, xp, ym, yp;
};

struct BoundaryFace {
  std::int32_t row;
  double g_w_k;   // series conductance cell-center -> ambient
  double ha_w_k;  // htc * face area (for surface reconstruction)
};

struct DirichletFace {
  std::int32_t row;
  double g_w_k;  // conductance cell-center -> fixed face temperature
  double t_c;
};

/// Sparse SPD conductance system G T = q in rise space (T relative to the
/// reference ambient). CSR, full symmetric storage, rows ordered like mesh
/// active ids.
class LinearSystem {
 public:
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::vector<double> diag;
  std::vector<double> b_rise_w;  // injected power + boundary rise terms
  double ambient_ref_c = 25.0;

  std::vector<BoundaryFace> top_faces, bottom_faces;
  std::vector<DirichletFace> dirichlet_faces;
  double boundary_conductance_w_k = 0.0;  // total coupling to fixed references
  double top_ambient_c = 25.0, bottom_ambient_c = 25.0;

  // z- coupling per row (0 where absent); columns are contiguous id runs, so
  // this is all the tridiagonal structure the line preconditioner needs.
  std::vector<double> zlow;

  std::shared_ptr<const Mesh> mesh;

  /// Matrix entry lookup (0 if structurally absent). For contract tests.
  double coefficient(std::int64_t i, std::int64_t j) const;
  /// y = G x
  void apply(const double* x, double* y) const;
  /// Sum of off-diagonal magnitudes of a row.
  double offdiag_abs_sum(std::int64_t i) const;
};

/// Assembles the 7-point finite-volume system with convective top/bottom
/// faces and adiabatic laterals. Face conductances between voxels use the
/// series (harmonic) combination of the two half-cell conductances;
/// convective faces use the series combination of half-cell conduction and
/// htc * A.
LinearSystem assemble(std::shared_ptr<const Mesh> mesh,
                      const BoundaryCondition& top,
                      const BoundaryCondition& bottom);

/// Generalized assembly with per-face boundary control (local refinement).
LinearSystem assemble_faces(std::shared_ptr<const Mesh> mesh,
                            const FaceSpecs& faces);

}  // namespace sipheat
