#include "sipheat/refine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sipheat/errors.hpp"
#include "sipheat/system.hpp"

namespace sipheat {

namespace {

constexpr double kEdgeEpsMm = 1e-9;

double snap_down(double v, double origin, double step) {
  return origin + std::floor((v - origin) / step + 1e-9) * step;
}
double snap_up(double v, double origin, double step) {
  return origin + std::ceil((v - origin) / step - 1e-9) * step;
}

MeshOptions window_mesh_options(const Window& w) {
  MeshOptions mo;
  mo.pitch_um = w.fine_pitch_um;
  mo.z_policy = ZPolicy::MaxAspect(w.z_max_aspect);
  mo.clip_rect = w.rect_mm;
  mo.layer_span = std::make_pair(w.span_bottom, w.span_top);
  return mo;
}

}  // namespace

Window find_hottest_window(const TemperatureField& global_field,
                           double core_w_mm, double core_h_mm,
                           std::string_view layer, double fine_pitch_um,
                           std::string_view span_bottom,
                           std::string_view span_top, int margin_coarse_cells) {
  const Mesh& m = *global_field.mesh;
  const Rect plan = m.plan_rect();
  if (core_w_mm > plan.width() + kEdgeEpsMm || core_h_mm > plan.height() + kEdgeEpsMm)
    throw ValidationError("core size exceeds the simulated footprint");
  if (!(fine_pitch_um > 0.0) || fine_pitch_um > m.pitch_um + 1e-12)
    throw ValidationError("fine pitch must be positive and <= the global pitch");

  const PeakInfo hot = peak(global_field, layer);
  const double fp_mm = fine_pitch_um * 1e-3;

  // Core centered on the hottest voxel, snapped to the fine grid anchored at
  // the plan origin, then clamped inside the footprint.
  auto place = [&](double center, double size, double lo, double hi, double origin) {
    double a = snap_down(center - 0.5 * size, origin, fp_mm);
    const double n = std::round(size / fp_mm);
    const double snapped = n * fp_mm;
    a = std::clamp(a, lo, hi - snapped);
    return std::pair<double, double>{a, a + snapped};
  };
  const auto [cx0, cx1] = place(hot.x_mm, core_w_mm, plan.x0, plan.x1, plan.x0);
  const auto [cy0, cy1] = place(hot.y_mm, core_h_mm, plan.y0, plan.y1, plan.y0);

  Window w;
  w.core_mm = {cx0, cy0, cx1, cy1};
  w.fine_pitch_um = fine_pitch_um;
  w.span_bottom = std::string(span_bottom);
  w.span_top = std::string(span_top);
  w.margin_coarse_cells = margin_coarse_cells;

  const double margin = margin_coarse_cells * m.pitch_um * 1e-3;
  w.rect_mm.x0 = std::max(plan.x0, snap_down(cx0 - margin, plan.x0, fp_mm));
  w.rect_mm.y0 = std::max(plan.y0, snap_down(cy0 - margin, plan.y0, fp_mm));
  w.rect_mm.x1 = std::min(plan.x1, snap_up(cx1 + margin, plan.x0, fp_mm));
  w.rect_mm.y1 = std::min(plan.y1, snap_up(cy1 + margin, plan.y0, fp_mm));
  return w;
}

LocalBCs extract_boundary(const TemperatureField& global_field,
                          const PackageStack& stack, const Window& window) {
  const Mesh& gm = *global_field.mesh;
  const Rect gplan = gm.plan_rect();
  if (!gplan.expanded(kEdgeEpsMm).contains(window.rect_mm))
    throw ValidationError("window extends beyond the global domain");

  LocalBCs bcs;
  auto local = std::make_shared<Mesh>(discretize(stack, window_mesh_options(window)));
  bcs.local_mesh = local;
  bcs.global_peak = peak(global_field);
  bcs.global_min_c = global_field.min_c();
  bcs.global_max_c = global_field.max_c();

  const Mesh& lm = *local;
  const double fp_mm = lm.pitch_um * 1e-3;

  auto on_edge = [&](double a, double b) { return std::abs(a - b) <= 1e-6; };

  // Lateral faces: skip those lying on the global boundary (they keep the
  // original adiabatic condition).
  auto lateral = [&](bool x_face, bool positive) -> std::optional<Grid2D> {
    const double face_coord =
        x_face ? (positive ? lm.plan_rect().x1 : lm.plan_rect().x0)
               : (positive ? lm.plan_rect().y1 : lm.plan_rect().y0);
    const double global_edge =
        x_face ? (positive ? gplan.x1 : gplan.x0) : (positive ? gplan.y1 : gplan.y0);
    if (on_edge(face_coord, global_edge)) return std::nullopt;
    const int n_along = x_face ? lm.ny : lm.nx;
    Grid2D g;
    g.nx = n_along;
    g.ny = lm.nz;
    g.pitch_um = lm.pitch_um;
    g.label = x_face ? (positive ? "xp" : "xm") : (positive ? "yp" : "ym");
    g.v.resize(static_cast<size_t>(n_along) * lm.nz);
    for (int iz = 0; iz < lm.nz; ++iz) {
      const double z = lm.z_center_um(iz);
      for (int ia = 0; ia < n_along; ++ia) {
        const double along =
            (x_face ? lm.y0_mm : lm.x0_mm) + (ia + 0.5) * fp_mm;
        const double x = x_face ? face_coord : along;
        const double y = x_face ? along : face_coord;
        g.v[static_cast<size_t>(iz) * n_along + ia] = global_field.sample(x, y, z);
      }
    }
    return g;
  };
  bcs.xm = lateral(true, false);
  bcs.xp = lateral(true, true);
  bcs.ym = lateral(false, false);
  bcs.yp = lateral(false, true);

  // Horizontal cut faces only where the span truncates the stack.
  auto horizontal = [&](bool top) -> std::optional<Grid2D> {
    const double face_z = top ? lm.z_top_um() : lm.z_base_um();
    const double global_z = top ? gm.z_top_um() : gm.z_base_um();
    if (std::abs(face_z - global_z) <= 1e-6) return std::nullopt;
    Grid2D g;
    g.nx = lm.nx;
    g.ny = lm.ny;
    g.pitch_um = lm.pitch_um;
    g.ox_mm = lm.x0_mm;
    g.oy_mm = lm.y0_mm;
    g.label = top ? "top" : "bottom";
    g.v.resize(static_cast<size_t>(lm.nx) * lm.ny);
    for (int iy = 0; iy < lm.ny; ++iy) {
      for (int ix = 0; ix < lm.nx; ++ix) {
        g.at(ix, iy) = global_field.sample(lm.x_center_mm(ix), lm.y_center_mm(iy), face_z);
      }
    }
    return g;
  };
  bcs.top = horizontal(true);
  bcs.bottom = horizontal(false);
  return bcs;
}

LocalResult solve_local(const PackageStack& stack, const Window& window,
                        const PowerMap& fine_power, const LocalBCs& bcs,
                        const SolverOptions& opts) {
  std::shared_ptr<const Mesh> lm = bcs.local_mesh;
  if (!lm) {
    lm = std::make_shared<Mesh>(discretize(stack, window_mesh_options(window)));
  }
  if (!window.rect_mm.expanded(kEdgeEpsMm).contains(fine_power.rect())) {
    std::ostringstream os;
    os << "fine power map extends beyond the refinement window; enlarge the "
       << "window or crop the map";
    throw ValidationError(os.str());
  }

  auto mesh = std::make_shared<Mesh>(*lm);  // private copy carries the power
  attach_power(*mesh, fine_power);

  FaceSpecs faces;
  auto dirichlet = [&](const std::optional<Grid2D>& g) {
    FaceBC bc;
    if (g) {
      bc.kind = FaceBC::Kind::kDirichlet;
      bc.values = &*g;
    }
    return bc;
  };
  faces.xm = dirichlet(bcs.xm);
  faces.xp = dirichlet(bcs.xp);
  faces.ym = dirichlet(bcs.ym);
  faces.yp = dirichlet(bcs.yp);
  if (bcs.top) {
    faces.top = dirichlet(bcs.top);
  } else {
    faces.top = {FaceBC::Kind::kConvective, stack.top.htc_w_m2k, stack.top.ambient_c,
                 nullptr};
    if (stack.top.htc_w_m2k <= 0.0) faces.top.kind = FaceBC::Kind::kAdiabatic;
  }
  if (bcs.bottom) {
    faces.bottom = dirichlet(bcs.bottom);
  } else {
    faces.bottom = {FaceBC::Kind::kConvective, stack.bottom.htc_w_m2k,
                    stack.bottom.ambient_c, nullptr};
    if (stack.bottom.htc_w_m2k <= 0.0) faces.bottom.kind = FaceBC::Kind::kAdiabatic;
  }

  LinearSystem sys = assemble_faces(mesh, faces);
  LocalResult out{solve(sys, opts), bcs.global_peak};
  return out;
}

}  // namespace sipheat
