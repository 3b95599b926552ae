#include <doctest.h>

#include <cmath>

#include "sipheat/refine.hpp"
#include "sipheat/system.hpp"
#include "test_support.hpp"

using namespace sipheat;
using namespace sipheat::testing;

namespace {

std::shared_ptr<Mesh> meshed(const PackageStack& s, double pitch_um, double aspect) {
  MeshOptions mo;
  mo.pitch_um = pitch_um;
  mo.z_policy = ZPolicy::MaxAspect(aspect);
  return std::make_shared<Mesh>(discretize(s, mo));
}

// Hand-built field over a mesh (no solve): t(x, y, z) via a callable.
template <typename F>
TemperatureField synthetic_field(std::shared_ptr<const Mesh> m, F&& f) {
  TemperatureField out;
  out.mesh = m;
  out.ambient_ref_c = 25.0;
  out.t_c.resize(m->n_active);
  for (std::int32_t id = 0; id < m->n_active; ++id) {
    out.t_c[id] = f(m->x_center_mm(m->ax[id]), m->y_center_mm(m->ay[id]),
                    m->z_center_um(m->az[id]));
  }
  return out;
}

}  // namespace

TEST_CASE("hottest window centers on the peak and clamps at edges") {
  auto s = three_layer_stack(2.0);
  auto m = meshed(s, 100.0, 2.0);

  SUBCASE("centered hotspot") {
    auto f = synthetic_field(m, [](double x, double y, double) {
      return 25.0 + 10.0 * std::exp(-((x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0)) / 0.01);
    });
    const Window w = find_hottest_window(f, 0.5, 0.5, "src", 25.0, "base_si", "cap_si");
    CHECK(w.core_mm.cx() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(w.core_mm.cy() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(w.rect_mm.contains(w.core_mm));
    // margin of 2 coarse cells on each free side
    CHECK(w.rect_mm.width() == doctest::Approx(0.5 + 2 * 0.2));
  }

  SUBCASE("two equal maxima pick the lowest voxel id") {
    auto f = synthetic_field(m, [](double, double, double) { return 25.0; });
    // Two equal spikes; the lower (x, then y) one must win.
    const std::int32_t a = m->id_at(3, 4, 1);
    const std::int32_t b = m->id_at(12, 15, 1);
    f.t_c[a] = f.t_c[b] = 60.0;
    const Window w = find_hottest_window(f, 0.4, 0.4, "src", 50.0, "base_si", "cap_si");
    CHECK(w.core_mm.cx() == doctest::Approx(m->x_center_mm(3)).epsilon(0.15));
    CHECK(w.core_mm.cy() == doctest::Approx(m->y_center_mm(4)).epsilon(0.15));
  }

  SUBCASE("corner hotspot clamps inside the footprint") {
    auto f = synthetic_field(m, [](double x, double y, double) {
      return 25.0 + 5.0 * std::exp(-(x * x + y * y) / 0.01);
    });
    const Window w = find_hottest_window(f, 0.6, 0.6, "src", 50.0, "base_si", "cap_si");
    CHECK(w.core_mm.x0 >= 0.0);
    CHECK(w.core_mm.y0 >= 0.0);
    CHECK(w.rect_mm.x0 >= 0.0);
    CHECK(w.rect_mm.y0 >= 0.0);
    CHECK(w.core_mm.width() == doctest::Approx(0.6));
  }

  SUBCASE("core larger than the footprint is rejected") {
    auto f = synthetic_field(m, [](double, double, double) { return 25.0; });
    CHECK_THROWS_AS(find_hottest_window(f, 5.0, 5.0, "src", 50.0, "base_si", "cap_si"),
                    ValidationError);
  }
}

TEST_CASE("boundary extraction") {
  auto s = three_layer_stack(2.0);
  auto m = meshed(s, 100.0, 2.0);

  Window w;
  w.core_mm = {0.7, 0.7, 1.3, 1.3};
  w.rect_mm = {0.5, 0.5, 1.5, 1.5};
  w.fine_pitch_um = 50.0;
  w.span_bottom = "base_si";
  w.span_top = "cap_si";

  SUBCASE("uniform field gives uniform boundary values") {
    auto f = synthetic_field(m, [](double, double, double) { return 25.0; });
    const LocalBCs bcs = extract_boundary(f, s, w);
    REQUIRE(bcs.xm);
    REQUIRE(bcs.xp);
    REQUIRE(bcs.ym);
    REQUIRE(bcs.yp);
    CHECK_FALSE(bcs.top);     // window spans the full stack height
    CHECK_FALSE(bcs.bottom);
    for (const auto* g : {&*bcs.xm, &*bcs.xp, &*bcs.ym, &*bcs.yp})
      for (double v : g->v) CHECK(v == doctest::Approx(25.0).epsilon(1e-12));
  }

  SUBCASE("linear field is reproduced on the faces") {
    auto f = synthetic_field(m, [](double x, double, double) { return 20.0 + 3.0 * x; });
    const LocalBCs bcs = extract_boundary(f, s, w);
    REQUIRE(bcs.xm);
    // xm face at x = 0.5: expect 20 + 3*0.5 = 21.5 (exact for linear fields).
    for (double v : bcs.xm->v) CHECK(v == doctest::Approx(21.5).epsilon(1e-9));
    REQUIRE(bcs.ym);
    const Mesh& lm = *bcs.local_mesh;
    for (int iz = 0; iz < lm.nz; ++iz) {
      for (int ia = 0; ia < lm.nx; ++ia) {
        const double x = lm.x_center_mm(ia);
        CHECK(bcs.ym->v[static_cast<size_t>(iz) * lm.nx + ia] ==
              doctest::Approx(20.0 + 3.0 * x).epsilon(1e-9));
      }
    }
  }

  SUBCASE("extrema are bounded by the global field") {
    auto f = synthetic_field(m, [](double x, double y, double z) {
      return 25.0 + std::sin(3 * x) * std::cos(2 * y) + z * 1e-3;
    });
    const LocalBCs bcs = extract_boundary(f, s, w);
    const double lo = f.min_c(), hi = f.max_c();
    for (const auto* g : {&*bcs.xm, &*bcs.xp, &*bcs.ym, &*bcs.yp}) {
      for (double v : g->v) {
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("local solve behaviors") {
  auto s = three_layer_stack(2.0);

  SUBCASE("zero power with uniform BCs is uniform") {
    auto m = meshed(s, 100.0, 2.0);
    auto f = synthetic_field(m, [](double, double, double) { return 25.0; });
    Window w;
    w.core_mm = {0.7, 0.7, 1.3, 1.3};
    w.rect_mm = {0.5, 0.5, 1.5, 1.5};
    w.fine_pitch_um = 50.0;
    w.span_bottom = "base_si";
    w.span_top = "cap_si";
    const LocalBCs bcs = extract_boundary(f, s, w);
    PowerMap zero = gen_uniform(0.0, 4, 4, 50.0, {0.9, 0.9, "src"});
    const LocalResult lr = solve_local(s, w, zero, bcs, SolverOptions{});
    for (double t : lr.field.t_c) CHECK(t == doctest::Approx(25.0).epsilon(1e-9));
  }

  SUBCASE("window covering the whole domain reproduces the global solve") {
    auto m = meshed(s, 100.0, 2.0);
    attach_power(*m, gen_center_focused(1.0, 20, 20, 100.0, {0, 0, "src"}, 0.25));
    SolverOptions so;
    const auto sys = assemble(m, s.top, s.bottom);
    const auto global = solve(sys, so);

    Window w;
    w.rect_mm = {0.0, 0.0, 2.0, 2.0};
    w.core_mm = w.rect_mm;
    w.fine_pitch_um = 100.0;  // same pitch
    w.span_bottom = "base_si";
    w.span_top = "cap_si";
    w.z_max_aspect = 2.0;  // match the global z policy
    const LocalBCs bcs = extract_boundary(global, s, w);
    CHECK_FALSE(bcs.xm);  // every face coincides with the global boundary
    CHECK_FALSE(bcs.top);
    const auto fine_map = gen_center_focused(1.0, 20, 20, 100.0, {0, 0, "src"}, 0.25);
    const LocalResult lr = solve_local(s, w, fine_map, bcs, so);
    REQUIRE(lr.field.t_c.size() == global.t_c.size());
    const double scale = global.max_c() - 25.0;
    for (size_t i = 0; i < global.t_c.size(); ++i)
      CHECK(std::abs(lr.field.t_c[i] - global.t_c[i]) <= 10 * so.tol * scale + 1e-12);
  }

  SUBCASE("global-local peak agrees with the monolithic fine solve") {
    // Coarse 40 um global, 10 um local window around a 0.5 mm hotspot.
    const double total = 1.0;
    auto coarse_map = gen_center_focused(total, 50, 50, 40.0, {0, 0, "src"}, 0.25);
    auto fine_map = gen_center_focused(total, 200, 200, 10.0, {0, 0, "src"}, 0.25);

    auto gm = meshed(s, 40.0, 8.0);
    attach_power(*gm, coarse_map);
    const auto global = solve(assemble(gm, s.top, s.bottom), SolverOptions{});

    const Window w =
        find_hottest_window(global, 1.0, 1.0, "src", 10.0, "base_si", "cap_si");
    const LocalBCs bcs = extract_boundary(global, s, w);
    const LocalResult lr = solve_local(s, w, fine_map, bcs, SolverOptions{});

    auto mono = meshed(s, 10.0, 2.0);
    attach_power(*mono, fine_map);
    const auto fine = solve(assemble(mono, s.top, s.bottom), SolverOptions{});

    const double rise_local = peak(lr.field, "src").t_c - 25.0;
    const double rise_mono = peak(fine, "src").t_c - 25.0;
    CHECK(std::abs(rise_local - rise_mono) <= 0.02 * rise_mono);
    // Refinement reveals a higher peak than the coarse pass resolved.
    CHECK(peak(lr.field, "src").t_c >= peak(global, "src").t_c - 1e-9);
  }
}
