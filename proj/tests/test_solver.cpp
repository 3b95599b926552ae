#include <doctest.h>

#include <cmath>
#include <random>

#include "sipheat/errors.hpp"
#include "sipheat/solver.hpp"
#include "test_support.hpp"

using namespace sipheat;
using namespace sipheat::testing;

namespace {

std::shared_ptr<Mesh> meshed(const PackageStack& s, double pitch_um,
                             ZPolicy zp = ZPolicy::MaxAspect(1.0)) {
  MeshOptions mo;
  mo.pitch_um = pitch_um;
  mo.z_policy = zp;
  return std::make_shared<Mesh>(discretize(s, mo));
}

}  // namespace

TEST_CASE("zero power solves to ambient in at most one iteration") {
  auto s = slab_stack({{400, 10}}, 1.0, 1000, 200);
  auto m = meshed(s, 100.0);
  const auto sys = assemble(m, s.top, s.bottom);
  const auto f = solve(sys);
  CHECK(f.stats.iterations <= 1);
  for (double t : f.t_c) CHECK(t == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("analytic slab: surface temperatures and through-thickness drop") {
  // 1 x 1 mm slab, t = 400 um, k = 10, top htc 1000, adiabatic elsewhere,
  // uniform flux injected at the base through the heater layer.
  const double t_um = 400, k = 10, h = 1000, q = 2.0;  // W over 1 mm^2
  const double q_flux = q / 1e-6;                      // W/m^2
  auto s = slab_stack({{t_um, k}}, 1.0, h, 0);
  auto m = meshed(s, 100.0);  // dz = 100 um = t/4
  attach_power(*m, gen_uniform(q, 10, 10, 100.0, {0, 0, "heater"}));
  const auto sys = assemble(m, s.top, s.bottom);
  SolverOptions so;
  so.tol = 1e-12;
  const auto f = solve(sys, so);

  const std::vector<Slab> chain{{1.0, 1e4}, {t_um, k}};
  const double t_top_expect = chain_top_surface(chain, q_flux, h, 25.0);
  const double dt_expect = q_flux * (t_um * 1e-6) / k;

  const Grid2D top = surface_temperature(f, sys, true);
  const Grid2D bot = surface_temperature(f, sys, false);
  for (double v : top.v)
    CHECK(std::abs(v - t_top_expect) <= 1e-3 * (t_top_expect - 25.0));
  const double dt_solved = bot.v.front() - top.v.front();
  CHECK(std::abs(dt_solved - dt_expect) <= 1e-3 * dt_expect);

  // Cell centers match the continuous profile (finite volumes are nodally
  // exact in 1D).
  for (int iz = 1; iz < m->nz; ++iz) {
    const double z = m->z_center_um(iz);
    const double expect = chain_t_at(chain, q_flux, h, 25.0, z);
    CHECK(f.at(4, 7, iz) == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("two-layer series resistance matches the hand chain") {
  const double q = 1.0;  // W over 1 mm^2
  const double q_flux = q / 1e-6;
  auto s = slab_stack({{300, 135}, {200, 71}}, 1.0, 2000, 0);
  auto m = meshed(s, 50.0);
  attach_power(*m, gen_uniform(q, 20, 20, 50.0, {0, 0, "heater"}));
  const auto sys = assemble(m, s.top, s.bottom);
  SolverOptions so;
  so.tol = 1e-12;
  const auto f = solve(sys, so);

  const std::vector<Slab> chain{{1.0, 1e4}, {300, 135}, {200, 71}};
  const double expect = chain_bottom_surface(chain, q_flux, 2000, 25.0);
  const Grid2D bot = surface_temperature(f, sys, false);
  CHECK(std::abs(bot.v.front() - expect) <= 1e-3 * (expect - 25.0));
}

TEST_CASE("matrix contracts") {
  auto s = three_layer_stack();
  auto m = meshed(s, 200.0, ZPolicy::MaxAspect(2.0));
  attach_power(*m, gen_center_focused(1.0, 10, 10, 200.0, {0, 0, "src"}, 0.25));
  const auto sys = assemble(m, s.top, s.bottom);

  SUBCASE("exact symmetry") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::int64_t i = static_cast<std::int64_t>(rng() % sys.n);
      for (std::int64_t k = sys.row_ptr[i]; k < sys.row_ptr[i + 1]; ++k) {
        const std::int64_t j = sys.col[k];
        CHECK(sys.coefficient(i, j) == sys.coefficient(j, i));
      }
    }
  }

  SUBCASE("row sums equal the boundary conductance of the row") {
    double worst = 0.0;
    for (std::int64_t i = 0; i < sys.n; ++i) {
      double row_sum = 0.0;
      for (std::int64_t k = sys.row_ptr[i]; k < sys.row_ptr[i + 1]; ++k)
        row_sum += sys.val[k];
      // Interior rows sum to zero; boundary rows to their convective g.
      double g_bc = 0.0;
      for (const auto& fc : sys.top_faces)
        if (fc.row == i) g_bc += fc.g_w_k;
      for (const auto& fc : sys.bottom_faces)
        if (fc.row == i) g_bc += fc.g_w_k;
      worst = std::max(worst, std::abs(row_sum - g_bc) / std::max(1.0, sys.diag[i]));
    }
    CHECK(worst <= 1e-12);
  }

  SUBCASE("diagonal dominance") {
    for (std::int64_t i = 0; i < sys.n; ++i)
      CHECK(sys.diag[i] >= sys.offdiag_abs_sum(i) * (1.0 - 1e-12));
  }
}

TEST_CASE("face conductance is the series combination") {
  // Two stacked voxels, equal half thickness d/2 = 50 um, k1 = 135, k2 = 71,
  // area 1 mm x 1 mm.
  auto s = slab_stack({{100, 135}, {100, 71}}, 1.0, 1000, 0);
  MeshOptions mo;
  mo.pitch_um = 1000.0;
  mo.z_policy = ZPolicy::OneCellPerLayer();
  auto m = std::make_shared<Mesh>(discretize(s, mo));
  const auto sys = assemble(m, s.top, s.bottom);
  const std::int32_t a = m->id_at(0, 0, 1);
  const std::int32_t b = m->id_at(0, 0, 2);
  const double area = 1e-3 * 1e-3;
  const double expect = area / (0.5 * 100e-6 / 135.0 + 0.5 * 100e-6 / 71.0);
  CHECK(sys.coefficient(a, b) == doctest::Approx(-expect).epsilon(1e-12));

  // Same material: reduces to k*A/d exactly.
  auto s2 = slab_stack({{100, 135}, {100, 135}}, 1.0, 1000, 0);
  auto m2 = std::make_shared<Mesh>(discretize(s2, mo));
  const auto sys2 = assemble(m2, s2.top, s2.bottom);
  const std::int32_t a2 = m2->id_at(0, 0, 1);
  const std::int32_t b2 = m2->id_at(0, 0, 2);
  CHECK(sys2.coefficient(a2, b2) ==
        doctest::Approx(-135.0 * area / 100e-6).epsilon(1e-12));
}

TEST_CASE("no heat escape path") {
  auto s = slab_stack({{400, 10}}, 1.0, 0, 0);  // both faces adiabatic
  auto m = meshed(s, 100.0);
  attach_power(*m, gen_uniform(1.0, 10, 10, 100.0, {0, 0, "slab0"}));
  const auto sys = assemble(m, s.top, s.bottom);  // assembles fine
  CHECK(sys.n > 0);
  CHECK_THROWS_WITH_AS(solve(sys), doctest::Contains("no heat escape path"),
                       SolveError);
}

TEST_CASE("linearity and superposition") {
  auto s = three_layer_stack();
  const auto mk = [&](double total, double conc) {
    auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));
    attach_power(*m, gen_center_focused(total, 20, 20, 100.0, {0, 0, "src"}, conc));
    return m;
  };
  SolverOptions so;
  so.tol = 1e-10;

  SUBCASE("doubling power doubles every rise") {
    auto m1 = mk(1.0, 0.25);
    auto m2 = mk(2.0, 0.25);
    const auto f1 = solve(assemble(m1, s.top, s.bottom), so);
    const auto f2 = solve(assemble(m2, s.top, s.bottom), so);
    const double scale = f1.max_c() - 25.0;
    for (size_t i = 0; i < f1.t_c.size(); ++i) {
      CHECK(std::abs((f2.t_c[i] - 25.0) - 2.0 * (f1.t_c[i] - 25.0)) <=
            10 * so.tol * scale + 1e-12);
    }
  }

  SUBCASE("sum of two loads equals the solve of the summed load") {
    auto ma = mk(1.0, 0.25);
    auto mb = mk(0.7, 1.0);
    auto mc = mk(1.0, 0.25);
    attach_power(*mc, gen_center_focused(0.7, 20, 20, 100.0, {0, 0, "src"}, 1.0));
    const auto fa = solve(assemble(ma, s.top, s.bottom), so);
    const auto fb = solve(assemble(mb, s.top, s.bottom), so);
    const auto fc = solve(assemble(mc, s.top, s.bottom), so);
    const double scale = fc.max_c() - 25.0;
    for (size_t i = 0; i < fa.t_c.size(); ++i) {
      const double sum = (fa.t_c[i] - 25.0) + (fb.t_c[i] - 25.0);
      CHECK(std::abs((fc.t_c[i] - 25.0) - sum) <= 10 * so.tol * scale + 1e-12);
    }
  }
}

TEST_CASE("mirror symmetry is preserved") {
  auto s = three_layer_stack();
  auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));
  attach_power(*m, gen_center_focused(1.0, 20, 20, 100.0, {0, 0, "src"}, 0.25));
  const auto f = solve(assemble(m, s.top, s.bottom), SolverOptions{});
  const double scale = f.max_c() - 25.0;
  for (int iz = 0; iz < m->nz; ++iz) {
    for (int iy = 0; iy < m->ny; ++iy) {
      for (int ix = 0; ix < m->nx; ++ix) {
        const double a = f.at(ix, iy, iz);
        CHECK(std::abs(a - f.at(m->nx - 1 - ix, iy, iz)) <= 1e-7 * scale + 1e-12);
        CHECK(std::abs(a - f.at(ix, m->ny - 1 - iy, iz)) <= 1e-7 * scale + 1e-12);
      }
    }
  }
}

TEST_CASE("minimum principle on randomized cases") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const double k1 = 1.0 + static_cast<double>(rng() % 400);
    const double k2 = 0.5 + static_cast<double>(rng() % 50) / 10.0;
    const double h_top = 100.0 + static_cast<double>(rng() % 5000);
    const double h_bot = static_cast<double>(rng() % 500);
    auto s = slab_stack({{50 + static_cast<double>(rng() % 400), k1},
                         {5 + static_cast<double>(rng() % 20), k2}},
                        1.0, h_top, h_bot);
    auto m = meshed(s, 125.0, ZPolicy::MaxAspect(4.0));
    attach_power(*m, gen_clustered(0.5 + static_cast<double>(rng() % 30) / 10.0, 8,
                                   8, 125.0, {0, 0, "slab1"}, 4, 2.0, rng()));
    const auto f = solve(assemble(m, s.top, s.bottom), SolverOptions{});
    CHECK(f.min_c() >= 25.0 - 1e-6);
  }
}

TEST_CASE("jacobi and line preconditioners agree") {
  auto s = three_layer_stack();
  auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));
  attach_power(*m, gen_center_focused(1.0, 20, 20, 100.0, {0, 0, "src"}, 0.1));
  const auto sys = assemble(m, s.top, s.bottom);
  SolverOptions jac;
  jac.precond = Preconditioner::kJacobi;
  SolverOptions lin;
  lin.precond = Preconditioner::kLine;
  const auto fj = solve(sys, jac);
  const auto fl = solve(sys, lin);
  const double scale = fl.max_c() - 25.0;
  for (size_t i = 0; i < fj.t_c.size(); ++i)
    CHECK(std::abs(fj.t_c[i] - fl.t_c[i]) <= 100 * jac.tol * scale + 1e-12);
  CHECK(fl.stats.iterations <= fj.stats.iterations);
}

TEST_CASE("deterministic mode is bit-stable across thread counts") {
  auto s = three_layer_stack();
  auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));
  attach_power(*m, gen_clustered(1.0, 20, 20, 100.0, {0, 0, "src"}, 4, 2.5, 9));
  const auto sys = assemble(m, s.top, s.bottom);
  SolverOptions a;
  a.threads = 1;
  SolverOptions b;
  b.threads = 2;
  const auto fa = solve(sys, a);
  const auto fb = solve(sys, b);
  CHECK(fa.t_c == fb.t_c);
  CHECK(fa.stats.iterations == fb.stats.iterations);
}

TEST_CASE("non-convergence carries the best iterate") {
  auto s = three_layer_stack();
  auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));
  attach_power(*m, gen_center_focused(1.0, 20, 20, 100.0, {0, 0, "src"}, 0.25));
  const auto sys = assemble(m, s.top, s.bottom);
  SolverOptions so;
  so.max_iter = 2;
  try {
    solve(sys, so);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.stats.iterations == 2);
    CHECK(e.stats.rel_residual > 0.0);
    REQUIRE(e.best != nullptr);
    CHECK(e.best->t_c.size() == static_cast<size_t>(sys.n));
  }
}

TEST_CASE("energy balance") {
  auto s = three_layer_stack();
  auto m = meshed(s, 100.0, ZPolicy::MaxAspect(2.0));

  SUBCASE("zero power balances trivially") {
    const auto sys = assemble(m, s.top, s.bottom);
    const auto f = solve(sys);
    const auto eb = energy_balance(f, sys);
    CHECK(eb.residual_frac == 0.0);
    CHECK(eb.q_top_w == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(eb.q_bottom_w == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("converged solve closes the balance") {
    attach_power(*m, gen_center_focused(2.0, 20, 20, 100.0, {0, 0, "src"}, 0.25));
    const auto sys = assemble(m, s.top, s.bottom);
    const auto f = solve(sys, SolverOptions{});
    const auto eb = energy_balance(f, sys);
    CHECK(eb.residual_frac <= 1e-6);
    CHECK(eb.q_top_w > eb.q_bottom_w);  // htc 5000 up vs 200 down
  }
}

TEST_CASE("grid convergence on the analytic slab is Richardson-consistent") {
  const double q = 2.0;
  std::vector<double> peaks;
  for (double pitch : {100.0, 50.0, 25.0}) {
    auto s = slab_stack({{400, 10}}, 1.0, 1000, 0);
    auto m = meshed(s, pitch, ZPolicy::MaxAspect(1.0));
    const int n = static_cast<int>(std::lround(1000.0 / pitch));
    attach_power(*m, gen_uniform(q, n, n, pitch, {0, 0, "heater"}));
    const auto f = solve(assemble(m, s.top, s.bottom), SolverOptions{});
    peaks.push_back(f.max_c());
  }
  const double d1 = std::abs(peaks[1] - peaks[0]);
  const double d2 = std::abs(peaks[2] - peaks[1]);
  CHECK(d1 > 0.0);
  CHECK(d2 < d1);
}
