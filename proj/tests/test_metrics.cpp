#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sipheat/metrics.hpp"
#include "sipheat/solver.hpp"
#include "sipheat/system.hpp"
#include "test_support.hpp"

using namespace sipheat;
using namespace sipheat::testing;

namespace {

std::shared_ptr<Mesh> small_mesh() {
  auto s = three_layer_stack(2.0);
  MeshOptions mo;
  mo.pitch_um = 100.0;
  mo.z_policy = ZPolicy::MaxAspect(2.0);
  return std::make_shared<Mesh>(discretize(s, mo));
}

TemperatureField uniform_field(std::shared_ptr<const Mesh> m, double t) {
  TemperatureField f;
  f.mesh = std::move(m);
  f.ambient_ref_c = 25.0;
  f.t_c.assign(f.mesh->n_active, t);
  return f;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("peak lookup") {
  auto m = small_mesh();
  auto f = uniform_field(m, 25.0);

  SUBCASE("uniform field reports the first voxel") {
    const auto p = peak(f);
    CHECK(p.t_c == 25.0);
    CHECK(m->id_at(p.ix, p.iy, p.iz) == 0);
  }

  SUBCASE("an injected maximum is found with its layer") {
    const std::int32_t id = m->id_at(7, 9, 2);
    f.t_c[id] = 99.0;
    const auto p = peak(f);
    CHECK(p.t_c == 99.0);
    CHECK(p.ix == 7);
    CHECK(p.iy == 9);
    const auto pl = peak(f, m->stack->layers[m->layer_of[id]].name);
    CHECK(pl.t_c == 99.0);
  }

  SUBCASE("layer peak never exceeds the full-field peak") {
    const std::int32_t id = m->id_at(3, 3, m->nz - 1);
    f.t_c[id] = 50.0;
    CHECK(peak(f, "src").t_c <= peak(f).t_c);
  }

  SUBCASE("unknown layer") { CHECK_THROWS_AS(peak(f, "nope"), ValidationError); }
}

TEST_CASE("delta report") {
  auto m = small_mesh();
  auto a = uniform_field(m, 30.0);

  SUBCASE("identical fields have zero deltas") {
    const auto d = delta_report(a, a, "src");
    CHECK(d.peak_delta_k == 0.0);
    CHECK(d.mean_delta_k == 0.0);
    CHECK(d.peak_sign == 0);
  }

  SUBCASE("a minus b orientation") {
    auto b = uniform_field(m, 31.0);  // b = a + 1 K
    const auto d = delta_report(a, b, "src");
    CHECK(d.peak_delta_k == doctest::Approx(-1.0));
    CHECK(d.mean_delta_k == doctest::Approx(-1.0));
    CHECK(d.peak_sign == -1);
  }

  SUBCASE("incompatible grids are rejected") {
    auto s = three_layer_stack(2.0);
    MeshOptions mo;
    mo.pitch_um = 200.0;
    mo.z_policy = ZPolicy::MaxAspect(2.0);
    auto m2 = std::make_shared<Mesh>(discretize(s, mo));
    auto b = uniform_field(m2, 30.0);
    CHECK_THROWS_AS(delta_report(a, b, "src"), ValidationError);
  }
}

TEST_CASE("lateral gradient") {
  auto m = small_mesh();
  TemperatureField f;
  f.mesh = m;
  f.ambient_ref_c = 25.0;
  f.t_c.resize(m->n_active);
  // 4 K/mm slope in x.
  for (std::int32_t id = 0; id < m->n_active; ++id)
    f.t_c[id] = 25.0 + 4.0 * m->x_center_mm(m->ax[id]);
  CHECK(max_lateral_gradient_k_mm(f, "src") == doctest::Approx(4.0).epsilon(1e-9));

  auto u = uniform_field(m, 25.0);
  CHECK(max_lateral_gradient_k_mm(u, "src") == 0.0);
}

TEST_CASE("heatmap export") {
  namespace fs = std::filesystem;
  auto m = small_mesh();
  const fs::path base = fs::temp_directory_path() / "sipheat_hm";

  SUBCASE("uniform field with a fixed scale is a single color") {
    auto f = uniform_field(m, 40.0);
    export_heatmap(f, "src", base, HeatmapScale::Fixed(25.0, 75.0));
    const std::string ppm = slurp(base.string() + ".ppm");
    const size_t header_end = ppm.find("255\n") + 4;
    const unsigned char r = ppm[header_end], g = ppm[header_end + 1],
                        b = ppm[header_end + 2];
    for (size_t i = header_end; i + 2 < ppm.size(); i += 3) {
      CHECK(static_cast<unsigned char>(ppm[i]) == r);
      CHECK(static_cast<unsigned char>(ppm[i + 1]) == g);
      CHECK(static_cast<unsigned char>(ppm[i + 2]) == b);
    }
  }

  SUBCASE("export is byte-deterministic") {
    TemperatureField f;
    f.mesh = m;
    f.ambient_ref_c = 25.0;
    f.t_c.resize(m->n_active);
    for (std::int32_t id = 0; id < m->n_active; ++id)
      f.t_c[id] = 25.0 + 0.1 * (id % 97);
    export_heatmap(f, "src", base, HeatmapScale::Fixed(25.0, 35.0));
    const std::string first = slurp(base.string() + ".ppm");
    export_heatmap(f, "src", base, HeatmapScale::Fixed(25.0, 35.0));
    CHECK(slurp(base.string() + ".ppm") == first);
  }

  SUBCASE("CSV twin reloads to the exact slice") {
    TemperatureField f;
    f.mesh = m;
    f.ambient_ref_c = 25.0;
    f.t_c.resize(m->n_active);
    for (std::int32_t id = 0; id < m->n_active; ++id)
      f.t_c[id] = 25.0 + 1e-3 * id + 0.3 * (id % 13);
    export_heatmap(f, "src", base, HeatmapScale::Auto());
    const Grid2D back = read_grid_csv(base.string() + ".csv");
    const Grid2D slice = f.layer_slice("src");
    REQUIRE(back.v.size() == slice.v.size());
    CHECK(back.v == slice.v);
    CHECK(back.pitch_um == slice.pitch_um);
    CHECK(back.label == "src");
  }

  fs::remove(base.string() + ".ppm");
  fs::remove(base.string() + ".csv");
}
