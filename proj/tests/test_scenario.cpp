#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sipheat/scenario.hpp"
#include "test_support.hpp"

using namespace sipheat;
namespace fs = std::filesystem;

namespace {

// Small file-backed stack so scenario runs stay fast in unit tests.
fs::path write_small_stack(const fs::path& dir) {
  const fs::path p = dir / "small_stack.json";
  save_stack(sipheat::testing::three_layer_stack(2.0), p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Scenario small_scenario(const fs::path& stack_file, const std::string& name,
                        const std::string& gen = "center_focused") {
  const std::string text = R"({
    "name": ")" + name + R"(",
    "pdn": "FSPDN",
    "stack": {"file": ")" + stack_file.filename().string() + R"("},
    "power": {"generator": ")" + gen + R"(", "total_w": 1.0, "pitch_um": 50,
              "core_mm": [1.0, 1.0], "layer": "src", "concentration": 0.25,
              "block_cells": 10, "seed": 5},
    "global_pitch_um": 100,
    "local": {"core_mm": [0.5, 0.5], "fine_pitch_um": 25,
              "span": ["base_si", "cap_si"]},
    "solver": {"tol": 1e-8}
  })";
  return scenario_from_json_text(text, name, stack_file.parent_path());
}

}  // namespace

TEST_CASE("scenario validation catches broken configs before solving") {
  SUBCASE("unknown preset") {
    const char* text = R"({"name": "x", "pdn": "FSPDN",
                           "stack": {"preset": "NOT_A_PRESET"}})";
    const auto sc = scenario_from_json_text(text, "test", ".");
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }
  SUBCASE("bad pdn") {
    const char* text = R"({"name": "x", "pdn": "SIDEWAYS"})";
    const auto sc = scenario_from_json_text(text, "test", ".");
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }
  SUBCASE("unknown key is a parse error") {
    const char* text = R"({"name": "x", "pdn": "FSPDN", "powr": {}})";
    CHECK_THROWS_AS(scenario_from_json_text(text, "test", "."), ParseError);
  }
  SUBCASE("missing power map file") {
    const char* text = R"({"name": "x", "pdn": "FSPDN",
                           "power": {"file": "no_such_map.csv"}})";
    const auto sc = scenario_from_json_text(text, "test", ".");
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }
}

TEST_CASE("run_scenario produces a report with peaks, energy split and ledger") {
  const fs::path dir = fs::temp_directory_path() / "sipheat_scen";
  fs::create_directories(dir);
  const fs::path stack_file = write_small_stack(dir);

  RunOptions opts;
  opts.out_dir = dir / "out";
  const auto r = run_scenario(small_scenario(stack_file, "small_cf"), opts);

  CHECK(r.global_peak.t_c > 25.0);
  REQUIRE(r.local_peak.has_value());
  CHECK(r.local_peak->t_c > 25.0);
  CHECK(r.energy.residual_frac <= 1e-6);
  CHECK_FALSE(r.assumptions.empty());  // resample note or power default
  CHECK(fs::exists(r.report_path));
  CHECK(fs::exists(opts.out_dir / "small_cf" / "global_src.ppm"));
  CHECK(fs::exists(opts.out_dir / "small_cf" / "local_src.csv"));
  CHECK(fs::exists(opts.out_dir / "small_cf" / "metadata.txt"));
  CHECK(fs::exists(opts.out_dir / "small_cf" / "assumptions.txt"));

  // Refinement reveals, never hides, the concentrated hotspot.
  CHECK(r.local_peak->t_c >= r.global_peak.t_c - 1e-9);

  fs::remove_all(dir);
}

TEST_CASE("deterministic reruns are byte-identical") {
  const fs::path dir = fs::temp_directory_path() / "sipheat_det";
  fs::create_directories(dir);
  const fs::path stack_file = write_small_stack(dir);
  const auto sc = small_scenario(stack_file, "det", "clustered");

  RunOptions a;
  a.out_dir = dir / "a";
  RunOptions b;
  b.out_dir = dir / "b";
  b.threads = 2;
  const auto ra = run_scenario(sc, a);
  const auto rb = run_scenario(sc, b);
  CHECK(slurp(ra.report_path) == slurp(rb.report_path));

  fs::remove_all(dir);
}

TEST_CASE("sweeps pair PDN variants per map label") {
  const fs::path dir = fs::temp_directory_path() / "sipheat_sweep";
  fs::create_directories(dir);
  const fs::path stack_file = write_small_stack(dir);

  // Both "PDN variants" use the same small stack file here; the pairing and
  // reporting machinery is what is under test.
  auto f = small_scenario(stack_file, "f_run");
  auto b = small_scenario(stack_file, "b_run");
  b.pdn = "BSPDN";

  RunOptions opts;
  opts.out_dir = dir / "out";

  SUBCASE("pairs and report") {
    const auto sum = run_sweep({f, b}, opts);
    CHECK(sum.ok());
    REQUIRE(sum.pairs.size() == 1);
    CHECK(sum.pairs.front().map_label == "center_focused_0.25");
    CHECK(sum.pairs.front().peak_delta_k ==
          doctest::Approx(0.0).epsilon(1e-9));  // identical stacks
    CHECK(fs::exists(sum.report_path));
  }

  SUBCASE("single scenario gives a degenerate sweep") {
    const auto sum = run_sweep({f}, opts);
    CHECK(sum.ok());
    CHECK(sum.pairs.empty());
    CHECK(sum.runs.size() == 1);
  }

  SUBCASE("failures are recorded and the sweep continues") {
    auto broken = f;
    broken.name = "broken";
    broken.stack_file = dir / "missing.json";
    const auto sum = run_sweep({broken, f, b}, opts);
    CHECK_FALSE(sum.ok());
    REQUIRE(sum.failures.size() == 1);
    CHECK(sum.failures.front().scenario == "broken");
    CHECK(sum.failures.front().category == "validation");
    CHECK(sum.runs.size() == 2);
    CHECK(sum.pairs.size() == 1);
  }

  SUBCASE("mismatched footprints fail the pair, not the sweep") {
    auto wide = b;
    wide.name = "wide";
    const fs::path wide_stack = dir / "wide_stack.json";
    save_stack(sipheat::testing::three_layer_stack(4.0), wide_stack);
    wide.stack_file = wide_stack;
    wide.power.core_w_mm = wide.power.core_h_mm = 1.0;
    const auto sum = run_sweep({f, wide}, opts);
    REQUIRE_FALSE(sum.failures.empty());
    CHECK(sum.failures.front().category == "validation");
    CHECK(sum.pairs.empty());
  }

  fs::remove_all(dir);
}

TEST_CASE("workload proxy is labeled and ledgered as synthetic") {
  const fs::path dir = fs::temp_directory_path() / "sipheat_proxy";
  fs::create_directories(dir);
  const fs::path stack_file = write_small_stack(dir);
  auto sc = small_scenario(stack_file, "proxy");
  sc.power.kind = PowerSpec::Kind::kWorkloadProxy;
  sc.power.label = "workload_proxy";
  sc.power.pitch_um = 40.0;  // 25x25 cells: one proxy sub-block
  sc.local.reset();
  RunOptions opts;
  opts.out_dir = dir / "out";
  const auto r = run_scenario(sc, opts);
  bool ledgered = false;
  for (const auto& a : r.assumptions)
    if (a.find("workload-proxy") != std::string::npos) ledgered = true;
  CHECK(ledgered);
  fs::remove_all(dir);
}
