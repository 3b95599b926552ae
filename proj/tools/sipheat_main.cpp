// sipheat CLI: scenario-driven steady-state thermal runs on chiplet SiP
// stacks. Exit codes: 0 ok, 2 validation/parse, 3 convergence, 4 I/O.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sipheat/metrics.hpp"
#include "sipheat/scenario.hpp"
#include "sipheat/solver.hpp"
#include "sipheat/stack.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

int exit_code_for(const sipheat::SweepFailure& f) {
  if (f.category == "convergence") return kExitConvergence;
  if (f.category == "io") return kExitIo;
  if (f.category == "validation") return kExitValidation;
  return 1;
}

void print_run(const sipheat::RunSummary& r) {
  std::printf("%-28s %-6s map=%-22s peak=%.4f C", r.name.c_str(), r.pdn.c_str(),
              r.map_label.c_str(), r.global_peak.t_c);
  if (r.local_peak) std::printf("  local peak=%.4f C", r.local_peak->t_c);
  std::printf("  iters=%d\n", r.global_stats.iterations);
}

void print_sweep(const sipheat::SweepSummary& s) {
  for (const auto& r : s.runs) print_run(r);
  if (!s.pairs.empty()) {
    std::printf("\n%-24s %16s %16s %18s\n", "map", "FSPDN rise [K]",
                "BSPDN rise [K]", "BSPDN-FSPDN [K]");
    for (const auto& p : s.pairs) {
      std::printf("%-24s %16.4f %16.4f %18.4f\n", p.map_label.c_str(),
                  p.fspdn_rise_k, p.bspdn_rise_k, p.peak_delta_k);
    }
  }
  for (const auto& f : s.failures) {
    std::fprintf(stderr, "FAILED %s [%s]: %s\n", f.scenario.c_str(),
                 f.category.c_str(), f.message.c_str());
  }
}

bool looks_like_scenario(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw sipheat::IoError("cannot open: " + p.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw sipheat::ParseError(p.string() + ": " + e.what());
  }
  return j.is_array() || j.contains("pdn") || j.contains("scenarios") ||
         j.contains("power");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sipheat - finite-volume steady-state thermal simulator for "
               "chiplet-based SiPs"};
  app.require_subcommand(1);

  int threads = 0;
  bool fast = false;
  std::string out_dir = "out";
  app.add_option("--threads", threads, "Worker threads (0 = library default)");
  app.add_flag("--fast", fast,
               "Allow non-deterministic parallel reductions (deterministic "
               "mode is the default)");
  app.add_option("--out-dir", out_dir, "Output directory for run artifacts");

  // validate
  std::string validate_path;
  auto* cmd_validate = app.add_subcommand(
      "validate", "Validate a stack, scenario or sweep file without solving");
  cmd_validate->add_option("file", validate_path)->required();

  // run
  std::string run_path;
  auto* cmd_run = app.add_subcommand("run", "Run one scenario file");
  cmd_run->add_option("scenario", run_path)->required();

  // sweep
  std::string sweep_path;
  auto* cmd_sweep = app.add_subcommand("sweep", "Run a scenario matrix");
  cmd_sweep->add_option("matrix", sweep_path)->required();

  // gen-map
  std::string gen_kind = "uniform";
  double gen_total = 2.0, gen_pitch = 5.0, gen_conc = 0.25, gen_peak_ratio = 3.0;
  int gen_nx = 400, gen_ny = 400, gen_block = 25;
  std::uint64_t gen_seed = 1;
  std::vector<double> gen_origin{0.0, 0.0};
  std::string gen_layer = "logic_feol", gen_out;
  auto* cmd_gen = app.add_subcommand("gen-map", "Generate a power-map CSV");
  cmd_gen->add_option("--generator", gen_kind,
                      "uniform|clustered|center_focused|workload_proxy");
  cmd_gen->add_option("--total-w", gen_total);
  cmd_gen->add_option("--nx", gen_nx);
  cmd_gen->add_option("--ny", gen_ny);
  cmd_gen->add_option("--pitch-um", gen_pitch);
  cmd_gen->add_option("--origin-mm", gen_origin)->expected(2);
  cmd_gen->add_option("--layer", gen_layer);
  cmd_gen->add_option("--block-cells", gen_block);
  cmd_gen->add_option("--peak-ratio", gen_peak_ratio);
  cmd_gen->add_option("--concentration", gen_conc);
  cmd_gen->add_option("--seed", gen_seed);
  cmd_gen->add_option("-o,--output", gen_out)->required();

  // export
  std::string exp_preset, exp_grid, exp_out, exp_scale = "auto";
  auto* cmd_export = app.add_subcommand(
      "export", "Write a preset stack file, or render a grid CSV as a heatmap");
  cmd_export->add_option("--stack-preset", exp_preset,
                         "SIP_25D|STACK1_FSPDN|STACK2_BSPDN");
  cmd_export->add_option("--grid-csv", exp_grid, "Grid CSV to render as .ppm");
  cmd_export->add_option("--scale", exp_scale, "auto or <min>:<max> degC");
  cmd_export->add_option("-o,--output", exp_out)->required();

  CLI11_PARSE(app, argc, argv);

  sipheat::RunOptions opts;
  opts.out_dir = out_dir;
  opts.deterministic = !fast;
  opts.threads = threads;

  try {
    if (*cmd_validate) {
      const std::filesystem::path p = validate_path;
      if (looks_like_scenario(p)) {
        nlohmann::json probe;
        {
          std::ifstream in(p);
          probe = nlohmann::json::parse(in);
        }
        if (probe.is_array() || probe.contains("scenarios")) {
          for (const auto& sc : sipheat::sweep_from_file(p))
            sipheat::validate_scenario(sc);
        } else {
          sipheat::validate_scenario(sipheat::scenario_from_file(p));
        }
      } else {
        const auto stack = sipheat::load_stack(p);  // throws on violations
        for (const auto& w : stack.warnings)
          std::fprintf(stderr, "warning: %s\n", w.c_str());
      }
      std::printf("%s: OK\n", validate_path.c_str());
      return kExitOk;
    }

    if (*cmd_run) {
      const auto sc = sipheat::scenario_from_file(run_path);
      const auto r = sipheat::run_scenario(sc, opts);
      print_run(r);
      std::printf("report: %s\n", r.report_path.string().c_str());
      return kExitOk;
    }

    if (*cmd_sweep) {
      const auto scenarios = sipheat::sweep_from_file(sweep_path);
      const auto s = sipheat::run_sweep(scenarios, opts);
      print_sweep(s);
      if (!s.report_path.empty())
        std::printf("report: %s\n", s.report_path.string().c_str());
      if (!s.ok()) {
        int code = 1;
        for (const auto& f : s.failures) code = std::max(code, exit_code_for(f));
        return code;
      }
      return kExitOk;
    }

    if (*cmd_gen) {
      sipheat::MapFootprint at{gen_origin[0], gen_origin[1], gen_layer};
      sipheat::PowerMap map;
      if (gen_kind == "uniform") {
        map = sipheat::gen_uniform(gen_total, gen_nx, gen_ny, gen_pitch, at);
      } else if (gen_kind == "clustered") {
        map = sipheat::gen_clustered(gen_total, gen_nx, gen_ny, gen_pitch, at,
                                     gen_block, gen_peak_ratio, gen_seed);
      } else if (gen_kind == "center_focused") {
        map = sipheat::gen_center_focused(gen_total, gen_nx, gen_ny, gen_pitch, at,
                                          gen_conc);
      } else if (gen_kind == "workload_proxy") {
        map = sipheat::gen_clustered(gen_total, gen_nx, gen_ny, gen_pitch, at, 25,
                                     4.0, 97);
      } else {
        throw sipheat::ValidationError("unknown generator: " + gen_kind);
      }
      sipheat::save_power_map(map, gen_out);
      std::printf("%s: %dx%d cells, %.6g W\n", gen_out.c_str(), map.nx, map.ny,
                  sipheat::total_power(map));
      return kExitOk;
    }

    if (*cmd_export) {
      if (!exp_preset.empty()) {
        const auto p = sipheat::preset_from_name(exp_preset);
        if (!p) throw sipheat::ValidationError("unknown preset: " + exp_preset);
        sipheat::save_stack(sipheat::build_preset(*p), exp_out);
        std::printf("wrote %s\n", exp_out.c_str());
        return kExitOk;
      }
      if (!exp_grid.empty()) {
        const auto grid = sipheat::read_grid_csv(exp_grid);
        sipheat::HeatmapScale scale = sipheat::HeatmapScale::Auto();
        if (exp_scale != "auto") {
          const auto colon = exp_scale.find(':');
          if (colon == std::string::npos)
            throw sipheat::ValidationError("--scale wants auto or <min>:<max>");
          scale = sipheat::HeatmapScale::Fixed(std::stod(exp_scale.substr(0, colon)),
                                               std::stod(exp_scale.substr(colon + 1)));
        }
        sipheat::write_ppm(grid, exp_out, scale);
        std::printf("wrote %s\n", exp_out.c_str());
        return kExitOk;
      }
      throw sipheat::ValidationError("export needs --stack-preset or --grid-csv");
    }
  } catch (const sipheat::NonConvergenceError& e) {
    std::fprintf(stderr, "error (convergence): %s\n", e.what());
    return kExitConvergence;
  } catch (const sipheat::ParseError& e) {
    std::fprintf(stderr, "error (parse): %s\n", e.what());
    return kExitValidation;
  } catch (const sipheat::ValidationError& e) {
    std::fprintf(stderr, "error (validation): %s\n", e.what());
    return kExitValidation;
  } catch (const sipheat::IoError& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return kExitIo;
  } catch (const sipheat::SolveError& e) {
    std::fprintf(stderr, "error (solver): %s\n", e.what());
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
