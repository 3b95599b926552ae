#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sipheat/refine.hpp"
#include "sipheat/solver.hpp"

namespace sipheat {

/// Power source of a scenario: one of the generators or a CSV map file.
struct PowerSpec {
  enum class Kind { kUniform, kClustered, kCenterFocused, kWorkloadProxy, kFile };
  Kind kind = Kind::kUniform;
  std::string label;          // pairing key in sweeps; defaults per kind
  double total_w = 2.0;       // generator total (documented default 2 W)
  bool total_defaulted = true;
  double pitch_um = 5.0;      // generator cell pitch
  double core_w_mm = 2.0, core_h_mm = 2.0;
  std::optional<std::pair<double, double>> origin_mm;  // default: die center
  std::string layer = "logic_feol";
  int block_cells = 25;
  double peak_ratio = 3.0;
  double concentration = 0.25;
  std::uint64_t seed = 1;
  std::filesystem::path file;  // kFile
};

struct LocalSpec {
  double core_w_mm = 2.0, core_h_mm = 2.0;
  double fine_pitch_um = 5.0;
  std::string span_bottom = "cc_ubumps";
  std::string span_top = "mem_si";
  int margin_coarse_cells = 2;
};

struct Scenario {
  std::string name;
  std::string pdn;  // "FSPDN" | "BSPDN"
  std::optional<std::string> stack_preset;       // default derives from pdn
  std::optional<std::filesystem::path> stack_file;
  PowerSpec power;
  double global_pitch_um = 200.0;
  double z_max_aspect_global = 8.0;
  std::optional<LocalSpec> local;
  SolverOptions solver;
  double io_power_w = 0.0;  // idle IO chiplet power (default 0, overridable)
};

/// Execution knobs shared by run/sweep (CLI global flags).
struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool deterministic = true;
  int threads = 0;
  bool write_artifacts = true;  // report.json, heatmaps, CSVs, metadata
};

Scenario scenario_from_file(const std::filesystem::path& path);
Scenario scenario_from_json_text(std::string_view text, std::string_view origin,
                                 const std::filesystem::path& base_dir);
/// Pre-flight checks (referenced files exist, preset known, spec coherent).
/// Throws ValidationError; never solves.
void validate_scenario(const Scenario& scenario);

/// Builds the scenario's power map at its native (fine) pitch.
PowerMap build_power_map(const Scenario& scenario, const PackageStack& stack,
                         std::vector<std::string>* assumptions);

struct RunSummary {
  std::string name, pdn, map_label;
  double total_power_w = 0.0;
  double ambient_c = 25.0;
  double footprint_w_mm = 0.0, footprint_h_mm = 0.0;  // global plan extent
  PeakInfo global_peak;
  double global_mean_c = 0.0;
  double global_grad_k_mm = 0.0;
  EnergyBalance energy;
  SolveStats global_stats;
  std::optional<PeakInfo> local_peak;
  std::optional<double> local_mean_c, local_grad_k_mm;
  std::optional<SolveStats> local_stats;
  std::vector<std::string> assumptions;
  std::filesystem::path report_path;  // empty when artifacts are off

  double peak_rise_k() const {
    return (local_peak ? local_peak->t_c : global_peak.t_c) - ambient_c;
  }
  double global_rise_k() const { return global_peak.t_c - ambient_c; }
};

/// Loads/generates inputs, runs the global solve, optional refinement and
/// metrics, and writes all artifacts under opts.out_dir/<scenario name>/.
RunSummary run_scenario(const Scenario& scenario, const RunOptions& opts);

struct SweepPair {
  std::string map_label;
  double peak_delta_k = 0.0;  // BSPDN - FSPDN (local peak when present)
  double global_peak_delta_k = 0.0;
  double fspdn_rise_k = 0.0, bspdn_rise_k = 0.0;
};

struct SweepFailure {
  std::string scenario;
  std::string category;  // "validation" | "convergence" | "io" | "error"
  std::string message;
};

struct SweepSummary {
  std::vector<RunSummary> runs;
  std::vector<SweepPair> pairs;  // in first-appearance order of map labels
  std::vector<SweepFailure> failures;
  std::filesystem::path report_path;
  bool ok() const { return failures.empty(); }
};

std::vector<Scenario> sweep_from_file(const std::filesystem::path& path);
/// Runs every scenario (failures are recorded, not fatal), pairs PDN
/// variants per map label and writes sweep_report.json.
SweepSummary run_sweep(const std::vector<Scenario>& scenarios,
                       const RunOptions& opts);

}  // namespace sipheat
