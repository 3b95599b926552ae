#include "sipheat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sipheat/system.hpp"

namespace sipheat {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Shipped stand-in for the unpublished workload-annotated map: a clustered
// map with pinned kernel parameters and seed, labeled as a proxy everywhere.
constexpr std::uint64_t kWorkloadProxySeed = 97;
constexpr double kWorkloadProxyPeakRatio = 4.0;
constexpr int kWorkloadProxyBlock = 25;

[[noreturn]] void fail(std::string_view origin, std::string_view what) {
  throw ParseError(std::string(origin) + ": " + std::string(what));
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                std::string_view ctx, std::string_view origin) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) fail(origin, std::string(ctx) + ": unknown key '" + it.key() + "'");
  }
}

std::string default_label(const PowerSpec& p) {
  switch (p.kind) {
    case PowerSpec::Kind::kUniform: return "uniform";
    case PowerSpec::Kind::kClustered: return "clustered";
    case PowerSpec::Kind::kWorkloadProxy: return "workload_proxy";
    case PowerSpec::Kind::kCenterFocused: {
      std::ostringstream os;
      os << "center_focused_" << p.concentration;
      return os.str();
    }
    case PowerSpec::Kind::kFile: return p.file.stem().string();
  }
  return "power";
}

PowerSpec parse_power(const json& j, std::string_view origin,
                      const std::filesystem::path& base_dir) {
  check_keys(j,
             {"generator", "file", "label", "total_w", "pitch_um", "core_mm",
              "origin_mm", "layer", "block_cells", "peak_ratio", "concentration",
              "seed"},
             "power", origin);
  PowerSpec p;
  if (j.contains("file")) {
    p.kind = PowerSpec::Kind::kFile;
    std::filesystem::path f = j["file"].get<std::string>();
    p.file = f.is_absolute() ? f : base_dir / f;
  } else {
    const std::string gen = j.value("generator", "uniform");
    if (gen == "uniform") {
      p.kind = PowerSpec::Kind::kUniform;
    } else if (gen == "clustered") {
      p.kind = PowerSpec::Kind::kClustered;
    } else if (gen == "center_focused") {
      p.kind = PowerSpec::Kind::kCenterFocused;
    } else if (gen == "workload_proxy") {
      p.kind = PowerSpec::Kind::kWorkloadProxy;
    } else {
      fail(origin, "power.generator must be uniform|clustered|center_focused|"
                   "workload_proxy (or give power.file)");
    }
  }
  if (j.contains("total_w")) {
    p.total_w = j["total_w"].get<double>();
    p.total_defaulted = false;
  }
  p.pitch_um = j.value("pitch_um", p.pitch_um);
  if (j.contains("core_mm")) {
    const auto& c = j["core_mm"];
    if (!c.is_array() || c.size() != 2) fail(origin, "power.core_mm wants [w, h]");
    p.core_w_mm = c[0].get<double>();
    p.core_h_mm = c[1].get<double>();
  }
  if (j.contains("origin_mm")) {
    const auto& o = j["origin_mm"];
    if (!o.is_array() || o.size() != 2) fail(origin, "power.origin_mm wants [x, y]");
    p.origin_mm = {o[0].get<double>(), o[1].get<double>()};
  }
  p.layer = j.value("layer", p.layer);
  p.block_cells = j.value("block_cells", p.block_cells);
  p.peak_ratio = j.value("peak_ratio", p.peak_ratio);
  p.concentration = j.value("concentration", p.concentration);
  p.seed = j.value("seed", p.seed);
  p.label = j.value("label", default_label(p));
  return p;
}

Scenario parse_scenario(const json& j, std::string_view origin,
                        const std::filesystem::path& base_dir) {
  check_keys(j,
             {"name", "pdn", "stack", "power", "global_pitch_um",
              "z_max_aspect_global", "local", "solver", "io_chiplet_power_w"},
             "scenario", origin);
  Scenario sc;
  sc.name = j.value("name", "scenario");
  if (!j.contains("pdn")) fail(origin, "scenario.pdn missing (FSPDN|BSPDN)");
  sc.pdn = j["pdn"].get<std::string>();

  if (j.contains("stack")) {
    const auto& s = j["stack"];
    check_keys(s, {"preset", "file"}, "stack", origin);
    if (s.contains("preset")) sc.stack_preset = s["preset"].get<std::string>();
    if (s.contains("file")) {
      std::filesystem::path f = s["file"].get<std::string>();
      sc.stack_file = f.is_absolute() ? f : base_dir / f;
    }
  }
  if (j.contains("power")) sc.power = parse_power(j["power"], origin, base_dir);
  sc.power.label = sc.power.label.empty() ? default_label(sc.power) : sc.power.label;
  sc.global_pitch_um = j.value("global_pitch_um", sc.global_pitch_um);
  sc.z_max_aspect_global = j.value("z_max_aspect_global", sc.z_max_aspect_global);
  if (j.contains("local") && !j["local"].is_null()) {
    const auto& l = j["local"];
    check_keys(l, {"core_mm", "fine_pitch_um", "span", "margin_coarse_cells"},
               "local", origin);
    LocalSpec ls;
    if (l.contains("core_mm")) {
      const auto& c = l["core_mm"];
      if (!c.is_array() || c.size() != 2) fail(origin, "local.core_mm wants [w, h]");
      ls.core_w_mm = c[0].get<double>();
      ls.core_h_mm = c[1].get<double>();
    } else {
      ls.core_w_mm = sc.power.core_w_mm;
      ls.core_h_mm = sc.power.core_h_mm;
    }
    ls.fine_pitch_um = l.value("fine_pitch_um", ls.fine_pitch_um);
    if (l.contains("span")) {
      const auto& s = l["span"];
      if (!s.is_array() || s.size() != 2) fail(origin, "local.span wants [bottom, top]");
      ls.span_bottom = s[0].get<std::string>();
      ls.span_top = s[1].get<std::string>();
    }
    ls.margin_coarse_cells = l.value("margin_coarse_cells", ls.margin_coarse_cells);
    sc.local = ls;
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"tol", "max_iter", "preconditioner"}, "solver", origin);
    sc.solver.tol = s.value("tol", sc.solver.tol);
    sc.solver.max_iter = s.value("max_iter", sc.solver.max_iter);
    const std::string pc = s.value("preconditioner", "two_level");
    if (pc == "two_level") {
      sc.solver.precond = Preconditioner::kTwoLevel;
    } else if (pc == "line") {
      sc.solver.precond = Preconditioner::kLine;
    } else if (pc == "jacobi") {
      sc.solver.precond = Preconditioner::kJacobi;
    } else {
      fail(origin, "solver.preconditioner must be two_level|line|jacobi");
    }
  }
  sc.io_power_w = j.value("io_chiplet_power_w", 0.0);
  return sc;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path.string(), e.what());
  }
  return j;
}

void deep_merge(json& base, const json& over) {
  if (!base.is_object() || !over.is_object()) {
    base = over;
    return;
  }
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key())) {
      deep_merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

PackageStack resolve_stack(const Scenario& sc) {
  if (sc.stack_file) return load_stack(*sc.stack_file);
  std::string name;
  if (sc.stack_preset) {
    name = *sc.stack_preset;
  } else {
    name = sc.pdn == "BSPDN" ? "STACK2_BSPDN" : "STACK1_FSPDN";
  }
  const auto p = preset_from_name(name);
  if (!p) throw ValidationError("unknown stack preset: " + name);
  return build_preset(*p);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

PeakInfo peak_in_rect(const TemperatureField& f, const Rect& rect) {
  const Mesh& m = *f.mesh;
  PeakInfo out;
  out.t_c = -1e300;
  bool any = false;
  for (std::int32_t id = 0; id < m.n_active; ++id) {
    const double x = m.x_center_mm(m.ax[id]), y = m.y_center_mm(m.ay[id]);
    if (!rect.contains(x, y)) continue;
    if (f.t_c[id] > out.t_c) {
      out.t_c = f.t_c[id];
      out.ix = m.ax[id];
      out.iy = m.ay[id];
      out.iz = m.az[id];
      out.x_mm = x;
      out.y_mm = y;
      out.z_um = m.z_center_um(m.az[id]);
      const int li = m.layer_of[id];
      out.layer = li >= 0 ? m.stack->layers[li].name : m.stack->gap_fill.name;
      any = true;
    }
  }
  if (!any) throw ValidationError("no voxels inside the reported core region");
  return out;
}

ojson peak_json(const PeakInfo& p) {
  ojson j;
  j["t_c"] = p.t_c;
  j["x_mm"] = p.x_mm;
  j["y_mm"] = p.y_mm;
  j["z_um"] = p.z_um;
  j["layer"] = p.layer;
  return j;
}

ojson stats_json(const SolveStats& s) {
  ojson j;
  j["iterations"] = s.iterations;
  j["rel_residual"] = s.rel_residual;
  j["converged"] = s.converged;
  j["preconditioner"] = s.preconditioner;
  j["deterministic"] = s.deterministic;
  return j;
}

}  // namespace

Scenario scenario_from_json_text(std::string_view text, std::string_view origin,
                                 const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  return parse_scenario(j, origin, base_dir);
}

Scenario scenario_from_file(const std::filesystem::path& path) {
  const json j = load_json(path);
  return parse_scenario(j, path.string(), path.parent_path());
}

void validate_scenario(const Scenario& sc) {
  if (sc.pdn != "FSPDN" && sc.pdn != "BSPDN")
    throw ValidationError(sc.name + ": pdn must be FSPDN or BSPDN");
  if (sc.stack_preset && !preset_from_name(*sc.stack_preset))
    throw ValidationError(sc.name + ": unknown stack preset " + *sc.stack_preset);
  if (sc.stack_file && !std::filesystem::exists(*sc.stack_file))
    throw ValidationError(sc.name + ": stack file missing: " + sc.stack_file->string());
  if (!(sc.global_pitch_um > 0.0))
    throw ValidationError(sc.name + ": non-positive global pitch");

  const PowerSpec& p = sc.power;
  if (p.kind == PowerSpec::Kind::kFile) {
    if (!std::filesystem::exists(p.file))
      throw ValidationError(sc.name + ": power map file missing: " + p.file.string());
  } else {
    if (p.total_w < 0.0) throw ValidationError(sc.name + ": negative total power");
    if (!(p.pitch_um > 0.0)) throw ValidationError(sc.name + ": non-positive map pitch");
    if (!(p.core_w_mm > 0.0) || !(p.core_h_mm > 0.0))
      throw ValidationError(sc.name + ": non-positive core size");
    if (p.kind == PowerSpec::Kind::kClustered && p.peak_ratio < 1.0)
      throw ValidationError(sc.name + ": peak_ratio < 1");
    if (p.kind == PowerSpec::Kind::kCenterFocused &&
        (!(p.concentration > 0.0) || p.concentration > 1.0))
      throw ValidationError(sc.name + ": concentration must be in (0, 1]");
  }

  const PackageStack stack = resolve_stack(sc);
  const std::string layer = p.kind == PowerSpec::Kind::kFile
                                ? load_power_map(p.file).target_layer
                                : p.layer;
  if (!stack.find_layer(layer))
    throw ValidationError(sc.name + ": power target layer '" + layer +
                          "' not in the stack");
  if (sc.local) {
    if (!(sc.local->fine_pitch_um > 0.0) ||
        sc.local->fine_pitch_um > sc.global_pitch_um)
      throw ValidationError(sc.name + ": fine pitch must be in (0, global pitch]");
    for (const auto& l : {sc.local->span_bottom, sc.local->span_top}) {
      if (!stack.find_layer(l))
        throw ValidationError(sc.name + ": window span layer '" + l +
                              "' not in the stack");
    }
  }
  if (!(sc.solver.tol > 0.0) || sc.solver.max_iter < 1)
    throw ValidationError(sc.name + ": bad solver settings");
}

PowerMap build_power_map(const Scenario& sc, const PackageStack& stack,
                         std::vector<std::string>* assumptions) {
  const PowerSpec& p = sc.power;
  if (p.kind == PowerSpec::Kind::kFile) return load_power_map(p.file);

  const Layer* layer = stack.find_layer(p.layer);
  if (!layer) throw ValidationError("power target layer '" + p.layer + "' not in stack");

  auto cells = [&](double mm) {
    const double n = mm * 1e3 / p.pitch_um;
    const double r = std::round(n);
    if (r < 1.0 || std::abs(n - r) > 1e-6)
      throw ValidationError("core size " + fmt(mm) + " mm is not an integer number of " +
                            fmt(p.pitch_um) + " um cells");
    return static_cast<int>(r);
  };
  const int nx = cells(p.core_w_mm), ny = cells(p.core_h_mm);
  MapFootprint at;
  at.layer = p.layer;
  if (p.origin_mm) {
    at.ox_mm = p.origin_mm->first;
    at.oy_mm = p.origin_mm->second;
  } else {
    const Rect r = layer->rect();
    at.ox_mm = r.cx() - 0.5 * p.core_w_mm;
    at.oy_mm = r.cy() - 0.5 * p.core_h_mm;
  }
  if (assumptions && p.total_defaulted)
    assumptions->push_back("per-core total power defaulted to 2 W");

  switch (p.kind) {
    case PowerSpec::Kind::kUniform:
      return gen_uniform(p.total_w, nx, ny, p.pitch_um, at);
    case PowerSpec::Kind::kClustered:
      if (assumptions)
        assumptions->push_back("clustered kernel: truncated cone, peak_ratio " +
                               fmt(p.peak_ratio) + ", seed " + std::to_string(p.seed));
      return gen_clustered(p.total_w, nx, ny, p.pitch_um, at, p.block_cells,
                           p.peak_ratio, p.seed);
    case PowerSpec::Kind::kCenterFocused:
      return gen_center_focused(p.total_w, nx, ny, p.pitch_um, at, p.concentration);
    case PowerSpec::Kind::kWorkloadProxy:
      if (assumptions)
        assumptions->push_back(
            "workload-proxy map: synthetic stand-in (clustered kernel, seed " +
            std::to_string(kWorkloadProxySeed) + "), not measured workload data");
      return gen_clustered(p.total_w, nx, ny, p.pitch_um, at, kWorkloadProxyBlock,
                           kWorkloadProxyPeakRatio, kWorkloadProxySeed);
    case PowerSpec::Kind::kFile:
      break;
  }
  throw ValidationError("unreachable power kind");
}

namespace {

// Conservative rebin of a map onto a same-pitch grid anchored at the window
// origin. Cells outside the window are dropped (their heat reaches the local
// model only through the extracted boundary temperatures).
PowerMap crop_to_window(const PowerMap& map, const Rect& window) {
  const double p_mm = map.pitch_um * 1e-3;
  PowerMap out;
  out.pitch_um = map.pitch_um;
  out.origin_x_mm = window.x0;
  out.origin_y_mm = window.y0;
  out.target_layer = map.target_layer;
  out.nx = static_cast<int>(std::lround(window.width() / p_mm));
  out.ny = static_cast<int>(std::lround(window.height() / p_mm));
  if (out.nx < 1 || out.ny < 1 ||
      std::abs(out.nx * p_mm - window.width()) > 1e-9 ||
      std::abs(out.ny * p_mm - window.height()) > 1e-9)
    throw ValidationError("refinement window is not an integer number of fine cells");
  out.cells.assign(static_cast<size_t>(out.nx) * out.ny, 0.0);

  auto overlap1d = [&](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  for (int j = 0; j < map.ny; ++j) {
    const double y0 = map.origin_y_mm + j * p_mm, y1 = y0 + p_mm;
    for (int i = 0; i < map.nx; ++i) {
      const double c = map.at(i, j);
      if (c == 0.0) continue;
      const double x0 = map.origin_x_mm + i * p_mm, x1 = x0 + p_mm;
      const int I0 = std::max(0, static_cast<int>(std::floor((x0 - window.x0) / p_mm)));
      const int J0 = std::max(0, static_cast<int>(std::floor((y0 - window.y0) / p_mm)));
      for (int J = J0; J < out.ny; ++J) {
        const double wy = overlap1d(y0, y1, window.y0 + J * p_mm,
                                    window.y0 + (J + 1) * p_mm);
        if (wy <= 0.0) {
          if (window.y0 + J * p_mm >= y1) break;
          continue;
        }
        for (int I = I0; I < out.nx; ++I) {
          const double wx = overlap1d(x0, x1, window.x0 + I * p_mm,
                                      window.x0 + (I + 1) * p_mm);
          if (wx <= 0.0) {
            if (window.x0 + I * p_mm >= x1) break;
            continue;
          }
          out.at(I, J) += c * (wx * wy) / (p_mm * p_mm);
        }
      }
    }
  }
  return out;
}

PowerMap io_chiplet_map(const PackageStack& stack, double watts) {
  const Layer* io = stack.find_layer("io_die");
  if (!io)
    throw ValidationError("io_chiplet_power_w needs a layer named 'io_die'");
  const Rect r = io->rect();
  // Commensurable square cells close to 100 um.
  auto pick = [&](double mm) {
    const int n = std::max(1, static_cast<int>(std::lround(mm * 10.0)));
    return std::pair<int, double>{n, mm * 1e3 / n};
  };
  const auto [nx, px] = pick(r.width());
  const auto [ny, py] = pick(r.height());
  if (std::abs(px - py) > 1e-9)
    throw ValidationError("io_die dims not commensurable with square cells; "
                          "attach a power map file to the io_die instead");
  return gen_uniform(watts, nx, ny, px, {r.x0, r.y0, "io_die"});
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write: " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

ojson scenario_echo(const Scenario& sc) {
  ojson j;
  j["name"] = sc.name;
  j["pdn"] = sc.pdn;
  if (sc.stack_file) {
    j["stack"] = "file:" + sc.stack_file->filename().string();
  } else if (sc.stack_preset) {
    j["stack"] = "preset:" + *sc.stack_preset;
  } else {
    j["stack"] = std::string("preset:") +
                 (sc.pdn == "BSPDN" ? "STACK2_BSPDN" : "STACK1_FSPDN");
  }
  ojson pw;
  pw["label"] = sc.power.label;
  switch (sc.power.kind) {
    case PowerSpec::Kind::kUniform: pw["generator"] = "uniform"; break;
    case PowerSpec::Kind::kClustered: pw["generator"] = "clustered"; break;
    case PowerSpec::Kind::kCenterFocused: pw["generator"] = "center_focused"; break;
    case PowerSpec::Kind::kWorkloadProxy: pw["generator"] = "workload_proxy"; break;
    case PowerSpec::Kind::kFile: pw["file"] = sc.power.file.filename().string(); break;
  }
  if (sc.power.kind != PowerSpec::Kind::kFile) {
    pw["total_w"] = sc.power.total_w;
    pw["pitch_um"] = sc.power.pitch_um;
    pw["core_mm"] = {sc.power.core_w_mm, sc.power.core_h_mm};
    pw["layer"] = sc.power.layer;
    if (sc.power.kind == PowerSpec::Kind::kClustered) {
      pw["block_cells"] = sc.power.block_cells;
      pw["peak_ratio"] = sc.power.peak_ratio;
      pw["seed"] = sc.power.seed;
    }
    if (sc.power.kind == PowerSpec::Kind::kCenterFocused)
      pw["concentration"] = sc.power.concentration;
  }
  j["power"] = std::move(pw);
  j["global_pitch_um"] = sc.global_pitch_um;
  if (sc.local) {
    ojson l;
    l["core_mm"] = {sc.local->core_w_mm, sc.local->core_h_mm};
    l["fine_pitch_um"] = sc.local->fine_pitch_um;
    l["span"] = {sc.local->span_bottom, sc.local->span_top};
    l["margin_coarse_cells"] = sc.local->margin_coarse_cells;
    j["local"] = std::move(l);
  } else {
    j["local"] = nullptr;
  }
  ojson sv;
  sv["tol"] = sc.solver.tol;
  sv["max_iter"] = sc.solver.max_iter;
  sv["preconditioner"] = sc.solver.precond == Preconditioner::kTwoLevel ? "two_level"
                         : sc.solver.precond == Preconditioner::kLine   ? "line"
                                                                        : "jacobi";
  j["solver"] = std::move(sv);
  j["io_chiplet_power_w"] = sc.io_power_w;
  return j;
}

}  // namespace

RunSummary run_scenario(const Scenario& sc, const RunOptions& opts) {
  validate_scenario(sc);
  const PackageStack stack = resolve_stack(sc);

  RunSummary out;
  out.name = sc.name;
  out.pdn = sc.pdn;
  out.map_label = sc.power.label;
  out.ambient_c = stack.top.ambient_c;
  out.assumptions = stack.assumptions;
  for (const auto& w : stack.warnings) out.assumptions.push_back("warning: " + w);

  const PowerMap map = build_power_map(sc, stack, &out.assumptions);
  out.total_power_w = total_power(map);

  MeshOptions gmo;
  gmo.pitch_um = sc.global_pitch_um;
  gmo.z_policy = ZPolicy::MaxAspect(sc.z_max_aspect_global);
  auto gmesh = std::make_shared<Mesh>(discretize(stack, gmo));
  attach_power(*gmesh, map);
  if (sc.io_power_w > 0.0) {
    attach_power(*gmesh, io_chiplet_map(stack, sc.io_power_w));
    out.assumptions.push_back("io_die dissipates " + fmt(sc.io_power_w) +
                              " W spread uniformly");
    out.total_power_w += sc.io_power_w;
  }

  SolverOptions so = sc.solver;
  so.deterministic = opts.deterministic;
  if (opts.threads > 0) so.threads = opts.threads;

  out.footprint_w_mm = gmesh->plan_rect().width();
  out.footprint_h_mm = gmesh->plan_rect().height();

  const LinearSystem gsys = assemble(gmesh, stack.top, stack.bottom);
  const TemperatureField gfield = solve(gsys, so);
  out.global_peak = peak(gfield);
  out.global_mean_c = layer_mean_c(gfield, map.target_layer);
  out.global_grad_k_mm = max_lateral_gradient_k_mm(gfield, map.target_layer);
  out.energy = energy_balance(gfield, gsys);
  out.global_stats = gfield.stats;

  std::optional<Window> window;
  std::optional<TemperatureField> lfield;
  if (sc.local) {
    const LocalSpec& ls = *sc.local;
    window = find_hottest_window(gfield, ls.core_w_mm, ls.core_h_mm,
                                 map.target_layer, ls.fine_pitch_um,
                                 ls.span_bottom, ls.span_top,
                                 ls.margin_coarse_cells);
    const LocalBCs bcs = extract_boundary(gfield, stack, *window);
    PowerMap fine = map;
    if (std::abs(map.pitch_um - ls.fine_pitch_um) > 1e-12) {
      fine = resample(map, ls.fine_pitch_um, ResampleMethod::kAreaWeighted);
      out.assumptions.push_back("power map resampled (area_weighted) from " +
                                fmt(map.pitch_um) + " to " + fmt(ls.fine_pitch_um) +
                                " um for the local solve");
    }
    if (!window->rect_mm.expanded(1e-9).contains(fine.rect())) {
      fine = crop_to_window(fine, window->rect_mm);
      out.assumptions.push_back(
          "fine power cropped to the refinement window; outside power enters "
          "through the extracted boundary temperatures");
    }
    const LocalResult lr = solve_local(stack, *window, fine, bcs, so);
    lfield = lr.field;
    out.local_peak = peak_in_rect(*lfield, window->core_mm);
    out.local_mean_c = layer_mean_c(*lfield, map.target_layer);
    out.local_grad_k_mm = max_lateral_gradient_k_mm(*lfield, map.target_layer);
    out.local_stats = lfield->stats;
  }

  if (opts.write_artifacts) {
    namespace fs = std::filesystem;
    const fs::path dir = opts.out_dir / sc.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output dir: " + dir.string());

    const std::string layer = map.target_layer;
    export_heatmap(gfield, layer, dir / ("global_" + layer), HeatmapScale::Auto());
    if (lfield)
      export_heatmap(*lfield, layer, dir / ("local_" + layer), HeatmapScale::Auto());

    ojson rep;
    rep["scenario"] = scenario_echo(sc);
    rep["inputs"] = {{"total_power_w", out.total_power_w},
                     {"ambient_c", out.ambient_c}};
    ojson g;
    g["peak"] = peak_json(out.global_peak);
    g["mean_c_" + layer] = out.global_mean_c;
    g["max_lateral_gradient_k_mm"] = out.global_grad_k_mm;
    g["energy"] = {{"p_in_w", out.energy.p_in_w},
                   {"q_top_w", out.energy.q_top_w},
                   {"q_bottom_w", out.energy.q_bottom_w},
                   {"q_dirichlet_w", out.energy.q_dirichlet_w},
                   {"residual_frac", out.energy.residual_frac},
                   {"top_fraction",
                    out.energy.q_top_w /
                        std::max(1e-300, out.energy.q_top_w + out.energy.q_bottom_w +
                                             out.energy.q_dirichlet_w)}};
    g["solver"] = stats_json(out.global_stats);
    rep["global"] = std::move(g);
    if (lfield) {
      ojson l;
      l["window_mm"] = {window->rect_mm.x0, window->rect_mm.y0, window->rect_mm.x1,
                        window->rect_mm.y1};
      l["core_mm"] = {window->core_mm.x0, window->core_mm.y0, window->core_mm.x1,
                      window->core_mm.y1};
      l["fine_pitch_um"] = window->fine_pitch_um;
      l["peak"] = peak_json(*out.local_peak);
      l["mean_c_" + layer] = *out.local_mean_c;
      l["max_lateral_gradient_k_mm"] = *out.local_grad_k_mm;
      l["solver"] = stats_json(*out.local_stats);
      rep["local"] = std::move(l);
    } else {
      rep["local"] = nullptr;
    }
    rep["assumptions"] = out.assumptions;
    ojson artifacts;
    artifacts["global_heatmap"] = "global_" + layer + ".ppm";
    artifacts["global_csv"] = "global_" + layer + ".csv";
    if (lfield) {
      artifacts["local_heatmap"] = "local_" + layer + ".ppm";
      artifacts["local_csv"] = "local_" + layer + ".csv";
    }
    rep["artifacts"] = std::move(artifacts);

    out.report_path = dir / "report.json";
    write_text(out.report_path, rep.dump(2) + "\n");

    std::ostringstream meta;
    meta << "scenario: " << sc.name << "\n"
         << "global iterations: " << out.global_stats.iterations << "\n"
         << "global residual: " << out.global_stats.rel_residual << "\n";
    if (out.local_stats) {
      meta << "local iterations: " << out.local_stats->iterations << "\n"
           << "local residual: " << out.local_stats->rel_residual << "\n";
    }
    meta << "p_in_w: " << out.energy.p_in_w << "\n"
         << "q_top_w: " << out.energy.q_top_w << "\n"
         << "q_bottom_w: " << out.energy.q_bottom_w << "\n"
         << "balance residual: " << out.energy.residual_frac << "\n";
    write_text(dir / "metadata.txt", meta.str());

    std::ostringstream al;
    for (const auto& a : out.assumptions) al << "- " << a << "\n";
    write_text(dir / "assumptions.txt", al.str());
  }
  return out;
}

std::vector<Scenario> sweep_from_file(const std::filesystem::path& path) {
  const json root = load_json(path);
  std::vector<Scenario> out;
  json base = json::object();
  const json* list = nullptr;
  if (root.is_array()) {
    list = &root;
  } else if (root.is_object() && root.contains("scenarios")) {
    if (root.contains("base")) base = root["base"];
    list = &root["scenarios"];
  } else {
    fail(path.string(), "sweep file wants {base?, scenarios: [...]} or a bare array");
  }
  int idx = 0;
  for (const auto& entry : *list) {
    json merged = base;
    deep_merge(merged, entry);
    if (!merged.contains("name"))
      merged["name"] = "scenario_" + std::to_string(idx);
    out.push_back(parse_scenario(merged, path.string(), path.parent_path()));
    ++idx;
  }
  return out;
}

SweepSummary run_sweep(const std::vector<Scenario>& scenarios,
                       const RunOptions& opts) {
  SweepSummary sum;
  struct Slot {
    const RunSummary* fspdn = nullptr;
    const RunSummary* bspdn = nullptr;
  };
  std::vector<std::string> label_order;

  sum.runs.reserve(scenarios.size());
  for (const auto& sc : scenarios) {
    try {
      sum.runs.push_back(run_scenario(sc, opts));
    } catch (const NonConvergenceError& e) {
      sum.failures.push_back({sc.name, "convergence", e.what()});
    } catch (const ValidationError& e) {
      sum.failures.push_back({sc.name, "validation", e.what()});
    } catch (const ParseError& e) {
      sum.failures.push_back({sc.name, "validation", e.what()});
    } catch (const IoError& e) {
      sum.failures.push_back({sc.name, "io", e.what()});
    } catch (const Error& e) {
      sum.failures.push_back({sc.name, "error", e.what()});
    }
  }

  // Pair PDN variants per map label, in first-appearance order.
  for (const auto& r : sum.runs) {
    if (std::find(label_order.begin(), label_order.end(), r.map_label) ==
        label_order.end())
      label_order.push_back(r.map_label);
  }
  for (const auto& label : label_order) {
    const RunSummary* f = nullptr;
    const RunSummary* b = nullptr;
    for (const auto& r : sum.runs) {
      if (r.map_label != label) continue;
      if (r.pdn == "FSPDN" && !f) f = &r;
      if (r.pdn == "BSPDN" && !b) b = &r;
    }
    if (!f || !b) continue;
    if (std::abs(f->footprint_w_mm - b->footprint_w_mm) > 1e-9 ||
        std::abs(f->footprint_h_mm - b->footprint_h_mm) > 1e-9) {
      sum.failures.push_back({"pair:" + label, "validation",
                              "FSPDN/BSPDN runs have mismatched footprints"});
      continue;
    }
    const bool both_local = f->local_peak.has_value() && b->local_peak.has_value();
    SweepPair pair;
    pair.map_label = label;
    pair.fspdn_rise_k = f->peak_rise_k();
    pair.bspdn_rise_k = b->peak_rise_k();
    pair.peak_delta_k =
        (both_local ? b->local_peak->t_c : b->global_peak.t_c) -
        (both_local ? f->local_peak->t_c : f->global_peak.t_c);
    pair.global_peak_delta_k = b->global_peak.t_c - f->global_peak.t_c;
    // The written delta must be recomputable from the stored per-run peaks.
    const double recomputed =
        (pair.bspdn_rise_k + b->ambient_c) - (pair.fspdn_rise_k + f->ambient_c);
    if (std::abs(pair.peak_delta_k - recomputed) > 1e-9)
      throw Error("internal: sweep delta inconsistent with stored peaks");
    sum.pairs.push_back(pair);
  }

  if (opts.write_artifacts) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + opts.out_dir.string());
    ojson rep;
    rep["runs"] = ojson::array();
    for (const auto& r : sum.runs) {
      ojson jr;
      jr["name"] = r.name;
      jr["pdn"] = r.pdn;
      jr["map"] = r.map_label;
      jr["total_power_w"] = r.total_power_w;
      jr["global_peak"] = peak_json(r.global_peak);
      if (r.local_peak) {
        jr["local_peak"] = peak_json(*r.local_peak);
      } else {
        jr["local_peak"] = nullptr;
      }
      jr["peak_rise_k"] = r.peak_rise_k();
      jr["q_top_fraction"] =
          r.energy.q_top_w /
          std::max(1e-300, r.energy.q_top_w + r.energy.q_bottom_w +
                               r.energy.q_dirichlet_w);
      rep["runs"].push_back(std::move(jr));
    }
    rep["pairs"] = ojson::array();
    for (const auto& p : sum.pairs) {
      ojson jp;
      jp["map"] = p.map_label;
      jp["bspdn_minus_fspdn_peak_k"] = p.peak_delta_k;
      jp["bspdn_minus_fspdn_global_peak_k"] = p.global_peak_delta_k;
      jp["fspdn_peak_rise_k"] = p.fspdn_rise_k;
      jp["bspdn_peak_rise_k"] = p.bspdn_rise_k;
      rep["pairs"].push_back(std::move(jp));
    }
    // Ordering table of peak rises across the maps.
    rep["ordering"] = ojson::array();
    for (const auto& p : sum.pairs) {
      ojson jo;
      jo["map"] = p.map_label;
      jo["fspdn_peak_rise_k"] = p.fspdn_rise_k;
      jo["bspdn_peak_rise_k"] = p.bspdn_rise_k;
      rep["ordering"].push_back(std::move(jo));
    }
    rep["failures"] = ojson::array();
    for (const auto& f : sum.failures) {
      ojson jf;
      jf["scenario"] = f.scenario;
      jf["category"] = f.category;
      jf["message"] = f.message;
      rep["failures"].push_back(std::move(jf));
    }
    sum.report_path = opts.out_dir / "sweep_report.json";
    write_text(sum.report_path, rep.dump(2) + "\n");
  }
  return sum;
}

}  // namespace sipheat
