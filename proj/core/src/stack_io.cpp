#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sipheat/errors.hpp"
#include "sipheat/stack.hpp"

namespace sipheat {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(std::string_view origin, std::string_view what) {
  std::ostringstream os;
  os << origin << ": " << what;
  throw ParseError(os.str());
}

double require_number(const json& j, std::string_view ctx, const char* key,
                      std::string_view origin) {
  if (!j.contains(key)) {
    std::ostringstream os;
    os << ctx << "." << key << " missing";
    fail(origin, os.str());
  }
  if (!j[key].is_number()) {
    std::ostringstream os;
    os << ctx << "." << key << " must be a number";
    fail(origin, os.str());
  }
  return j[key].get<double>();
}

BoundaryCondition parse_bc(const json& j, std::string_view ctx, std::string_view origin) {
  BoundaryCondition bc;
  bc.htc_w_m2k = require_number(j, ctx, "htc_w_m2k", origin);
  bc.ambient_c = j.contains("ambient_c") ? require_number(j, ctx, "ambient_c", origin) : 25.0;
  return bc;
}

}  // namespace

PackageStack stack_from_json_text(std::string_view text, std::string_view origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  if (!root.is_object() || !root.contains("layers") || !root["layers"].is_array())
    fail(origin, "top-level object with a 'layers' array expected");

  PackageStack stack;
  int i = 0;
  for (const auto& jl : root["layers"]) {
    std::ostringstream ctx;
    ctx << "layers[" << i << "]";
    if (!jl.is_object()) fail(origin, ctx.str() + " must be an object");
    Layer l;
    if (!jl.contains("name") || !jl["name"].is_string())
      fail(origin, ctx.str() + ".name missing or not a string");
    l.name = jl["name"].get<std::string>();
    l.dx_mm = require_number(jl, ctx.str(), "dx_mm", origin);
    l.dy_mm = require_number(jl, ctx.str(), "dy_mm", origin);
    l.thickness_um = require_number(jl, ctx.str(), "thickness_um", origin);
    l.material.k_w_mk = require_number(jl, ctx.str(), "k_w_mk", origin);
    l.material.name = jl.value("material", l.name);
    if (jl.contains("offset_mm")) {
      const auto& off = jl["offset_mm"];
      if (!off.is_array() || off.size() != 2 || !off[0].is_number() || !off[1].is_number())
        fail(origin, ctx.str() + ".offset_mm must be [x, y]");
      l.offset_x_mm = off[0].get<double>();
      l.offset_y_mm = off[1].get<double>();
    }
    l.same_level_as_previous = jl.value("same_level_as_previous", false);
    l.allow_overhang = jl.value("allow_overhang", false);
    if (jl.contains("z0_um")) {
      if (!jl["z0_um"].is_number()) fail(origin, ctx.str() + ".z0_um must be a number");
      l.z0_um = jl["z0_um"].get<double>();
    }
    stack.layers.push_back(std::move(l));
    ++i;
  }

  stack.gap_fill.name = root.value("gap_fill_material", std::string("mold"));
  if (root.contains("gap_fill_k_w_mk")) {
    if (!root["gap_fill_k_w_mk"].is_number())
      fail(origin, "gap_fill_k_w_mk must be a number");
    stack.gap_fill.k_w_mk = root["gap_fill_k_w_mk"].get<double>();
  } else {
    stack.gap_fill.k_w_mk = 3.0;
    stack.warnings.push_back("gap_fill_k_w_mk missing; defaulted to 3 W/mK mold");
    stack.assumptions.push_back("gap fill defaulted to mold, 3 W/mK");
  }

  const json bounds = root.value("boundaries", json::object());
  if (bounds.contains("top")) {
    stack.top = parse_bc(bounds["top"], "boundaries.top", origin);
  } else {
    stack.top = {0.0, 25.0};
    stack.warnings.push_back("top boundary missing; defaulted to adiabatic (htc=0)");
  }
  if (bounds.contains("bottom")) {
    stack.bottom = parse_bc(bounds["bottom"], "boundaries.bottom", origin);
  } else {
    stack.bottom = {0.0, 25.0};
    stack.warnings.push_back("bottom boundary missing; defaulted to adiabatic (htc=0)");
  }

  auto violations = validate(stack);
  if (!violations.empty()) {
    std::ostringstream os;
    os << origin << ": invalid stack:";
    for (const auto& v : violations) os << "\n  - " << v.str();
    throw ValidationError(os.str());
  }
  return stack;
}

PackageStack load_stack(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stack file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return stack_from_json_text(buf.str(), path.string());
}

std::string stack_to_json_text(const PackageStack& stack) {
  ojson root;
  root["layers"] = ojson::array();
  for (const auto& l : stack.layers) {
    ojson jl;
    jl["name"] = l.name;
    jl["dx_mm"] = l.dx_mm;
    jl["dy_mm"] = l.dy_mm;
    jl["thickness_um"] = l.thickness_um;
    jl["k_w_mk"] = l.material.k_w_mk;
    jl["offset_mm"] = {l.offset_x_mm, l.offset_y_mm};
    if (l.material.name != l.name) jl["material"] = l.material.name;
    if (l.same_level_as_previous) jl["same_level_as_previous"] = true;
    if (l.z0_um) jl["z0_um"] = *l.z0_um;
    if (l.allow_overhang) jl["allow_overhang"] = true;
    root["layers"].push_back(std::move(jl));
  }
  root["gap_fill_k_w_mk"] = stack.gap_fill.k_w_mk;
  root["gap_fill_material"] = stack.gap_fill.name;
  root["boundaries"]["top"] = {{"htc_w_m2k", stack.top.htc_w_m2k},
                               {"ambient_c", stack.top.ambient_c}};
  root["boundaries"]["bottom"] = {{"htc_w_m2k", stack.bottom.htc_w_m2k},
                                  {"ambient_c", stack.bottom.ambient_c}};
  return root.dump(2) + "\n";
}

void save_stack(const PackageStack& stack, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write stack file: " + path.string());
  out << stack_to_json_text(stack);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sipheat
