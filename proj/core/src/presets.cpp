#include <cmath>

#include "sipheat/errors.hpp"
#include "sipheat/stack.hpp"

namespace sipheat {

namespace {

// Package plan, mm. Interposer assembly and dies are centered on the
// 100 x 100 mm board/heat-sink footprint.
constexpr double kBoard = 100.0;
constexpr double kInterposerW = 32.9, kInterposerH = 22.6;
constexpr double kInterposerX = (kBoard - kInterposerW) / 2.0;  // 33.55
constexpr double kInterposerY = (kBoard - kInterposerH) / 2.0;  // 38.70
constexpr double kIoW = 19.2, kIoH = 22.6;
constexpr double kCcW = 13.6, kCcH = 19.6;
constexpr double kDieGap = 0.1;  // mold-filled gap between the chiplets
constexpr double kIoX = kInterposerX;
constexpr double kIoY = kInterposerY;
constexpr double kCcX = kIoX + kIoW + kDieGap;        // 52.85
constexpr double kCcY = kInterposerY + (kInterposerH - kCcH) / 2.0;  // 40.20

// Computing-chiplet internals. Thin-Si (135) and BSPDN (71) conductivities
// are fixed by the stack definitions; the remaining thicknesses and
// conductivities are documented compact-model defaults, overridable through
// stack files.
constexpr double kCcStackHeightUm = 66.0;  // ubumps excluded

Layer make(const char* name, double dx, double dy, double t_um, const char* mat,
           double k, double ox, double oy) {
  Layer l;
  l.name = name;
  l.dx_mm = dx;
  l.dy_mm = dy;
  l.thickness_um = t_um;
  l.material = {mat, k};
  l.offset_x_mm = ox;
  l.offset_y_mm = oy;
  return l;
}

Layer cc(const char* name, double t_um, const char* mat, double k) {
  return make(name, kCcW, kCcH, t_um, mat, k, kCcX, kCcY);
}

void append_environment_below(PackageStack& s) {
  s.layers.push_back(make("pcb", 100, 100, 800, "pcb_fr4", 5.0, 0, 0));
  s.layers.push_back(make("solder_balls", 50, 50, 100, "solder", 8.0, 25, 25));
  s.layers.push_back(make("substrate", 50, 50, 300, "substrate_core", 0.6, 25, 25));
  s.layers.push_back(make("c4_ubumps", kInterposerW, kInterposerH, 100, "c4_bump", 6.0,
                          kInterposerX, kInterposerY));
  s.layers.push_back(make("interposer", kInterposerW, kInterposerH, 50, "silicon", 140,
                          kInterposerX, kInterposerY));
  s.layers.push_back(make("interposer_beol", kInterposerW, kInterposerH, 5, "beol_ild",
                          1.2, kInterposerX, kInterposerY));
  s.layers.push_back(make("io_ubumps", kIoW, kIoH, 10, "ubump", 3.5, kIoX, kIoY));
  Layer ccb = make("cc_ubumps", kCcW, kCcH, 10, "ubump", 3.5, kCcX, kCcY);
  ccb.same_level_as_previous = true;
  s.layers.push_back(ccb);
}

void append_environment_above(PackageStack& s, double chiplet_top_um) {
  // The IO die is modeled as bulk silicon spanning the full computing-chiplet
  // z interval; it dissipates no power by default and mostly spreads heat.
  Layer io = make("io_die", kIoW, kIoH, kCcStackHeightUm, "silicon", 140, kIoX, kIoY);
  io.z0_um = chiplet_top_um - kCcStackHeightUm;
  s.layers.push_back(io);
  s.layers.push_back(make("tim", kInterposerW, kInterposerH, 250, "tim", 30,
                          kInterposerX, kInterposerY));
  Layer sp = make("heat_spreader", 40, 40, 5000, "copper", 400, 30, 30);
  sp.allow_overhang = true;  // lid extends past the TIM footprint
  s.layers.push_back(sp);
  Layer hs = make("heat_sink", 100, 100, 3000, "copper", 400, 0, 0);
  hs.allow_overhang = true;
  s.layers.push_back(hs);
}

void finish(PackageStack& s) {
  s.gap_fill = {"mold", 3.0};
  s.top = {2500.0, 25.0};
  s.bottom = {200.0, 25.0};
  s.assumptions.push_back(
      "io_die modeled as bulk silicon (k=140) spanning the computing-chiplet height");
  s.assumptions.push_back("io_die power defaults to 0 W (acts as a thermal spreader)");
}

void append_shared_assumptions(PackageStack& s) {
  s.assumptions.push_back("mem_si default 50 um @ 140 W/mK");
  s.assumptions.push_back("feol layers default 1 um effective @ 7.9 W/mK");
  s.assumptions.push_back("beol_mxy default 3 um @ 1.5 W/mK");
  s.assumptions.push_back("f2f_bond default 1 um @ 1.4 W/mK");
}

}  // namespace

PackageStack build_preset(Preset preset) {
  PackageStack s;
  append_environment_below(s);
  const double cc_base = 800 + 100 + 300 + 100 + 50 + 5 + 10;  // 1365

  switch (preset) {
    case Preset::kSip25d: {
      Layer block = cc("computing_chiplet", kCcStackHeightUm, "silicon", 140);
      s.layers.push_back(block);
      append_environment_above(s, cc_base + kCcStackHeightUm);
      finish(s);
      s.assumptions.push_back(
          "computing_chiplet modeled as a bulk-Si block (66 um) in the SIP_25D preset");
      break;
    }
    case Preset::kStack1Fspdn: {
      s.layers.push_back(cc("logic_si_thin", 5, "silicon_thin", 135));
      s.layers.push_back(cc("logic_feol", 1, "feol", 7.9));
      s.layers.push_back(cc("beol_mxy_logic", 3, "beol_mxy", 1.5));
      s.layers.push_back(cc("beol_mz_logic", 2, "beol_mz", 2.5));
      s.layers.push_back(cc("f2f_bond", 1, "hybrid_bond", 1.4));
      s.layers.push_back(cc("beol_mxy_mem", 3, "beol_mxy", 1.5));
      s.layers.push_back(cc("mem_feol", 1, "feol", 7.9));
      s.layers.push_back(cc("mem_si", 50, "silicon", 140));
      append_environment_above(s, cc_base + kCcStackHeightUm);
      finish(s);
      append_shared_assumptions(s);
      s.assumptions.push_back("beol_mz default 2 um @ 2.5 W/mK");
      break;
    }
    case Preset::kStack2Bspdn: {
      s.layers.push_back(cc("bspdn", 1, "bspdn_metal", 71));
      s.layers.push_back(cc("logic_feol", 1, "feol", 7.9));
      s.layers.push_back(cc("beol_mxy_logic", 3, "beol_mxy", 1.5));
      s.layers.push_back(cc("f2f_bond", 1, "hybrid_bond", 1.4));
      s.layers.push_back(cc("beol_mxy_mem", 3, "beol_mxy", 1.5));
      s.layers.push_back(cc("mem_feol", 1, "feol", 7.9));
      s.layers.push_back(cc("mem_si", 50, "silicon", 140));
      // The BSPDN chiplet is 60 um tall; mold fills the 6 um up to the
      // shared chiplet-level top where the TIM starts.
      append_environment_above(s, cc_base + kCcStackHeightUm);
      finish(s);
      append_shared_assumptions(s);
      s.assumptions.push_back("bspdn layer thickness default 1 um (k=71 fixed)");
      break;
    }
  }
  return s;
}

std::optional<Preset> preset_from_name(std::string_view name) {
  if (name == "SIP_25D") return Preset::kSip25d;
  if (name == "STACK1_FSPDN") return Preset::kStack1Fspdn;
  if (name == "STACK2_BSPDN") return Preset::kStack2Bspdn;
  return std::nullopt;
}

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::kSip25d: return "SIP_25D";
    case Preset::kStack1Fspdn: return "STACK1_FSPDN";
    case Preset::kStack2Bspdn: return "STACK2_BSPDN";
  }
  return "";
}

}  // namespace sipheat
