#pragma once

namespace sipheat {

// File formats and the public API use mm (in-plane), um (thickness),
// W/(m K), W/(m^2 K) and degC. Everything internal to mesh/solver is SI.

inline constexpr double kMmToM = 1e-3;
inline constexpr double kUmToM = 1e-6;
inline constexpr double kUmToMm = 1e-3;
inline constexpr double kKelvinOffset = 273.15;

inline constexpr double celsius_to_kelvin(double c) { return c + kKelvinOffset; }
inline constexpr double kelvin_to_celsius(double k) { return k - kKelvinOffset; }

}  // namespace sipheat
