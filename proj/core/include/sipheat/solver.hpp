#pragma once

#include <memory>

#include "sipheat/errors.hpp"
#include "sipheat/field.hpp"
#include "sipheat/system.hpp"

namespace sipheat {

// kJacobi is the contractual minimum; kLine solves each vertical column's
// tridiagonal block exactly; kTwoLevel adds an additive coarse correction
// over in-plane column aggregates, which carries the long-range lateral
// modes that dominate large packages.
enum class Preconditioner { kJacobi, kLine, kTwoLevel };

struct SolverOptions {
  double tol = 1e-8;     // relative residual on the rise-space system
  int max_iter = 50000;
  Preconditioner precond = Preconditioner::kTwoLevel;
  // Deterministic mode uses fixed-partition reductions, so results are
  // bit-identical for any thread count. Fast mode lets OpenMP order the sums.
  bool deterministic = true;
  int threads = 0;  // 0 = library default
};

class NonConvergenceError : public SolveError {
 public:
  NonConvergenceError(const std::string& what, SolveStats stats,
                      std::shared_ptr<TemperatureField> best)
      : SolveError(what), stats(stats), best(std::move(best)) {}
  SolveStats stats;
  std::shared_ptr<TemperatureField> best;  // best iterate so far
};

/// Preconditioned conjugate gradients on the assembled SPD system.
/// Throws SolveError("no heat escape path") when the system has no coupling
/// to any fixed temperature, NonConvergenceError after max_iter.
TemperatureField solve(const LinearSystem& system, const SolverOptions& opts = {});

struct EnergyBalance {
  double p_in_w = 0.0;
  double q_top_w = 0.0;
  double q_bottom_w = 0.0;
  double q_dirichlet_w = 0.0;
  double residual_frac = 0.0;  // |P_in - Q_out| / P_in, 0 when P_in = 0
};

EnergyBalance energy_balance(const TemperatureField& field,
                             const LinearSystem& system);

/// Package surface temperature (top or bottom exterior plane) per column.
/// Convective faces use the face heat balance; adiabatic exterior faces use
/// one-sided flux extrapolation through the boundary cell. Columns that do
/// not reach the plane carry the ambient reference.
Grid2D surface_temperature(const TemperatureField& field,
                           const LinearSystem& system, bool top);

}  // namespace sipheat
