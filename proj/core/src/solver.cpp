#include "sipheat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef SIPHEAT_HAVE_OPENMP
#include <omp.h>
#endif

#include "sipheat/units.hpp"

namespace sipheat {

namespace {

constexpr std::int64_t kChunk = 8192;

// Fixed-partition dot product: per-chunk partials summed in chunk order, so
// the result does not depend on the thread count.
double dot_deterministic(const std::vector<double>& a, const std::vector<double>& b) {
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partials(static_cast<size_t>(nchunks), 0.0);
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partials[c] = s;
  }
  double s = 0.0;
  for (double p : partials) s += p;
  return s;
}

double dot_fast(const std::vector<double>& a, const std::vector<double>& b) {
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  double s = 0.0;
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static) reduction(+ : s)
#endif
  for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Exact LDL^T solves of each (ix,iy) column's vertical tridiagonal block.
// Columns are contiguous id runs by construction; z gaps inside a column
// simply have zero sub-diagonal coupling.
class LinePreconditioner {
 public:
  explicit LinePreconditioner(const LinearSystem& sys) {
    const Mesh& m = *sys.mesh;
    const std::int64_t n = sys.n;
    dinv_.resize(n);
    l_.resize(n);
    starts_.push_back(0);
    for (std::int64_t i = 1; i < n; ++i) {
      if (m.ax[i] != m.ax[i - 1] || m.ay[i] != m.ay[i - 1]) starts_.push_back(i);
    }
    starts_.push_back(n);
    for (size_t c = 0; c + 1 < starts_.size(); ++c) {
      for (std::int64_t i = starts_[c]; i < starts_[c + 1]; ++i) {
        const double sub = (i == starts_[c]) ? 0.0 : -sys.zlow[i];
        const double li = (i == starts_[c]) ? 0.0 : sub * dinv_[i - 1];
        l_[i] = li;
        dinv_[i] = 1.0 / (sys.diag[i] - li * sub);
      }
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const std::int64_t ncols = static_cast<std::int64_t>(starts_.size()) - 1;
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t c = 0; c < ncols; ++c) {
      const std::int64_t lo = starts_[c], hi = starts_[c + 1];
      z[lo] = r[lo];
      for (std::int64_t i = lo + 1; i < hi; ++i) z[i] = r[i] - l_[i] * z[i - 1];
      for (std::int64_t i = lo; i < hi; ++i) z[i] *= dinv_[i];
      for (std::int64_t i = hi - 2; i >= lo; --i) z[i] -= l_[i + 1] * z[i + 1];
    }
  }

 private:
  std::vector<double> dinv_, l_;
  std::vector<std::int64_t> starts_;
};

// Additive two-level preconditioner: exact vertical lines plus a Galerkin
// coarse correction over c x c blocks of full columns. The coarse space
// carries the slow in-plane modes of the wide package plates.
class TwoLevelPreconditioner {
 public:
  explicit TwoLevelPreconditioner(const LinearSystem& sys) : line_(sys) {
    const Mesh& m = *sys.mesh;
    // In-plane blocks of full columns are not enough: the wide plates (heat
    // sink, PCB) carry independent slow lateral modes, so the aggregates
    // also need a few z groups.
    const int cap = 20;  // at most cap^2 blocks in plane
    const int zgroups = std::min(m.nz, 4);
    const int c = std::max(1, (std::max(m.nx, m.ny) + cap - 1) / cap);
    const int nbx = (m.nx + c - 1) / c;
    const int nby = (m.ny + c - 1) / c;

    std::vector<std::int32_t> block_of(
        static_cast<size_t>(nbx) * nby * zgroups, -1);
    agg_.resize(sys.n);
    for (std::int64_t i = 0; i < sys.n; ++i) {
      const int bx = m.ax[i] / c, by = m.ay[i] / c;
      const int bz = static_cast<int>(static_cast<std::int64_t>(m.az[i]) *
                                      zgroups / m.nz);
      auto& slot =
          block_of[(static_cast<size_t>(bx) * nby + by) * zgroups + bz];
      if (slot < 0) {
        slot = m_;
        ++m_;
      }
      agg_[i] = slot;
    }
    members_.resize(m_);
    for (std::int64_t i = 0; i < sys.n; ++i)
      members_[agg_[i]].push_back(static_cast<std::int32_t>(i));

    // Galerkin coarse matrix and its dense LDL^T factor (L unit-lower).
    std::vector<double> ac(static_cast<size_t>(m_) * m_, 0.0);
    for (std::int64_t i = 0; i < sys.n; ++i) {
      const std::int32_t ai = agg_[i];
      for (std::int64_t k = sys.row_ptr[i]; k < sys.row_ptr[i + 1]; ++k)
        ac[static_cast<size_t>(ai) * m_ + agg_[sys.col[k]]] += sys.val[k];
    }
    lfac_.assign(static_cast<size_t>(m_) * m_, 0.0);
    d_.assign(m_, 0.0);
    for (int j = 0; j < m_; ++j) {
      double dj = ac[static_cast<size_t>(j) * m_ + j];
      for (int k = 0; k < j; ++k) {
        const double ljk = lfac_[static_cast<size_t>(j) * m_ + k];
        dj -= ljk * ljk * d_[k];
      }
      d_[j] = dj;
      const double inv = 1.0 / dj;
      for (int i = j + 1; i < m_; ++i) {
        double s = ac[static_cast<size_t>(i) * m_ + j];
        for (int k = 0; k < j; ++k)
          s -= lfac_[static_cast<size_t>(i) * m_ + k] *
               lfac_[static_cast<size_t>(j) * m_ + k] * d_[k];
        lfac_[static_cast<size_t>(i) * m_ + j] = s * inv;
      }
    }
    rc_.resize(m_);
    xc_.resize(m_);
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    line_.apply(r, z);
    // restrict
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int a = 0; a < m_; ++a) {
      double s = 0.0;
      for (const std::int32_t i : members_[a]) s += r[i];
      rc_[a] = s;
    }
    // coarse LDL^T solve
    for (int i = 0; i < m_; ++i) {
      double s = rc_[i];
      for (int k = 0; k < i; ++k) s -= lfac_[static_cast<size_t>(i) * m_ + k] * xc_[k];
      xc_[i] = s;
    }
    for (int i = 0; i < m_; ++i) xc_[i] /= d_[i];
    for (int i = m_ - 1; i >= 0; --i) {
      double s = xc_[i];
      for (int k = i + 1; k < m_; ++k)
        s -= lfac_[static_cast<size_t>(k) * m_ + i] * xc_[k];
      xc_[i] = s;
    }
    // prolong and add
    const std::int64_t n = static_cast<std::int64_t>(z.size());
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < n; ++i) z[i] += xc_[agg_[i]];
  }

 private:
  LinePreconditioner line_;
  int m_ = 0;
  std::vector<std::int32_t> agg_;
  std::vector<std::vector<std::int32_t>> members_;
  std::vector<double> lfac_;  // strict lower triangle of unit-lower L
  std::vector<double> d_;     // pivots
  mutable std::vector<double> rc_, xc_;
};

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpby(const std::vector<double>& x, double b, std::vector<double>& y) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] + b * y[i];
}

TemperatureField make_field(const LinearSystem& sys, const std::vector<double>& rise,
                            SolveStats stats) {
  TemperatureField f;
  f.mesh = sys.mesh;
  f.ambient_ref_c = sys.ambient_ref_c;
  f.stats = std::move(stats);
  f.t_c.resize(rise.size());
  for (size_t i = 0; i < rise.size(); ++i) f.t_c[i] = sys.ambient_ref_c + rise[i];
  return f;
}

}  // namespace

TemperatureField solve(const LinearSystem& sys, const SolverOptions& opts) {
  if (sys.n <= 0) throw SolveError("empty system");
  if (sys.boundary_conductance_w_k <= 0.0) {
    throw SolveError(
        "no heat escape path: every boundary is adiabatic and no face "
        "temperature is fixed");
  }
#ifdef SIPHEAT_HAVE_OPENMP
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    return opts.deterministic ? dot_deterministic(a, b) : dot_fast(a, b);
  };

  SolveStats stats;
  switch (opts.precond) {
    case Preconditioner::kJacobi: stats.preconditioner = "jacobi"; break;
    case Preconditioner::kLine: stats.preconditioner = "line"; break;
    case Preconditioner::kTwoLevel: stats.preconditioner = "two_level"; break;
  }
  stats.deterministic = opts.deterministic;

  const std::int64_t n = sys.n;
  std::vector<double> x(n, 0.0);
  std::vector<double> r = sys.b_rise_w;
  const double bnorm = std::sqrt(dot(r, r));
  if (bnorm == 0.0) {
    stats.converged = true;
    return make_field(sys, x, stats);  // nothing drives a rise anywhere
  }

  std::unique_ptr<LinePreconditioner> line;
  std::unique_ptr<TwoLevelPreconditioner> two_level;
  if (opts.precond == Preconditioner::kLine) {
    line = std::make_unique<LinePreconditioner>(sys);
  } else if (opts.precond == Preconditioner::kTwoLevel) {
    two_level = std::make_unique<TwoLevelPreconditioner>(sys);
  }
  auto precondition = [&](const std::vector<double>& rr, std::vector<double>& zz) {
    if (two_level) {
      two_level->apply(rr, zz);
    } else if (line) {
      line->apply(rr, zz);
    } else {
#ifdef SIPHEAT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (std::int64_t i = 0; i < n; ++i) zz[i] = rr[i] / sys.diag[i];
    }
  };

  std::vector<double> z(n), p(n), q(n);
  precondition(r, z);
  p = z;
  double rz = dot(r, z);

  std::vector<double> best_x = x;
  double best_rn = bnorm;
  const double target = opts.tol * bnorm;

  for (int it = 1; it <= opts.max_iter; ++it) {
    sys.apply(p.data(), q.data());
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      stats.iterations = it;
      stats.rel_residual = best_rn / bnorm;
      throw NonConvergenceError(
          "conjugate gradients broke down (matrix not positive definite?)",
          stats, std::make_shared<TemperatureField>(make_field(sys, best_x, stats)));
    }
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    double rn = std::sqrt(dot(r, r));
    if (rn < best_rn) {
      best_rn = rn;
      best_x = x;
    }
    if (rn <= target) {
      // Recurrence residuals drift; confirm with the true residual before
      // declaring convergence.
      sys.apply(x.data(), q.data());
      for (std::int64_t i = 0; i < n; ++i) q[i] = sys.b_rise_w[i] - q[i];
      const double rtrue = std::sqrt(dot(q, q));
      if (rtrue <= target) {
        stats.iterations = it;
        stats.rel_residual = rtrue / bnorm;
        stats.converged = true;
        return make_field(sys, x, stats);
      }
      r = q;
      rn = rtrue;
    }
    precondition(r, z);
    const double rz_next = dot(r, z);
    xpby(z, rz_next / rz, p);
    rz = rz_next;
    stats.iterations = it;
  }

  stats.rel_residual = best_rn / bnorm;
  throw NonConvergenceError(
      "no convergence to tol " + std::to_string(opts.tol) + " within " +
          std::to_string(opts.max_iter) + " iterations (best residual " +
          std::to_string(stats.rel_residual) + ")",
      stats, std::make_shared<TemperatureField>(make_field(sys, best_x, stats)));
}

EnergyBalance energy_balance(const TemperatureField& field, const LinearSystem& sys) {
  EnergyBalance eb;
  for (double p : sys.mesh->power_w) eb.p_in_w += p;
  for (const auto& f : sys.top_faces)
    eb.q_top_w += f.g_w_k * (field.t_c[f.row] - sys.top_ambient_c);
  for (const auto& f : sys.bottom_faces)
    eb.q_bottom_w += f.g_w_k * (field.t_c[f.row] - sys.bottom_ambient_c);
  for (const auto& f : sys.dirichlet_faces)
    eb.q_dirichlet_w += f.g_w_k * (field.t_c[f.row] - f.t_c);
  if (eb.p_in_w > 0.0) {
    eb.residual_frac =
        std::abs(eb.p_in_w - (eb.q_top_w + eb.q_bottom_w + eb.q_dirichlet_w)) /
        eb.p_in_w;
  }
  return eb;
}

Grid2D surface_temperature(const TemperatureField& field, const LinearSystem& sys,
                           bool top) {
  const Mesh& m = *sys.mesh;
  Grid2D g;
  g.nx = m.nx;
  g.ny = m.ny;
  g.pitch_um = m.pitch_um;
  g.ox_mm = m.x0_mm;
  g.oy_mm = m.y0_mm;
  g.label = top ? "surface_top" : "surface_bottom";
  g.v.assign(static_cast<size_t>(m.nx) * m.ny, field.ambient_ref_c);

  const int iz = top ? m.nz - 1 : 0;
  const double side_amb = top ? sys.top_ambient_c : sys.bottom_ambient_c;

  // Convective faces: face heat balance gives the surface temperature.
  const auto& faces = top ? sys.top_faces : sys.bottom_faces;
  std::vector<char> done(g.v.size(), 0);
  for (const auto& f : faces) {
    const int ix = m.ax[f.row], iy = m.ay[f.row];
    const double q = f.g_w_k * (field.t_c[f.row] - side_amb);
    g.at(ix, iy) = side_amb + q / f.ha_w_k;
    done[static_cast<size_t>(iy) * m.nx + ix] = 1;
  }

  // Adiabatic exterior faces: cell temperature, plus the half-cell drop for
  // a source-carrying boundary cell (power injected at the exterior face).
  for (int ixx = 0; ixx < m.nx; ++ixx) {
    for (int iyy = 0; iyy < m.ny; ++iyy) {
      if (done[static_cast<size_t>(iyy) * m.nx + ixx]) continue;
      const std::int32_t id = m.id_at(ixx, iyy, iz);
      if (id < 0) continue;
      const double dz_m = m.dz_um(iz) * kUmToM;
      const double a_z = (m.pitch_um * kUmToM) * (m.pitch_um * kUmToM);
      const double half_drop =
          m.power_w[id] * (0.5 * dz_m) / (m.k_w_mk[id] * a_z);
      g.at(ixx, iyy) = field.t_c[id] + half_drop;
    }
  }
  return g;
}

}  // namespace sipheat
