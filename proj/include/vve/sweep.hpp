#pragma once
/// @file sweep.hpp
/// @brief Vanishing-viscosity experiment driver: run an eps-family together
///        with its eps = 0 limit on identical data and a shared step size,
///        stream difference norms against the limit run, and fit log-log
///        rates.
///
/// A sweep is organised into families, one per (boundary kind, mode) pair.
/// Each family runs the inviscid reference first (when requested) and keeps
/// its sampled snapshots in memory; the eps-runs then stream their norms
/// against those snapshots without ever storing their own trajectories.  All
/// runs share one fixed step size, so samples align exactly by step index
/// and the recorded differences are pointwise well-defined.
///
/// Runs are independent and may execute concurrently (`SweepPlan::jobs`);
/// every per-run reduction is sequential and results are assembled in plan
/// order, so a sweep is bitwise reproducible regardless of the job count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vve/boundary.hpp"
#include "vve/core.hpp"
#include "vve/diagnostics.hpp"
#include "vve/dynamics.hpp"
#include "vve/errors.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/integrate.hpp"
#include "vve/material.hpp"

namespace vve {

/// Which physics the family runs: the full viscoelastic system, or the
/// elastic-term-off contrast whose boundary layers are expected to blow up
/// as eps decreases.
enum class SweepMode { viscoelastic, ns_contrast };

inline const char* to_string(SweepMode m) {
  return m == SweepMode::viscoelastic ? "viscoelastic" : "ns_contrast";
}

/// What to run.  The shared ingredients (grid, rest density, base material
/// constants, integrator settings, initial data) are passed to `run_sweep`
/// directly; the plan describes the family structure around them.
struct SweepPlan {
  /// Strictly decreasing viscosity scales in (0, 1].
  std::vector<double> eps_list{1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3};
  bool include_inviscid{true};
  std::vector<SweepMode> modes{SweepMode::viscoelastic};
  std::vector<BCKind> bc_kinds{BCKind::no_slip};
  int jobs{1};          ///< concurrent runs (results are identical for any value)
  int max_samples{65};  ///< trajectory sample budget per run (>= 2)
  int func_order{2};    ///< truncation order of the energy functional (1 or 2)
  double bl_z_frac{0.1};

  void validate() const {
    if (eps_list.empty()) throw Error(ErrorKind::ConfigError, "sweep eps_list is empty");
    double prev = std::numeric_limits<double>::infinity();
    for (double e : eps_list) {
      if (!(e > 0.0) || e > 1.0)
        throw Error(ErrorKind::ConfigError, "sweep eps values must lie in (0, 1]");
      if (!(e < prev))
        throw Error(ErrorKind::ConfigError, "sweep eps_list must be strictly decreasing");
      prev = e;
    }
    if (modes.empty()) throw Error(ErrorKind::ConfigError, "sweep modes is empty");
    if (bc_kinds.empty()) throw Error(ErrorKind::ConfigError, "sweep bc_kinds is empty");
    if (jobs < 1) throw Error(ErrorKind::ConfigError, "sweep jobs must be >= 1");
    if (max_samples < 2) throw Error(ErrorKind::ConfigError, "sweep max_samples must be >= 2");
    if (func_order < 1 || func_order > 2)
      throw Error(ErrorKind::ConfigError, "sweep func_order must be 1 or 2");
    if (!(bl_z_frac > 0.0) || bl_z_frac > 1.0)
      throw Error(ErrorKind::ConfigError, "sweep bl_z_frac must lie in (0, 1]");
  }
};

/// One run's worth of measurements.  Difference norms are taken against the
/// eps = 0 run of the same family and are NaN when that reference is absent
/// or failed; they are identically zero on the reference itself.
struct SweepRecord {
  double eps{0.0};
  BCKind bc{BCKind::no_slip};
  SweepMode mode{SweepMode::viscoelastic};
  bool ok{false};
  std::string error;  ///< error kind and message when !ok

  double sup_eta_l2{0.0};
  double sup_v_l2{0.0};
  double sup_grad_eta_l2{0.0};
  double max_energy_functional{0.0};
  double max_bl_indicator{0.0};
  /// Indicator max over the late half of the samples (t >= t_final / 2).
  /// This is the statistic the layer exponent is fitted on: the late window
  /// has forgotten the universal startup transient every viscous run shares,
  /// yet it still catches travelling elastic fronts wherever they happen to
  /// sit at the final instant, so the fit is not hostage to a single
  /// measurement time.
  double bl_late{0.0};
  double bl_at_t_final{0.0};
  /// Max over samples of the wall residual rho0 (F_b3 |a_3|^2 - J a_b3),
  /// b = 1, 2 — the relation the inviscid navier_slip limit satisfies.  On
  /// the tangentially uniform wall states the sweeps use it reduces to
  /// rho0 d_3 eta_b.
  double limit_bc_residual{0.0};

  long steps{0};
  std::vector<std::string> guard_trips;
};

/// Least-squares slope on (log eps, log value) with its goodness of fit.
struct RateFit {
  double slope{0.0};
  double r2{0.0};
  int points{0};
  bool ok{false};
};

/// Fitted rates of one family.  Convergence rates use the deepest three
/// eps-points (the asymptotic tail); the layer exponent uses every
/// successful point, since the layer scaling is a law across the whole
/// resolved range rather than a limit statement.
struct FamilyFit {
  BCKind bc{BCKind::no_slip};
  SweepMode mode{SweepMode::viscoelastic};
  RateFit eta_rate;
  RateFit v_rate;
  RateFit grad_rate;
  RateFit layer_exponent;
};

struct SweepResult {
  double fixed_dt{0.0};
  long sample_every{1};
  std::vector<double> sample_times;
  std::vector<SweepRecord> records;
  std::vector<FamilyFit> fits;
};

/// Ordinary least squares on (log eps, log value).  Requires at least three
/// points, all strictly positive; non-positive values raise NonPositiveValue
/// (callers that must continue flag the fit instead of fitting).
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw Error(ErrorKind::ConfigError, "rate fit needs at least 3 points, got " +
                                            std::to_string(points.size()));
  double sx = 0.0, sy = 0.0;
  for (const auto& [e, v] : points) {
    if (!(e > 0.0) || !(v > 0.0))
      throw Error(ErrorKind::NonPositiveValue,
                  "rate fit requires positive (eps, value) pairs; got (" + std::to_string(e) +
                      ", " + std::to_string(v) + ")");
    sx += std::log(e);
    sy += std::log(v);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [e, v] : points) {
    const double dx = std::log(e) - mx;
    const double dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0))
    throw Error(ErrorKind::ConfigError, "rate fit needs distinct eps values");
  RateFit f;
  f.slope = sxy / sxx;
  double ss_res = 0.0;
  for (const auto& [e, v] : points) {
    const double r = (std::log(v) - my) - f.slope * (std::log(e) - mx);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.points = static_cast<int>(points.size());
  f.ok = true;
  return f;
}

/// Max wall magnitude of rho0 (F_b3 |a_3|^2 - J a_b3), b = 1, 2: the
/// tangential relation of the inviscid navier_slip limit.
inline double limit_bc_wall_residual(const Grid& g, const GeometricCache& c,
                                     const ScalarField& rho0) {
  double worst = 0.0;
  const std::size_t s = g.wall_stride();
  for (std::size_t n = 0; n < s; ++n) {
    const double a13 = c.a.comp(0, 2)[n];
    const double a23 = c.a.comp(1, 2)[n];
    const double a33 = c.a.comp(2, 2)[n];
    const double n2 = a13 * a13 + a23 * a23 + a33 * a33;
    for (int b = 0; b < 2; ++b) {
      const double r = rho0[n] * (c.F.comp(b, 2)[n] * n2 - c.J[n] * c.a.comp(b, 2)[n]);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

namespace detail {

inline double l2_volume_norm(const Grid& g, const VectorField& a, const VectorField& b) {
  ScalarField dens(g.num_nodes(), 0.0);
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
      const double d = a.c[c][n] - b.c[c][n];
      dens[n] += d * d;
    }
  return std::sqrt(integrate_volume(g, dens));
}

inline double l2_gradient_norm(const Grid& g, const VectorField& a, const VectorField& b) {
  VectorField d(g);
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < g.num_nodes(); ++n) d.c[c][n] = a.c[c][n] - b.c[c][n];
  const TensorField grad = vector_gradient(g, d);
  ScalarField dens(g.num_nodes(), 0.0);
  for (int comp = 0; comp < 9; ++comp)
    for (std::size_t n = 0; n < g.num_nodes(); ++n) dens[n] += grad.m[comp][n] * grad.m[comp][n];
  return std::sqrt(integrate_volume(g, dens));
}

/// One executed run: its record plus — for reference runs only — the sampled
/// trajectory the rest of the family streams against.
struct RunOutput {
  SweepRecord rec;
  std::vector<VectorField> eta_samples;
  std::vector<VectorField> v_samples;
  std::vector<double> times;
};

/// Executes a single run at the given eps.  `ref` is the family's completed
/// inviscid output (nullptr while producing that output, or when the plan
/// omits it); `keep_samples` stores the trajectory for later streaming.
inline RunOutput execute_run(const Grid& g, const FlowMapState& init, const ScalarField& rho0,
                             const MaterialParams& base, const IntegratorConfig& cfg,
                             const SweepPlan& plan, BCKind bc_kind, SweepMode mode, double eps,
                             long sample_every, const RunOutput* ref, bool keep_samples) {
  RunOutput out;
  out.rec.eps = eps;
  out.rec.bc = bc_kind;
  out.rec.mode = mode;
  const bool have_ref = ref != nullptr && ref->rec.ok;
  if (!have_ref && !keep_samples) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.rec.sup_eta_l2 = out.rec.sup_v_l2 = out.rec.sup_grad_eta_l2 = nan;
  }
  try {
    MaterialParams mp = base;
    mp.eps = eps;
    mp.elastic_on = (mode == SweepMode::viscoelastic);
    const BoundaryCondition bc{bc_kind, base.alpha};
    FlowMapState state = init;
    EnergyFunctionalAccumulator func(g, rho0, mp, plan.func_order);
    std::size_t slot = 0;
    bool aligned = true;

    const auto sample = [&](const FlowMapState& st, const GeometricCache& cache) {
      func.push(st, cache);
      out.rec.max_energy_functional =
          std::max(out.rec.max_energy_functional,
                   func.value(std::min(func.order(), func.history() - 1)));
      const double bl = boundary_layer_indicator(g, st, plan.bl_z_frac);
      out.rec.max_bl_indicator = std::max(out.rec.max_bl_indicator, bl);
      if (st.t >= 0.5 * cfg.t_final) out.rec.bl_late = std::max(out.rec.bl_late, bl);
      out.rec.bl_at_t_final = bl;
      out.rec.limit_bc_residual =
          std::max(out.rec.limit_bc_residual, limit_bc_wall_residual(g, cache, rho0));
      if (have_ref) {
        if (slot < ref->eta_samples.size()) {
          out.rec.sup_eta_l2 = std::max(out.rec.sup_eta_l2,
                                        l2_volume_norm(g, st.eta, ref->eta_samples[slot]));
          out.rec.sup_v_l2 =
              std::max(out.rec.sup_v_l2, l2_volume_norm(g, st.vel, ref->v_samples[slot]));
          out.rec.sup_grad_eta_l2 = std::max(
              out.rec.sup_grad_eta_l2, l2_gradient_norm(g, st.eta, ref->eta_samples[slot]));
        } else {
          aligned = false;
        }
      }
      if (keep_samples) {
        out.eta_samples.push_back(st.eta);
        out.v_samples.push_back(st.vel);
        out.times.push_back(st.t);
      }
      ++slot;
    };

    const RunObserver obs = [&](const FlowMapState& st, const GeometricCache& cache, long step,
                                double) {
      if (step % sample_every == 0) sample(st, cache);
    };
    const RunResult res = run(g, state, rho0, mp, bc, cfg, nullptr, &obs);
    if (res.steps % sample_every != 0) {
      const GeometricCache cache = compute_geometry(g, state.eta);
      sample(state, cache);
    }
    out.rec.steps = res.steps;
    out.rec.guard_trips = res.guard_trips;
    if (!res.reached_t_final) {
      out.rec.error = "run stopped at t = " + std::to_string(res.t_end);
      return out;
    }
    if (have_ref && (!aligned || slot != ref->eta_samples.size())) {
      out.rec.error = "sample misalignment against the inviscid reference";
      return out;
    }
    out.rec.ok = true;
  } catch (const Error& e) {
    out.rec.error = e.what();
  }
  return out;
}

/// Rate fit that flags failure instead of throwing (per-family fits must not
/// abort the sweep result assembly).
inline RateFit try_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) return RateFit{};
  try {
    return fit_rate(points);
  } catch (const Error&) {
    return RateFit{};
  }
}

}  // namespace detail

/// Runs the full plan.  The initial data is shared exactly across every run
/// (the vanishing-viscosity family hypothesis realised as equal data); the
/// caller is responsible for having projected it to the wanted compatibility
/// order per boundary kind.  The step size is cfg.fixed_dt when positive,
/// otherwise 0.9x the tightest initial stability bound across the family,
/// frozen for every run so trajectories align sample-by-sample.
inline SweepResult run_sweep(const Grid& g, const FlowMapState& init, const ScalarField& rho0,
                             const MaterialParams& base, const IntegratorConfig& cfg,
                             const SweepPlan& plan) {
  plan.validate();
  cfg.validate();

  struct Family {
    BCKind bc;
    SweepMode mode;
  };
  std::vector<Family> families;
  for (BCKind bc : plan.bc_kinds)
    for (SweepMode mode : plan.modes) families.push_back({bc, mode});

  std::vector<double> eps_values = plan.eps_list;
  if (plan.include_inviscid) eps_values.push_back(0.0);

  IntegratorConfig shared = cfg;
  if (!(shared.fixed_dt > 0.0)) {
    double dt = std::numeric_limits<double>::infinity();
    for (const Family& fam : families)
      for (double eps : eps_values) {
        MaterialParams mp = base;
        mp.eps = eps;
        mp.elastic_on = (fam.mode == SweepMode::viscoelastic);
        const BoundaryCondition bc{fam.bc, base.alpha};
        FlowMapState s = init;
        const GeometricCache cache = apply_bc(g, s, rho0, mp, bc);
        dt = std::min(dt, dt_bound(g, s, cache, rho0, mp, cfg));
      }
    shared.fixed_dt = 0.9 * dt;
  }
  shared.fixed_dt = std::min(shared.fixed_dt, shared.t_final);

  SweepResult result;
  result.fixed_dt = shared.fixed_dt;
  const long n_est = static_cast<long>(std::ceil(shared.t_final / shared.fixed_dt - 1e-9));
  result.sample_every = std::max(1L, n_est / (plan.max_samples - 1));

  // Phase 1: the inviscid references, one per family, concurrently.
  std::vector<detail::RunOutput> refs(families.size());
  if (plan.include_inviscid) {
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= families.size()) return;
        refs[i] = detail::execute_run(g, init, rho0, base, shared, plan, families[i].bc,
                                      families[i].mode, 0.0, result.sample_every, nullptr, true);
      }
    };
    std::vector<std::future<void>> pool;
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(plan.jobs),
                                                 families.size());
    for (std::size_t w = 1; w < nw; ++w) pool.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : pool) f.get();
  }

  // Phase 2: the eps-runs, concurrently across the whole plan.
  struct Slot {
    std::size_t family;
    double eps;
  };
  std::vector<Slot> slots;
  for (std::size_t fi = 0; fi < families.size(); ++fi)
    for (double eps : plan.eps_list) slots.push_back({fi, eps});
  std::vector<detail::RunOutput> outs(slots.size());
  {
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= slots.size()) return;
        const Family& fam = families[slots[i].family];
        const detail::RunOutput* ref = plan.include_inviscid ? &refs[slots[i].family] : nullptr;
        outs[i] = detail::execute_run(g, init, rho0, base, shared, plan, fam.bc, fam.mode,
                                      slots[i].eps, result.sample_every, ref, false);
      }
    };
    std::vector<std::future<void>> pool;
    const std::size_t nw =
        std::min<std::size_t>(static_cast<std::size_t>(plan.jobs), std::max<std::size_t>(slots.size(), 1));
    for (std::size_t w = 1; w < nw; ++w) pool.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : pool) f.get();
  }

  // Sequential assembly in plan order: per family, the inviscid record first
  // and then the eps-list order.
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    if (plan.include_inviscid) {
      if (result.sample_times.empty() && refs[fi].rec.ok) result.sample_times = refs[fi].times;
      result.records.push_back(refs[fi].rec);
    }
    FamilyFit fit;
    fit.bc = families[fi].bc;
    fit.mode = families[fi].mode;
    std::vector<std::pair<double, double>> pe, pv, pg, pl;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].family != fi) continue;
      const SweepRecord& r = outs[i].rec;
      result.records.push_back(r);
      if (!r.ok) continue;
      if (std::isfinite(r.sup_eta_l2)) {
        pe.emplace_back(r.eps, r.sup_eta_l2);
        pv.emplace_back(r.eps, r.sup_v_l2);
        pg.emplace_back(r.eps, r.sup_grad_eta_l2);
      }
      pl.emplace_back(r.eps, r.bl_late);
    }
    // Convergence rates over the deepest three eps-points; the eps-list is
    // decreasing, so those are the last three collected.
    const auto tail3 = [](std::vector<std::pair<double, double>> p) {
      if (p.size() > 3) p.erase(p.begin(), p.end() - 3);
      return p;
    };
    fit.eta_rate = detail::try_fit(tail3(pe));
    fit.v_rate = detail::try_fit(tail3(pv));
    fit.grad_rate = detail::try_fit(tail3(pg));
    fit.layer_exponent = detail::try_fit(pl);
    result.fits.push_back(fit);
  }
  return result;
}

}  // namespace vve
