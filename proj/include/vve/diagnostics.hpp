#pragma once
/// @file diagnostics.hpp
/// @brief Measurements over states and short trajectory windows: the energy
///        balance, the truncated energy functional, the normal-recovery
///        structure matrix, boundary-layer indicators and a Korn-type ratio.
///
/// All energies are normalized relative to the rest state eta = x, v = 0,
/// f = rho0 so that the half-space truncation carries zero energy.  For the
/// basic energy the normalization subtracts the *constants* |I|^2 = 3 and
/// Q(rho0) inside the integral; subtracting the identity from grad eta
/// instead would add the non-constant cross term -2 tr(grad eta - I) and
/// break the exact balance law.
///
/// Time derivatives inside the energy functional are divided backward
/// differences of stored snapshots, never substitutions of the right-hand
/// side, so the functional can catch errors in the momentum assembly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vve/boundary.hpp"
#include "vve/dynamics.hpp"
#include "vve/errors.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/material.hpp"

namespace vve {

/// One row of the diagnostics stream (fixed column order; the CSV header
/// lives with the I/O layer).
struct DiagnosticsReport {
  double t{0.0};
  double basic_energy{0.0};
  double dissipation_cum{0.0};
  double boundary_work_cum{0.0};
  double balance_residual{0.0};
  double energy_functional{0.0};
  double min_J{0.0};
  double max_J{0.0};
  double A_min_eig_margin{0.0};
  double normal_recovery_residual{0.0};
  double bl_indicator{0.0};
  double korn_ratio{0.0};
  double wall_structure_residual{0.0};
};

/// Column-ordered view of a report row.
inline std::array<double, 13> report_values(const DiagnosticsReport& r) {
  return {r.t,
          r.basic_energy,
          r.dissipation_cum,
          r.boundary_work_cum,
          r.balance_residual,
          r.energy_functional,
          r.min_J,
          r.max_J,
          r.A_min_eig_margin,
          r.normal_recovery_residual,
          r.bl_indicator,
          r.korn_ratio,
          r.wall_structure_residual};
}

/// E = 1/2 int rho0 (|v|^2 + (|grad eta|^2 - 3) + 2 (Q(rho0/J) - Q(rho0))).
inline double basic_energy(const Grid& g, const FlowMapState& state, const GeometricCache& cache,
                           const ScalarField& rho0, const MaterialParams& mp) {
  ScalarField density(g.num_nodes());
  for (std::size_t n = 0; n < density.size(); ++n) {
    double v2 = 0.0, f2 = 0.0;
    for (int c = 0; c < 3; ++c) v2 += state.vel.c[c][n] * state.vel.c[c][n];
    for (int e = 0; e < 9; ++e) f2 += cache.F.m[e][n] * cache.F.m[e][n];
    const double dq = q_potential(rho0[n] / cache.J[n], mp.gamma) - q_potential(rho0[n], mp.gamma);
    density[n] = 0.5 * rho0[n] * (v2 + (f2 - 3.0) + 2.0 * dq);
  }
  return integrate_volume(g, density);
}

/// Instantaneous dissipation rate 2 mu eps int J |S|^2 + lambda eps int J (div)^2.
/// Returns 0 without reading mu or lambda when eps = 0.
inline double dissipation_rate(const Grid& g, const GeometricCache& cache, const VectorField& vel,
                               const MaterialParams& mp) {
  if (!(mp.eps > 0.0)) return 0.0;
  const TensorField gradv = vector_gradient(g, vel);
  const TensorField S = strain_rate(g, cache, gradv);
  const ScalarField dv = div_eta(g, cache, gradv);
  ScalarField density(g.num_nodes());
  for (std::size_t n = 0; n < density.size(); ++n) {
    double s2 = 0.0;
    for (int e = 0; e < 9; ++e) s2 += S.m[e][n] * S.m[e][n];
    density[n] = cache.J[n] * (2.0 * mp.mu * mp.eps * s2 + mp.lambda * mp.eps * dv[n] * dv[n]);
  }
  return integrate_volume(g, density);
}

/// Instantaneous boundary work rate alpha eps int_Gamma |a33| |v|^2; exactly 0
/// for no-slip walls or eps = 0 (alpha is not read in either case).
inline double boundary_work_rate(const Grid& g, const GeometricCache& cache, const VectorField& vel,
                                 const MaterialParams& mp, const BoundaryCondition& bc) {
  if (bc.kind == BCKind::no_slip || !(mp.eps > 0.0)) return 0.0;
  const std::size_t s = g.wall_stride();
  ScalarField density(g.num_nodes(), 0.0);
  for (std::size_t n = 0; n < s; ++n) {
    double v2 = 0.0;
    for (int c = 0; c < 3; ++c) v2 += vel.c[c][n] * vel.c[c][n];
    density[n] = bc.alpha * mp.eps * std::abs(cache.a.comp(2, 2)[n]) * v2;
  }
  return integrate_boundary(g, density);
}

/// Structure matrix of the normal-derivative recovery:
/// A_ij = rho0 J delta_ij + gamma (rho0/J)^gamma a_i3 a_j3.
inline TensorField assemble_A(const Grid& g, const GeometricCache& cache, const ScalarField& rho0,
                              double gamma) {
  TensorField out(g);
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    const double base = rho0[n] * cache.J[n];
    const double coef = gamma * std::pow(rho0[n] / cache.J[n], gamma);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out.comp(i, j)[n] =
            (i == j ? base : 0.0) + coef * cache.a.comp(i, 2)[n] * cache.a.comp(j, 2)[n];
  }
  return out;
}

/// min over nodes of (lambda_min(A) - rho0 J): the quadratic form guarantees
/// a nonnegative value up to eigensolver rounding.
inline double A_spectrum_margin(const Grid& g, const TensorField& A, const GeometricCache& cache,
                                const ScalarField& rho0) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    const auto ev = sym3_eigenvalues(A.at(n));
    margin = std::min(margin, ev[0] - rho0[n] * cache.J[n]);
  }
  return margin;
}

/// Max over the first z_frac of the slab of |d_z v_tangential|.
inline double boundary_layer_indicator(const Grid& g, const FlowMapState& state,
                                       double z_frac = 0.1) {
  double worst = 0.0;
  for (int b = 0; b < 2; ++b) {
    const ScalarField dz = diff(g, state.vel.c[b], Axis::z);
    for (int k = 0; k < g.nz; ++k) {
      if (g.z(k) > z_frac * g.Lz) break;
      const std::size_t row = static_cast<std::size_t>(k) * g.wall_stride();
      for (std::size_t n = row; n < row + g.wall_stride(); ++n)
        worst = std::max(worst, std::abs(dz[n]));
    }
  }
  return worst;
}

/// ||grad f||_0^2 / (||S_eta(f) - (1/3) div_eta(f) I||_0^2 + ||f||_0^2);
/// returns 0 when the denominator is below 1e-30 (f essentially vanishes).
inline double korn_ratio(const Grid& g, const GeometricCache& cache, const VectorField& f) {
  const TensorField gradf = vector_gradient(g, f);
  const TensorField S = strain_rate(g, cache, gradf);
  const ScalarField dv = div_eta(g, cache, gradf);
  double num = 0.0, den = l2_sq(g, f);
  for (int e = 0; e < 9; ++e) num += l2_sq(g, gradf.m[e]);
  ScalarField dev(g.num_nodes());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (std::size_t n = 0; n < dev.size(); ++n)
        dev[n] = S.comp(i, j)[n] - (i == j ? dv[n] / 3.0 : 0.0);
      den += l2_sq(g, dev);
    }
  if (den < 1e-30) return 0.0;
  return num / den;
}

/// Consistency of the pointwise structure identity
///   -A_ij d3^2 eta_j - mu eps a_k3 a_k3 d3^2 v_i - (mu+lambda) eps a_i3 a_j3 d3^2 v_j
///     = F_i + G_i
/// measured as max |eta''_recovered - eta''_direct| over the interior band.
/// The right side assembles G term by term (tangential pieces of the pressure
/// Hessian sum, the d_t v term via the momentum operator, the tangential
/// Laplacian, the rho0-gradient terms), while the first-order viscous
/// remainder in F is obtained by direct assembly — the full discrete viscous
/// operator minus its normal principal part — which keeps the measurement
/// independent of how the product-rule expansion of that remainder is
/// written.  The rho0-gradient pressure term carries the J-weight that makes
/// the identity exact under the uniform J-scaling of the momentum equation.
inline double normal_recovery_residual(const Grid& g, const FlowMapState& state,
                                       const GeometricCache& cache, const ScalarField& rho0,
                                       const MaterialParams& mp) {
  // The identity part of the structure matrix comes from the elastic block;
  // without it the pointwise system is rank one and the recovery is not
  // defined, so the residual is reported as zero (not measured).
  if (!mp.elastic_on) return 0.0;
  const MomentumParts parts = momentum_rhs(g, state, cache, rho0, mp, nullptr);
  const TensorField gradv = vector_gradient(g, state.vel);
  const double mu_eps = mp.eps > 0.0 ? mp.mu * mp.eps : 0.0;
  const double mulam_eps = mp.eps > 0.0 ? (mp.mu + mp.lambda) * mp.eps : 0.0;

  // All second derivatives as composed first differences of the cached
  // gradients, so both sides of the identity share one composition rule.
  std::array<std::array<std::array<ScalarField, 3>, 3>, 3> dF;  // dF[k][r][s] = D_k F_rs
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) dF[k][r][s] = diff(g, cache.F.comp(r, s), static_cast<Axis>(k));
  std::array<ScalarField, 3> X;  // d3^2 v
  for (int i = 0; i < 3; ++i) X[i] = diff(g, gradv.comp(i, 2), Axis::z);
  std::array<ScalarField, 3> Drho;
  for (int k = 0; k < 3; ++k) Drho[k] = diff(g, rho0, static_cast<Axis>(k));

  double worst = 0.0;
  const int k_lo = 2, k_hi = g.nz - 4;  // interior band: wall rows are lower order
  for (int k = k_lo; k <= k_hi; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        const double J = cache.J[n];
        const double rj = rho0[n] * J;
        const double pg = mp.gamma * std::pow(rho0[n] / J, mp.gamma);
        const double pg1 = mp.gamma * std::pow(rho0[n] / J, mp.gamma - 1.0);
        double a3[3], adotX = 0.0, N = 0.0;
        for (int c = 0; c < 3; ++c) {
          a3[c] = cache.a.comp(c, 2)[n];
          adotX += a3[c] * X[c][n];
          N += a3[c] * a3[c];
        }

        double rhs[3];
        for (int c = 0; c < 3; ++c) {
          // F_c: direct-assembled viscous remainder + off-normal second-order
          // sum, collapsed to J * (full viscous) - normal principal part.
          const double Fc = J * parts.viscous_term.c[c][n] - mu_eps * N * X[c][n] -
                            mulam_eps * a3[c] * adotX;
          // G_c, term by term.
          double press = 0.0;  // sum over (k,s) != (3,3) of a_ck a_rs D_k F_rs
          for (int kk = 0; kk < 3; ++kk)
            for (int ss = 0; ss < 3; ++ss) {
              if (kk == 2 && ss == 2) continue;
              double inner = 0.0;
              for (int r = 0; r < 3; ++r) inner += cache.a.comp(r, ss)[n] * dF[kk][r][ss][n];
              press += cache.a.comp(c, kk)[n] * inner;
            }
          const double tang_lap = dF[0][c][0][n] + dF[1][c][1][n];
          double grad_rho = 0.0, rho_eta = 0.0;
          for (int kk = 0; kk < 3; ++kk) {
            grad_rho += cache.a.comp(c, kk)[n] * Drho[kk][n];
            rho_eta += Drho[kk][n] * cache.F.comp(c, kk)[n];
          }
          const double Gc = pg * press - rj * parts.accel.c[c][n] + rj * tang_lap -
                            pg1 * grad_rho + J * rho_eta;
          rhs[c] = -(Fc + Gc) - mu_eps * N * X[c][n] - mulam_eps * a3[c] * adotX;
        }

        // Solve A y = rhs with A = c (I + d n n^T) by Sherman–Morrison.
        const double cbase = rj;
        const double d = mp.gamma * std::pow(rho0[n], mp.gamma - 1.0) * std::pow(J, -mp.gamma - 1.0);
        const double denom = 1.0 + d * N;
        if (!(cbase > 0.0) || !(denom < 1e12))
          throw Error(ErrorKind::SingularRecovery,
                      "normal recovery system conditioning " + std::to_string(denom) +
                          " at node " + std::to_string(n));
        double adotr = 0.0;
        for (int c = 0; c < 3; ++c) adotr += a3[c] * rhs[c];
        for (int c = 0; c < 3; ++c) {
          const double y = (rhs[c] - (d / denom) * a3[c] * adotr) / cbase;
          const double y_direct = dF[2][c][2][n];
          worst = std::max(worst, std::abs(y - y_direct));
        }
      }
  return worst;
}

namespace detail {

/// H^order squared norm of a component list: sum of L2 squares of every
/// composed derivative string up to the given length (mixed strings counted
/// per composition order — an equivalent norm, used consistently throughout).
inline double hnorm_sq(const Grid& g, std::vector<ScalarField> level, int order) {
  double total = 0.0;
  for (const auto& f : level) total += l2_sq(g, f);
  for (int ell = 0; ell < order; ++ell) {
    std::vector<ScalarField> next;
    next.reserve(level.size() * 3);
    for (const auto& f : level)
      for (int ax = 0; ax < 3; ++ax) next.push_back(diff(g, f, static_cast<Axis>(ax)));
    level = std::move(next);
    for (const auto& f : level) total += l2_sq(g, f);
  }
  return total;
}

/// Sum over tangential multi-indices (a1, a2), a1 + a2 = order, of the L2
/// squares of d_x^{a1} d_y^{a2} applied to each component.
inline double tangential_sq(const Grid& g, const std::vector<ScalarField>& comps, int order) {
  double total = 0.0;
  for (int a1 = 0; a1 <= order; ++a1) {
    const int a2 = order - a1;
    for (const auto& f : comps) {
      ScalarField d = f;
      for (int r = 0; r < a1; ++r) d = diff(g, d, Axis::x);
      for (int r = 0; r < a2; ++r) d = diff(g, d, Axis::y);
      total += l2_sq(g, d);
    }
  }
  return total;
}

inline std::vector<ScalarField> field_difference(const std::vector<ScalarField>& older,
                                                 const std::vector<ScalarField>& newer,
                                                 double inv_dt) {
  std::vector<ScalarField> out(newer.size());
  for (std::size_t c = 0; c < newer.size(); ++c) {
    out[c].resize(newer[c].size());
    for (std::size_t n = 0; n < newer[c].size(); ++n)
      out[c][n] = (newer[c][n] - older[c][n]) * inv_dt;
  }
  return out;
}

}  // namespace detail

/// Streaming evaluator of the truncated energy functional
///   E(t) = sum_{j<=m} ||d_t^j eta||_{m-j}^2 + ||d_t^j dtau^{m-j}(grad eta, v, q)||_0^2
///        + sum_{j<=m-1} eps ||d_t^j grad^2 eta||_{m-1-j}^2
///        + sum_{j<=m} int_0^t ||d_t^j(grad eta, v, eps grad v)||_{m-j}^2
///                           + eps ||d_t^j dtau^{m-j} grad v||_0^2
/// with every field rest-normalized, time derivatives by divided backward
/// differences over a three-snapshot ring, and the time integrals accumulated
/// by the trapezoid rule as snapshots are pushed.
class EnergyFunctionalAccumulator {
 public:
  EnergyFunctionalAccumulator(const Grid& g, ScalarField rho0, MaterialParams mp, int m_impl)
      : g_(g), rho0_(std::move(rho0)), mp_(mp), m_(m_impl) {
    if (m_ < 1 || m_ > 2)
      throw Error(ErrorKind::ConfigError, "energy functional truncation order must be 1 or 2");
    cum_.assign(m_ + 1, 0.0);
    last_integrand_.assign(m_ + 1, 0.0);
    has_integrand_.assign(m_ + 1, false);
  }

  void push(const FlowMapState& state, const GeometricCache& cache) {
    Entry e;
    e.t = state.t;
    const VectorField disp = displacement(g_, state.eta);
    for (int c = 0; c < 3; ++c) e.disp.push_back(disp.c[c]);
    const TensorField grad = vector_gradient(g_, disp);
    for (int comp = 0; comp < 9; ++comp) e.grad.push_back(grad.m[comp]);
    for (int comp = 0; comp < 9; ++comp)
      for (int ax = 0; ax < 3; ++ax)
        e.hess.push_back(diff(g_, grad.m[comp], static_cast<Axis>(ax)));
    for (int c = 0; c < 3; ++c) e.v.push_back(state.vel.c[c]);
    const TensorField gv = vector_gradient(g_, state.vel);
    for (int comp = 0; comp < 9; ++comp) e.gradv.push_back(gv.m[comp]);
    ScalarField q(g_.num_nodes());
    for (std::size_t n = 0; n < q.size(); ++n)
      q[n] = std::pow(rho0_[n] / cache.J[n], mp_.gamma) - std::pow(rho0_[n], mp_.gamma);
    e.q.push_back(std::move(q));

    ring_.push_back(std::move(e));
    if (ring_.size() > 3) ring_.pop_front();

    // Trapezoid accumulation of the cumulative terms for every time order the
    // current history supports.
    for (int j = 0; j <= m_; ++j) {
      if (static_cast<int>(ring_.size()) < j + 1) break;
      const double I = cumulative_integrand(j);
      if (has_integrand_[j])
        cum_[j] += 0.5 * (last_integrand_[j] + I) * (ring_.back().t - prev_t_);
      last_integrand_[j] = I;
      has_integrand_[j] = true;
    }
    prev_t_ = ring_.back().t;
  }

  int history() const { return static_cast<int>(ring_.size()); }
  int order() const { return m_; }

  /// Functional value truncated to time orders j <= max_time_order; spatial
  /// orders stay pinned to the configured m.  Throws InsufficientHistory when
  /// the ring cannot support the requested order.
  double value(int max_time_order) const {
    if (max_time_order < 0 || max_time_order > m_)
      throw Error(ErrorKind::ConfigError, "requested time order outside the configured truncation");
    if (static_cast<int>(ring_.size()) < max_time_order + 1)
      throw Error(ErrorKind::InsufficientHistory,
                  "energy functional needs " + std::to_string(max_time_order + 1) +
                      " snapshots, have " + std::to_string(ring_.size()));
    double total = 0.0;
    for (int j = 0; j <= max_time_order; ++j) {
      const auto disp_j = time_derivative(&Entry::disp, j);
      const auto grad_j = time_derivative(&Entry::grad, j);
      const auto v_j = time_derivative(&Entry::v, j);
      const auto q_j = time_derivative(&Entry::q, j);
      total += detail::hnorm_sq(g_, disp_j, m_ - j);
      std::vector<ScalarField> block = grad_j;
      block.insert(block.end(), v_j.begin(), v_j.end());
      block.insert(block.end(), q_j.begin(), q_j.end());
      total += detail::tangential_sq(g_, block, m_ - j);
      if (j <= m_ - 1 && mp_.eps > 0.0)
        total += mp_.eps * detail::hnorm_sq(g_, time_derivative(&Entry::hess, j), m_ - 1 - j);
      total += cum_[j];
    }
    return total;
  }

 private:
  struct Entry {
    double t{0.0};
    std::vector<ScalarField> disp, grad, hess, v, gradv, q;
  };

  /// Divided backward difference of order j (0, 1 or 2) of one entry member,
  /// valid for non-uniform snapshot spacing.
  std::vector<ScalarField> time_derivative(std::vector<ScalarField> Entry::*member, int j) const {
    const std::size_t s = ring_.size();
    if (j == 0) return ring_.back().*member;
    if (j == 1)
      return detail::field_difference(ring_[s - 2].*member, ring_[s - 1].*member,
                                      1.0 / (ring_[s - 1].t - ring_[s - 2].t));
    const auto d21 = detail::field_difference(ring_[s - 2].*member, ring_[s - 1].*member,
                                              1.0 / (ring_[s - 1].t - ring_[s - 2].t));
    const auto d10 = detail::field_difference(ring_[s - 3].*member, ring_[s - 2].*member,
                                              1.0 / (ring_[s - 2].t - ring_[s - 3].t));
    return detail::field_difference(d10, d21, 2.0 / (ring_[s - 1].t - ring_[s - 3].t));
  }

  double cumulative_integrand(int j) const {
    const auto grad_j = time_derivative(&Entry::grad, j);
    const auto v_j = time_derivative(&Entry::v, j);
    auto gv_j = time_derivative(&Entry::gradv, j);
    std::vector<ScalarField> block = grad_j;
    block.insert(block.end(), v_j.begin(), v_j.end());
    for (auto& f : gv_j)
      for (double& x : f) x *= mp_.eps;
    block.insert(block.end(), gv_j.begin(), gv_j.end());
    double I = detail::hnorm_sq(g_, block, m_ - j);
    if (mp_.eps > 0.0)
      I += mp_.eps * detail::tangential_sq(g_, time_derivative(&Entry::gradv, j), m_ - j);
    return I;
  }

  Grid g_;
  ScalarField rho0_;
  MaterialParams mp_;
  int m_;
  std::deque<Entry> ring_;
  std::vector<double> cum_, last_integrand_;
  std::vector<bool> has_integrand_;
  double prev_t_{0.0};
};

/// Streaming producer of diagnostics rows: accumulates the dissipation and
/// boundary-work integrals between pushes and evaluates every per-state
/// measurement.  The energy functional reports partial sums (time orders the
/// history supports) on the first rows and the full truncation afterwards.
class DiagnosticsReporter {
 public:
  DiagnosticsReporter(const Grid& g, ScalarField rho0, MaterialParams mp, BoundaryCondition bc,
                      int m_impl = 2)
      : g_(g), rho0_(std::move(rho0)), mp_(mp), bc_(bc), func_(g, rho0_, mp, m_impl) {}

  DiagnosticsReport report(const FlowMapState& state, const GeometricCache& cache) {
    DiagnosticsReport r;
    r.t = state.t;
    r.min_J = cache.J[0];
    r.max_J = cache.J[0];
    for (double v : cache.J) {
      r.min_J = std::min(r.min_J, v);
      r.max_J = std::max(r.max_J, v);
    }

    r.basic_energy = basic_energy(g_, state, cache, rho0_, mp_);
    const double drate = dissipation_rate(g_, cache, state.vel, mp_);
    const double brate = boundary_work_rate(g_, cache, state.vel, mp_, bc_);
    if (have_prev_) {
      const double dt = state.t - prev_t_;
      const double dD = 0.5 * (prev_drate_ + drate) * dt;
      const double dB = 0.5 * (prev_brate_ + brate) * dt;
      dissipation_cum_ += dD;
      boundary_work_cum_ += dB;
      r.balance_residual = std::abs((r.basic_energy - prev_E_) + dD - dB);
    }
    r.dissipation_cum = dissipation_cum_;
    r.boundary_work_cum = boundary_work_cum_;

    func_.push(state, cache);
    r.energy_functional = func_.value(std::min(func_.order(), func_.history() - 1));

    const TensorField A = assemble_A(g_, cache, rho0_, mp_.gamma);
    r.A_min_eig_margin = A_spectrum_margin(g_, A, cache, rho0_);
    r.normal_recovery_residual = normal_recovery_residual(g_, state, cache, rho0_, mp_);
    r.bl_indicator = boundary_layer_indicator(g_, state);
    r.korn_ratio = korn_ratio(g_, cache, state.vel);
    r.wall_structure_residual = wall_structure_residual(g_, cache);

    prev_t_ = state.t;
    prev_E_ = r.basic_energy;
    prev_drate_ = drate;
    prev_brate_ = brate;
    have_prev_ = true;
    return r;
  }

 private:
  Grid g_;
  ScalarField rho0_;
  MaterialParams mp_;
  BoundaryCondition bc_;
  EnergyFunctionalAccumulator func_;
  bool have_prev_{false};
  double prev_t_{0.0}, prev_E_{0.0}, prev_drate_{0.0}, prev_brate_{0.0};
  double dissipation_cum_{0.0}, boundary_work_cum_{0.0};
};

}  // namespace vve
