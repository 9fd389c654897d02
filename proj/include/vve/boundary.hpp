#pragma once
/// @file boundary.hpp
/// @brief Wall (z = 0) boundary conditions, truncation-top closure, and the
///        compatibility projection of initial data.
///
/// Two wall conditions are supported.
///   * no_slip: v = 0 on the wall after every application; wall positions are
///     then frozen automatically because they evolve by d_t eta = v = 0.
///   * navier_slip: v_3 = 0 on the wall and, when eps > 0, the tangential
///     Robin relation
///
///         rho0 d_3 eta_b + 2 mu eps (S_eta v)_{b3} a_33 + alpha eps |a_33| v_b = 0,
///         b = 1, 2,
///
///     enforced at every wall node.  The wall tangential velocity is the free
///     ("ghost") unknown of the discrete closure: the relation is affine in
///     the local wall values (v_1, v_2), so each node is solved exactly by a
///     numerically assembled 2x2 system, and the wall plane is swept until
///     the tangential stencil coupling between neighbouring wall nodes has
///     converged.  When eps = 0 the relation degenerates to
///     rho0 d_3 eta_b = 0, realized by one-sided extrapolation of eta_b and
///     v_b at the wall; that branch never reads mu, lambda or alpha.
///
/// The artificial top at z = Lz holds the far-field rest state (eta = x,
/// v = 0) exactly.  truncation_excess reports the largest velocity or
/// displacement magnitude in the monitoring band z > 0.9 Lz, which the time
/// loop turns into a truncation warning when it exceeds 1e-8.
///
/// Compatibility projection blends raw initial data with boundary-corrected
/// profiles through a smooth quintic cutoff chi(z / delta_c), delta_c = 8 dz
/// (chi(0) = 1, chi'(0) = chi''(0) = 0, chi = 0 beyond delta_c):
///   * order 0 drives the wall traces (no_slip: v; navier_slip: v_3 and the
///     Robin combination) below 1e-10;
///   * order 1 additionally drives the wall trace of d_t v (no_slip), or of
///     (d_t of the Robin combination, d_t v_3) (navier_slip), below 1e-6,
///     where d_t v is evaluated from the momentum equation on the data.
/// Corrections use the profiles chi (wall value), z chi (wall slope) and
/// z^2/2 chi (wall curvature), so each correction touches exactly one wall
/// trace and leaves the data untouched beyond z = delta_c.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vve/core.hpp"
#include "vve/dynamics.hpp"
#include "vve/errors.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/material.hpp"

namespace vve {

enum class BCKind { no_slip, navier_slip };

inline const char* to_string(BCKind k) {
  switch (k) {
    case BCKind::no_slip: return "no_slip";
    case BCKind::navier_slip: return "navier_slip";
  }
  return "unknown";
}

struct BoundaryCondition {
  BCKind kind{BCKind::no_slip};
  double alpha{0.0};  ///< slip friction, read only by navier_slip with eps > 0

  void validate() const {
    if (!(std::isfinite(alpha)) || alpha < 0.0)
      throw Error(ErrorKind::ConfigError, "boundary alpha must be finite and >= 0");
  }
};

/// Post-projection wall-residual thresholds.
inline constexpr double kCompatTolOrder0 = 1e-10;
inline constexpr double kCompatTolOrder1 = 1e-6;

/// Tangential wall combination C_b at wall node (i, j):
///   eps > 0:  C_b = rho0 d_3 eta_b + 2 mu eps (S_eta v)_{b3} a_33
///                   + alpha eps |a_33| v_b
///   eps = 0:  C_b = rho0 d_3 eta_b            (mu, lambda, alpha never read)
/// Derivatives are the standard node stencils; d_3 eta_b is read from the
/// cached deformation gradient so the value is consistent with the operator.
inline std::array<double, 2> robin_combination(const Grid& g, const FlowMapState& s, const GeometricCache& c,
                                               const ScalarField& rho0, const MaterialParams& mp,
                                               const BoundaryCondition& bc, int i, int j) {
  const std::size_t n = g.idx(i, j, 0);
  std::array<double, 2> C{rho0[n] * c.F.comp(0, 2)[n], rho0[n] * c.F.comp(1, 2)[n]};
  if (mp.eps > 0.0) {
    const double a33 = c.a.comp(2, 2)[n];
    for (int b = 0; b < 2; ++b) {
      double sb3 = 0.0;
      for (int l = 0; l < 3; ++l)
        sb3 += c.A.comp(2, l)[n] * node_diff(g, s.vel.c[b].data(), static_cast<Axis>(l), i, j, 0) +
               c.A.comp(b, l)[n] * node_diff(g, s.vel.c[2].data(), static_cast<Axis>(l), i, j, 0);
      sb3 *= 0.5;
      C[b] += 2.0 * mp.mu * mp.eps * sb3 * a33 + bc.alpha * mp.eps * std::abs(a33) * s.vel.c[b][n];
    }
  }
  return C;
}

/// Max |C_b| over the wall plane.
inline double robin_wall_residual(const Grid& g, const FlowMapState& s, const GeometricCache& c,
                                  const ScalarField& rho0, const MaterialParams& mp,
                                  const BoundaryCondition& bc) {
  double worst = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto C = robin_combination(g, s, c, rho0, mp, bc, i, j);
      worst = std::max(worst, std::max(std::abs(C[0]), std::abs(C[1])));
    }
  return worst;
}

/// Max wall magnitude of rho0 d_3 eta_b (b = 1, 2): the tangential relation
/// that the inviscid navier_slip closure maintains and that the limit of the
/// viscous family is measured against.
inline double inviscid_wall_residual(const Grid& g, const GeometricCache& c, const ScalarField& rho0) {
  double worst = 0.0;
  const std::size_t s = g.wall_stride();
  for (std::size_t n = 0; n < s; ++n)
    for (int b = 0; b < 2; ++b) worst = std::max(worst, std::abs(rho0[n] * c.F.comp(b, 2)[n]));
  return worst;
}

/// Position-side boundary enforcement (applied before the geometry cache is
/// rebuilt): rest state at the truncation top, and — for inviscid
/// navier_slip — one-sided extrapolation of the wall tangential positions so
/// the wall trace of d_3 eta_b vanishes.
inline void apply_bc_positions(const Grid& g, FlowMapState& s, const MaterialParams& mp,
                               const BoundaryCondition& bc) {
  const int kt = g.nz - 1;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.idx(i, j, kt);
      s.eta.c[0][n] = g.x(i);
      s.eta.c[1][n] = g.y(j);
      s.eta.c[2][n] = g.z(kt);
    }
  if (bc.kind == BCKind::navier_slip && mp.eps == 0.0) {
    const std::size_t str = g.wall_stride();
    for (int b = 0; b < 2; ++b) {
      ScalarField& e = s.eta.c[b];
      for (std::size_t n = 0; n < str; ++n) e[n] = (4.0 * e[n + str] - e[n + 2 * str]) / 3.0;
    }
  }
}

/// Velocity-side boundary enforcement (requires a cache consistent with the
/// position-side enforcement).  Touches only the wall and top planes.
inline void apply_bc_velocity(const Grid& g, FlowMapState& s, const GeometricCache& c,
                              const ScalarField& rho0, const MaterialParams& mp,
                              const BoundaryCondition& bc) {
  const std::size_t str = g.wall_stride();
  const std::size_t top = static_cast<std::size_t>(g.nz - 1) * str;
  for (int cmp = 0; cmp < 3; ++cmp) std::fill_n(s.vel.c[cmp].begin() + top, str, 0.0);

  if (bc.kind == BCKind::no_slip) {
    for (int cmp = 0; cmp < 3; ++cmp) std::fill_n(s.vel.c[cmp].begin(), str, 0.0);
    return;
  }

  // navier_slip: impermeability first (also fixes the v_3 terms every
  // tangential solve below reads).
  std::fill_n(s.vel.c[2].begin(), str, 0.0);

  if (mp.eps == 0.0) {
    // Inviscid limit: slip values follow the interior so the one-sided wall
    // derivative of v_b vanishes, matching d_3 eta_b = 0 under d_t eta = v.
    for (int b = 0; b < 2; ++b) {
      ScalarField& v = s.vel.c[b];
      for (std::size_t n = 0; n < str; ++n) v[n] = (4.0 * v[n + str] - v[n + 2 * str]) / 3.0;
    }
    return;
  }

  // Viscous Robin closure: per-node exact affine 2x2 solve for the wall
  // values of (v_1, v_2), swept in a fixed order until the tangential
  // coupling through neighbouring wall nodes has converged.
  const int max_sweeps = 50;
  const double tol = 1e-11;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, 0);
        const auto C0 = robin_combination(g, s, c, rho0, mp, bc, i, j);
        const double w0 = s.vel.c[0][n];
        const double w1 = s.vel.c[1][n];
        s.vel.c[0][n] = w0 + 1.0;
        const auto C1 = robin_combination(g, s, c, rho0, mp, bc, i, j);
        s.vel.c[0][n] = w0;
        s.vel.c[1][n] = w1 + 1.0;
        const auto C2 = robin_combination(g, s, c, rho0, mp, bc, i, j);
        s.vel.c[1][n] = w1;
        const double m00 = C1[0] - C0[0], m10 = C1[1] - C0[1];
        const double m01 = C2[0] - C0[0], m11 = C2[1] - C0[1];
        const double det = m00 * m11 - m01 * m10;
        const double scale = std::max(std::max(std::abs(m00), std::abs(m01)),
                                      std::max(std::abs(m10), std::abs(m11)));
        if (!(std::abs(det) > 1e-14 * std::max(scale * scale, 1e-300)))
          throw Error(ErrorKind::NonConvergedGhost,
                      "singular 2x2 wall solve at node (" + std::to_string(i) + ", " + std::to_string(j) +
                          "): degenerate wall state");
        s.vel.c[0][n] = w0 + (-C0[0] * m11 + C0[1] * m01) / det;
        s.vel.c[1][n] = w1 + (-C0[1] * m00 + C0[0] * m10) / det;
      }
    if (robin_wall_residual(g, s, c, rho0, mp, bc) <= tol) return;
  }
  throw Error(ErrorKind::NonConvergedGhost, "tangential wall sweep did not converge in 50 iterations");
}

/// Full enforcement: positions, geometry rebuild, velocities.  Returns the
/// cache for reuse in the subsequent operator evaluation.
inline GeometricCache apply_bc(const Grid& g, FlowMapState& s, const ScalarField& rho0,
                               const MaterialParams& mp, const BoundaryCondition& bc,
                               double j_floor = kJacobianFloor) {
  apply_bc_positions(g, s, mp, bc);
  GeometricCache c = compute_geometry(g, s.eta, j_floor);
  apply_bc_velocity(g, s, c, rho0, mp, bc);
  return c;
}

/// Largest |v| or |eta - x| in the truncation monitoring band z > 0.9 Lz.
inline double truncation_excess(const Grid& g, const FlowMapState& s) {
  double worst = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    if (!(g.z(k) > 0.9 * g.Lz)) continue;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        const Vec3 p = g.pos(i, j, k);
        for (int cmp = 0; cmp < 3; ++cmp) {
          worst = std::max(worst, std::abs(s.vel.c[cmp][n]));
          worst = std::max(worst, std::abs(s.eta.c[cmp][n] - p[cmp]));
        }
      }
  }
  return worst;
}

namespace detail {

/// Quintic cutoff: 1 on s <= 0, 0 on s >= 1, C^2 at both ends.
inline double cutoff_chi(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

inline double compat_delta(const Grid& g) { return 8.0 * g.dz; }

/// Correction profiles: chi moves only the wall value, phi = z chi only the
/// wall slope, psi = z^2/2 chi only the wall curvature.
enum class Profile { chi, phi, psi };

inline double profile_weight(const Grid& g, Profile p, int k) {
  const double z = g.z(k);
  const double w = cutoff_chi(z / compat_delta(g));
  switch (p) {
    case Profile::chi: return w;
    case Profile::phi: return z * w;
    case Profile::psi: return 0.5 * z * z * w;
  }
  return 0.0;
}

/// f(i, j, k) += coef * profile(z_k); compactly supported below z = 8 dz
/// (the weights vanish identically from k = 8 on).
inline void blend_column(const Grid& g, ScalarField& f, int i, int j, Profile p, double coef) {
  const int kmax = std::min(g.nz - 1, 7);
  for (int k = 0; k <= kmax; ++k) f[g.idx(i, j, k)] += coef * profile_weight(g, p, k);
}

/// Order-0 projection pass.  Exact (one-shot) except for the viscous
/// navier_slip branch, which sweeps the wall plane like the ghost solve.
inline void project_order0(const Grid& g, FlowMapState& st, const ScalarField& rho0,
                           const MaterialParams& mp, const BoundaryCondition& bc) {
  if (bc.kind == BCKind::no_slip) {
    for (int cmp = 0; cmp < 3; ++cmp)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double trace = st.vel.c[cmp][g.idx(i, j, 0)];
          if (trace != 0.0) blend_column(g, st.vel.c[cmp], i, j, Profile::chi, -trace);
        }
    return;
  }

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double trace = st.vel.c[2][g.idx(i, j, 0)];
      if (trace != 0.0) blend_column(g, st.vel.c[2], i, j, Profile::chi, -trace);
    }

  if (mp.eps == 0.0) {
    // rho0 d_3 eta_b = 0 via a slope profile on eta_b; the one-sided wall
    // stencil responds to a unit phi-blend with a fixed, exactly known weight.
    const double resp =
        (4.0 * profile_weight(g, Profile::phi, 1) - profile_weight(g, Profile::phi, 2)) / (2.0 * g.dz);
    const GeometricCache c = compute_geometry(g, st.eta);
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double d3 = c.F.comp(b, 2)[g.idx(i, j, 0)];
          if (d3 != 0.0) blend_column(g, st.eta.c[b], i, j, Profile::phi, -d3 / resp);
        }
    return;
  }

  // Viscous navier_slip: chi-blend the tangential velocity so the Robin
  // combination vanishes without introducing a kink at the wall.
  const GeometricCache c = compute_geometry(g, st.eta);
  const int cap = 50;
  for (int it = 0; it < cap; ++it) {
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const auto C0 = robin_combination(g, st, c, rho0, mp, bc, i, j);
        worst = std::max(worst, std::max(std::abs(C0[0]), std::abs(C0[1])));
        if (C0[0] == 0.0 && C0[1] == 0.0) continue;
        double m[2][2];
        const int kmax = std::min(g.nz - 1, 7);
        for (int b = 0; b < 2; ++b) {
          std::array<double, 9> saved{};
          for (int k = 0; k <= kmax; ++k) saved[k] = st.vel.c[b][g.idx(i, j, k)];
          blend_column(g, st.vel.c[b], i, j, Profile::chi, 1.0);
          const auto Cp = robin_combination(g, st, c, rho0, mp, bc, i, j);
          for (int k = 0; k <= kmax; ++k) st.vel.c[b][g.idx(i, j, k)] = saved[k];
          m[0][b] = Cp[0] - C0[0];
          m[1][b] = Cp[1] - C0[1];
        }
        const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        const double scale = std::max(std::max(std::abs(m[0][0]), std::abs(m[0][1])),
                                      std::max(std::abs(m[1][0]), std::abs(m[1][1])));
        if (!(std::abs(det) > 1e-14 * std::max(scale * scale, 1e-300)))
          throw Error(ErrorKind::ProjectionFailed, "degenerate tangential response in order-0 projection");
        const double d0 = (-C0[0] * m[1][1] + C0[1] * m[0][1]) / det;
        const double d1 = (-C0[1] * m[0][0] + C0[0] * m[1][0]) / det;
        if (d0 != 0.0) blend_column(g, st.vel.c[0], i, j, Profile::chi, d0);
        if (d1 != 0.0) blend_column(g, st.vel.c[1], i, j, Profile::chi, d1);
      }
    if (worst <= 1e-12) return;
  }
  throw Error(ErrorKind::ProjectionFailed, "order-0 tangential sweep did not converge");
}

/// Per-wall-node order-1 residual slots, one per correction knob:
///   no_slip:      slot m = (d_t v)_m            (knob: psi on eta_m)
///   navier_slip:  slots 0, 1 = d_t C_b          (knob: phi on v_b)
///                 slot 2 = (d_t v)_3            (knob: psi on eta_3)
/// d_t v is taken from the momentum equation; d_t C_b from an exact identity
/// when eps = 0 and a centred difference on second-order Taylor states when
/// eps > 0.
inline std::array<std::vector<double>, 3> order1_residual_slots(const Grid& g, const FlowMapState& state,
                                                                const ScalarField& rho0,
                                                                const MaterialParams& mp,
                                                                const BoundaryCondition& bc,
                                                                const ForcingFn* forcing) {
  const std::size_t str = g.wall_stride();
  std::array<std::vector<double>, 3> slots;
  for (auto& s : slots) s.assign(str, 0.0);

  const GeometricCache c = compute_geometry(g, state.eta);
  const MomentumParts mr = momentum_rhs(g, state, c, rho0, mp, forcing);

  if (bc.kind == BCKind::no_slip) {
    for (int cmp = 0; cmp < 3; ++cmp)
      for (std::size_t n = 0; n < str; ++n) slots[cmp][n] = mr.accel.c[cmp][n];
    return slots;
  }

  for (std::size_t n = 0; n < str; ++n) slots[2][n] = mr.accel.c[2][n];

  if (mp.eps == 0.0) {
    // d_t (rho0 d_3 eta_b) = rho0 d_3 v_b exactly (rho0 is static and the
    // stencil commutes with d_t).
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, 0);
        for (int b = 0; b < 2; ++b)
          slots[b][n] = rho0[n] * node_diff(g, state.vel.c[b].data(), Axis::z, i, j, 0);
      }
    return slots;
  }

  const double delta = 1e-4;
  FlowMapState plus = state, minus = state;
  plus.t = state.t + delta;
  minus.t = state.t - delta;
  for (int cmp = 0; cmp < 3; ++cmp) {
    const std::size_t nn = state.eta.c[cmp].size();
    for (std::size_t n = 0; n < nn; ++n) {
      const double v = state.vel.c[cmp][n];
      const double a = mr.accel.c[cmp][n];
      plus.eta.c[cmp][n] += delta * v + 0.5 * delta * delta * a;
      minus.eta.c[cmp][n] -= delta * v - 0.5 * delta * delta * a;
      plus.vel.c[cmp][n] += delta * a;
      minus.vel.c[cmp][n] -= delta * a;
    }
  }
  const GeometricCache cp = compute_geometry(g, plus.eta);
  const GeometricCache cm = compute_geometry(g, minus.eta);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.idx(i, j, 0);
      const auto Cp = robin_combination(g, plus, cp, rho0, mp, bc, i, j);
      const auto Cm = robin_combination(g, minus, cm, rho0, mp, bc, i, j);
      for (int b = 0; b < 2; ++b) slots[b][n] = (Cp[b] - Cm[b]) / (2.0 * delta);
    }
  return slots;
}

/// Applies the order-1 correction knob m with a per-wall-node coefficient.
inline void blend_knob(const Grid& g, FlowMapState& st, const BoundaryCondition& bc, int m,
                       const std::vector<double>& coef) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double cf = coef[g.idx(i, j, 0)];
      if (cf == 0.0) continue;
      if (bc.kind == BCKind::no_slip)
        blend_column(g, st.eta.c[m], i, j, Profile::psi, cf);
      else if (m < 2)
        blend_column(g, st.vel.c[m], i, j, Profile::phi, cf);
      else
        blend_column(g, st.eta.c[2], i, j, Profile::psi, cf);
    }
}

}  // namespace detail

struct CompatReport {
  double order0{0.0};  ///< max wall residual of the order-0 conditions
  double order1{0.0};  ///< max wall residual of the order-1 conditions (0 when not requested)
};

/// Measures the compatibility residuals of the data as given (no boundary
/// enforcement is applied first, so incompatible data reports honestly).
inline CompatReport compat_residual(const Grid& g, const FlowMapState& state, const ScalarField& rho0,
                                    const MaterialParams& mp, const BoundaryCondition& bc, int order,
                                    const ForcingFn* forcing = nullptr) {
  if (order != 0 && order != 1)
    throw Error(ErrorKind::ConfigError, "compatibility order must be 0 or 1");
  CompatReport rep;
  const std::size_t str = g.wall_stride();
  if (bc.kind == BCKind::no_slip) {
    for (int cmp = 0; cmp < 3; ++cmp)
      for (std::size_t n = 0; n < str; ++n)
        rep.order0 = std::max(rep.order0, std::abs(state.vel.c[cmp][n]));
  } else {
    const GeometricCache c = compute_geometry(g, state.eta);
    for (std::size_t n = 0; n < str; ++n) rep.order0 = std::max(rep.order0, std::abs(state.vel.c[2][n]));
    rep.order0 = std::max(rep.order0, robin_wall_residual(g, state, c, rho0, mp, bc));
  }
  if (order >= 1) {
    const auto slots = detail::order1_residual_slots(g, state, rho0, mp, bc, forcing);
    for (const auto& s : slots)
      for (double v : s) rep.order1 = std::max(rep.order1, std::abs(v));
  }
  return rep;
}

/// Projects the data onto the compatible set by cutoff blending; returns the
/// post-projection residuals and throws ProjectionFailed if they exceed the
/// thresholds (1e-10 for order 0, 1e-6 for order 1).
inline CompatReport compat_project(const Grid& g, FlowMapState& state, const ScalarField& rho0,
                                   const MaterialParams& mp, const BoundaryCondition& bc, int order,
                                   const ForcingFn* forcing = nullptr) {
  if (order != 0 && order != 1)
    throw Error(ErrorKind::ConfigError, "compatibility order must be 0 or 1");
  if (g.nz < 17)
    throw Error(ErrorKind::ConfigError, "compatibility cutoff width 8 dz requires nz >= 17");

  auto run_order0 = [&](FlowMapState& st) {
    for (int pass = 0; pass < 3; ++pass) {
      detail::project_order0(g, st, rho0, mp, bc);
      if (compat_residual(g, st, rho0, mp, bc, 0, forcing).order0 <= 1e-11) break;
    }
  };

  run_order0(state);
  if (order == 0) {
    const CompatReport rep = compat_residual(g, state, rho0, mp, bc, 0, forcing);
    if (rep.order0 > kCompatTolOrder0)
      throw Error(ErrorKind::ProjectionFailed,
                  "order-0 wall residual " + std::to_string(rep.order0) + " exceeds threshold");
    return rep;
  }

  // Order-1 Newton iteration: per-node diagonal response of each residual
  // slot to its knob.  Every update is followed by an order-0 restoration,
  // so the probe must measure the same composite map (knob blend, then
  // restoration): the restoration feeds back into the order-1 residuals and
  // dominates the sensitivity in the viscous regime.
  const int cap = 50;
  const double probe = 1e-5;
  const std::size_t str = g.wall_stride();
  for (int it = 0; it <= cap; ++it) {
    auto R = detail::order1_residual_slots(g, state, rho0, mp, bc, forcing);
    double worst1 = 0.0;
    for (const auto& s : R)
      for (double v : s) worst1 = std::max(worst1, std::abs(v));
    const double worst0 = compat_residual(g, state, rho0, mp, bc, 0, forcing).order0;
    if (worst0 <= 1e-11 && worst1 <= 1e-7) break;
    if (it == cap)
      throw Error(ErrorKind::ProjectionFailed,
                  "order-1 projection did not converge (residual " + std::to_string(worst1) + ")");

    std::vector<double> uniform(str, probe);
    std::array<std::vector<double>, 3> coef;
    for (int m = 0; m < 3; ++m) {
      FlowMapState probed = state;
      detail::blend_knob(g, probed, bc, m, uniform);
      run_order0(probed);
      const auto R2 = detail::order1_residual_slots(g, probed, rho0, mp, bc, forcing);
      coef[m].assign(str, 0.0);
      for (std::size_t n = 0; n < str; ++n) {
        const double d = (R2[m][n] - R[m][n]) / probe;
        if (!(std::abs(d) > 1e-8)) {
          if (std::abs(R[m][n]) > 0.1 * kCompatTolOrder1)
            throw Error(ErrorKind::ProjectionFailed,
                        "degenerate order-1 response for knob " + std::to_string(m));
          continue;
        }
        coef[m][n] = -R[m][n] / d;
      }
    }
    for (int m = 0; m < 3; ++m) detail::blend_knob(g, state, bc, m, coef[m]);
    run_order0(state);
  }

  const CompatReport rep = compat_residual(g, state, rho0, mp, bc, 1, forcing);
  if (rep.order0 > kCompatTolOrder0 || rep.order1 > kCompatTolOrder1)
    throw Error(ErrorKind::ProjectionFailed,
                "post-projection residuals (" + std::to_string(rep.order0) + ", " +
                    std::to_string(rep.order1) + ") exceed thresholds");
  return rep;
}

}  // namespace vve
