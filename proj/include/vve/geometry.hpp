#pragma once
/// @file geometry.hpp
/// @brief Flow-map state and the discrete geometry of the deformation:
///        gradient F, cofactor matrix a, Jacobian J and inverse-transpose A.
///
/// Conventions (all row-major, indices 0-based):
///   F[i][l] = d eta_i / d x_l          (deformation gradient)
///   a       = cofactor(F)              (so a = J F^{-T} when J != 0)
///   J       = det F, contracted from the first row of cofactors
///   A       = a / J = F^{-T}
/// The columns a[.][l] are the Piola rows: sum_l d_l a[k][l] = 0 holds in the
/// continuum, and its discrete residual is a pure discretization indicator.

#include <string>
#include <vector>

#include "vve/core.hpp"
#include "vve/errors.hpp"
#include "vve/grid.hpp"

namespace vve {

/// Lagrangian unknowns: particle positions eta and velocities v, plus time.
struct FlowMapState {
  VectorField eta;
  VectorField vel;
  double t{0.0};

  FlowMapState() = default;
  explicit FlowMapState(const Grid& g) : eta(g), vel(g) {}
};

/// eta = x (rest configuration), v = 0.
inline FlowMapState make_identity_state(const Grid& g) {
  FlowMapState s(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        s.eta.c[0][n] = g.x(i);
        s.eta.c[1][n] = g.y(j);
        s.eta.c[2][n] = g.z(k);
      }
  return s;
}

struct GeometricCache {
  TensorField F;  ///< grad eta
  TensorField a;  ///< cofactor(F)
  TensorField A;  ///< F^{-T} = a / J
  ScalarField J;  ///< det F

  GeometricCache() = default;
  explicit GeometricCache(const Grid& g) : F(g), a(g), A(g), J(g.num_nodes(), 1.0) {}
};

/// Default positivity floor for det(grad eta).
inline constexpr double kJacobianFloor = 1e-6;

/// Displacement u = eta - x.  Positions are not periodic in the tangential
/// directions (eta_1 ~ x + periodic), so every tangential stencil must act on
/// the displacement; the identity part of the map is carried analytically.
inline VectorField displacement(const Grid& g, const VectorField& eta) {
  VectorField u(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        u.c[0][n] = eta.c[0][n] - g.x(i);
        u.c[1][n] = eta.c[1][n] - g.y(j);
        u.c[2][n] = eta.c[2][n] - g.z(k);
      }
  return u;
}

/// Differentiates eta (as I + grad of the displacement) and assembles
/// (F, a, J, A) nodewise.  Throws DegenerateMap as soon as J drops below
/// j_floor anywhere.
inline GeometricCache compute_geometry(const Grid& g, const VectorField& eta, double j_floor = kJacobianFloor) {
  GeometricCache c(g);
  const VectorField u = displacement(g, eta);
  for (int i = 0; i < 3; ++i) {
    diff_into(g, u.c[i].data(), c.F.comp(i, 0).data(), Axis::x);
    diff_into(g, u.c[i].data(), c.F.comp(i, 1).data(), Axis::y);
    diff_into(g, u.c[i].data(), c.F.comp(i, 2).data(), Axis::z);
  }
  const std::size_t n_nodes = g.num_nodes();
  for (int i = 0; i < 3; ++i)
    for (std::size_t n = 0; n < n_nodes; ++n) c.F.comp(i, i)[n] += 1.0;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    const Mat3 F = c.F.at(n);
    const Mat3 cof = cofactor(F);
    // Jacobian by cofactor contraction along the first row.
    const double J = F[0][0] * cof[0][0] + F[0][1] * cof[0][1] + F[0][2] * cof[0][2];
    if (!(J >= j_floor)) {
      throw Error(ErrorKind::DegenerateMap,
                  "det(grad eta) = " + std::to_string(J) + " fell below the positivity floor " +
                      std::to_string(j_floor) + " at node " + std::to_string(n));
    }
    c.a.set(n, cof);
    c.J[n] = J;
    c.A.set(n, (1.0 / J) * cof);
  }
  return c;
}

/// Max-norm over nodes and rows k of the discrete divergence sum_l d_l a[k][l].
inline double piola_residual(const Grid& g, const GeometricCache& c) {
  const std::size_t n_nodes = g.num_nodes();
  ScalarField dsum(n_nodes), tmp(n_nodes);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    std::fill(dsum.begin(), dsum.end(), 0.0);
    for (int l = 0; l < 3; ++l) {
      diff_into(g, c.a.comp(k, l).data(), tmp.data(), static_cast<Axis>(l));
      for (std::size_t n = 0; n < n_nodes; ++n) dsum[n] += tmp[n];
    }
    worst = std::max(worst, linf(dsum));
  }
  return worst;
}

/// Max-norm residual of the Jacobian transport identity between two states:
///   (J_next - J_prev)/dt  vs  (a : grad v) at the midpoint state.
/// Spatially the two sides commute exactly (same stencils differentiate eta
/// and v), so the residual isolates the midpoint-rule O(dt^2) error.
inline double jacobi_residual(const Grid& g, const FlowMapState& prev, const FlowMapState& next,
                              double j_floor = kJacobianFloor) {
  const double dt = next.t - prev.t;
  if (!(dt > 0)) throw Error(ErrorKind::ConfigError, "jacobi_residual requires next.t > prev.t");
  const std::size_t n_nodes = g.num_nodes();

  FlowMapState mid(g);
  mid.t = 0.5 * (prev.t + next.t);
  for (int i = 0; i < 3; ++i)
    for (std::size_t n = 0; n < n_nodes; ++n) {
      mid.eta.c[i][n] = 0.5 * (prev.eta.c[i][n] + next.eta.c[i][n]);
      mid.vel.c[i][n] = 0.5 * (prev.vel.c[i][n] + next.vel.c[i][n]);
    }

  const GeometricCache cp = compute_geometry(g, prev.eta, j_floor);
  const GeometricCache cn = compute_geometry(g, next.eta, j_floor);
  const GeometricCache cm = compute_geometry(g, mid.eta, j_floor);

  TensorField gradv(g);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) diff_into(g, mid.vel.c[i].data(), gradv.comp(i, l).data(), static_cast<Axis>(l));

  double worst = 0.0;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    const double lhs = (cn.J[n] - cp.J[n]) / dt;
    const double rhs = frobenius_inner(cm.a.at(n), gradv.at(n));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Max over wall nodes of |a_{13}| + |a_{23}|: measures how far the wall
/// breaks the structural identity a_{.3} || e_3 that exact boundary motion
/// preserves.  Monitored, never imposed.
inline double wall_structure_residual(const Grid& g, const GeometricCache& c) {
  const std::size_t s = g.wall_stride();
  const ScalarField& a13 = c.a.comp(0, 2);
  const ScalarField& a23 = c.a.comp(1, 2);
  double worst = 0.0;
  for (std::size_t n = 0; n < s; ++n) worst = std::max(worst, std::abs(a13[n]) + std::abs(a23[n]));
  return worst;
}

}  // namespace vve
