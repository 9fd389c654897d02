#pragma once
/// @file dynamics.hpp
/// @brief The Lagrangian momentum operator: pressure, viscous and elastic
///        stress terms and their assembly into the acceleration.
///
/// With the geometry cache (F, a, J, A) of the current map, the acceleration
/// is assembled nodewise as
///
///   accel = (-pressure_term + viscous_term + elastic_term + force) / rho0
///
/// where
///   pressure_term_i = a_{ik} d_k q,                    q = (rho0/J)^gamma
///   viscous_term_i  = 2 mu eps a_{kl} d_l S_{ik} + lambda eps a_{ij} d_j divv
///   elastic_term_i  = d_j ( rho0 d_j eta_i )           (conservative form)
///   S_{ik}          = (A_{kl} d_l v_i + A_{il} d_l v_k) / 2
///   divv            = A_{kl} d_l v_k
///
/// Every nested derivative is evaluated field-first: the inner field is
/// materialized on the grid, then differentiated with the standard stencils.
/// When eps == 0 the viscous assembly is skipped entirely, so the inviscid
/// operator is obtained bitwise, and mu, lambda are never read.

#include <functional>

#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/material.hpp"

namespace vve {

/// Momentum source density as a function of reference position and time.
using ForcingFn = std::function<Vec3(const Vec3&, double)>;

/// Gradient of a (periodic-in-x,y) vector field: G_{il} = d_l w_i.
inline TensorField vector_gradient(const Grid& g, const VectorField& w) {
  TensorField gv(g);
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) diff_into(g, w.c[i].data(), gv.comp(i, l).data(), static_cast<Axis>(l));
  return gv;
}

/// Symmetric strain rate S_{ik} = (A_{kl} G_{il} + A_{il} G_{kl}) / 2,
/// assembled for i <= k and mirrored so symmetry holds bitwise.
inline TensorField strain_rate(const Grid& g, const GeometricCache& c, const TensorField& gradv) {
  TensorField s(g);
  const std::size_t n_nodes = g.num_nodes();
  for (int i = 0; i < 3; ++i)
    for (int k = i; k < 3; ++k) {
      ScalarField& sik = s.comp(i, k);
      for (std::size_t n = 0; n < n_nodes; ++n) {
        double acc = 0;
        for (int l = 0; l < 3; ++l)
          acc += c.A.comp(k, l)[n] * gradv.comp(i, l)[n] + c.A.comp(i, l)[n] * gradv.comp(k, l)[n];
        sik[n] = 0.5 * acc;
      }
      if (k != i) s.comp(k, i) = s.comp(i, k);
    }
  return s;
}

/// Eulerian divergence pulled back to the reference frame: A_{kl} d_l v_k.
inline ScalarField div_eta(const Grid& g, const GeometricCache& c, const TensorField& gradv) {
  ScalarField d(g.num_nodes(), 0.0);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      const ScalarField& A = c.A.comp(k, l);
      const ScalarField& G = gradv.comp(k, l);
      for (std::size_t n = 0; n < d.size(); ++n) d[n] += A[n] * G[n];
    }
  return d;
}

/// Convenience overloads that differentiate the velocity internally.
inline TensorField strain_rate(const Grid& g, const GeometricCache& c, const VectorField& vel) {
  return strain_rate(g, c, vector_gradient(g, vel));
}
inline ScalarField div_eta(const Grid& g, const GeometricCache& c, const VectorField& vel) {
  return div_eta(g, c, vector_gradient(g, vel));
}

struct MomentumParts {
  VectorField accel;
  VectorField pressure_term;
  VectorField viscous_term;
  VectorField elastic_term;

  MomentumParts() = default;
  explicit MomentumParts(const Grid& g) : accel(g), pressure_term(g), viscous_term(g), elastic_term(g) {}
};

/// Viscous force density 2 mu eps a_{kl} d_l S_{ik} + lambda eps a_{ij} d_j divv.
/// Returns an all-zero field when eps == 0 without reading mu or lambda.
inline VectorField viscous_force(const Grid& g, const GeometricCache& c, const VectorField& vel,
                                 const MaterialParams& mp) {
  VectorField out(g);
  if (mp.eps <= 0.0) return out;
  const std::size_t n_nodes = g.num_nodes();
  const TensorField gradv = vector_gradient(g, vel);
  const TensorField S = strain_rate(g, c, gradv);
  const ScalarField divv = div_eta(g, c, gradv);
  ScalarField tmp(n_nodes);
  const double two_mu_eps = 2.0 * mp.mu * mp.eps;
  for (int i = 0; i < 3; ++i) {
    ScalarField& dst = out.c[i];
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        diff_into(g, S.comp(i, k).data(), tmp.data(), static_cast<Axis>(l));
        const ScalarField& akl = c.a.comp(k, l);
        for (std::size_t n = 0; n < n_nodes; ++n) dst[n] += two_mu_eps * akl[n] * tmp[n];
      }
  }
  const double lam_eps = mp.lambda * mp.eps;
  if (lam_eps != 0.0) {
    ScalarField ddiv(n_nodes);
    for (int j = 0; j < 3; ++j) {
      diff_into(g, divv.data(), ddiv.data(), static_cast<Axis>(j));
      for (int i = 0; i < 3; ++i) {
        const ScalarField& aij = c.a.comp(i, j);
        ScalarField& dst = out.c[i];
        for (std::size_t n = 0; n < n_nodes; ++n) dst[n] += lam_eps * aij[n] * ddiv[n];
      }
    }
  }
  return out;
}

/// Assembles the full momentum right-hand side at the given state/geometry.
/// `forcing`, when non-null, is a momentum source density evaluated at the
/// reference node positions.
inline MomentumParts momentum_rhs(const Grid& g, const FlowMapState& state, const GeometricCache& c,
                                  const ScalarField& rho0, const MaterialParams& mp,
                                  const ForcingFn* forcing = nullptr) {
  MomentumParts out(g);
  const std::size_t n_nodes = g.num_nodes();

  // pressure_term_i = a_{ik} d_k q
  {
    const ScalarField q = pressure_field(g, c, rho0, mp.gamma);
    ScalarField dq(n_nodes);
    for (int k = 0; k < 3; ++k) {
      diff_into(g, q.data(), dq.data(), static_cast<Axis>(k));
      for (int i = 0; i < 3; ++i) {
        const ScalarField& aik = c.a.comp(i, k);
        ScalarField& dst = out.pressure_term.c[i];
        for (std::size_t n = 0; n < n_nodes; ++n) dst[n] += aik[n] * dq[n];
      }
    }
  }

  // viscous_term: assembled only when eps > 0 so that eps = 0 reduces to the
  // inviscid operator bitwise (mu, lambda, alpha are not read on that path).
  if (mp.eps > 0.0) out.viscous_term = viscous_force(g, c, state.vel, mp);

  // elastic_term_i = d_j ( rho0 F_{ij} ), conservative composition
  if (mp.elastic_on) {
    ScalarField w(n_nodes), dw(n_nodes);
    for (int i = 0; i < 3; ++i) {
      ScalarField& dst = out.elastic_term.c[i];
      for (int j = 0; j < 3; ++j) {
        const ScalarField& Fij = c.F.comp(i, j);
        for (std::size_t n = 0; n < n_nodes; ++n) w[n] = rho0[n] * Fij[n];
        diff_into(g, w.data(), dw.data(), static_cast<Axis>(j));
        for (std::size_t n = 0; n < n_nodes; ++n) dst[n] += dw[n];
      }
    }
  }

  // accel = (-pressure + viscous + elastic + force) / rho0, exactly this form
  for (int i = 0; i < 3; ++i) {
    ScalarField& acc = out.accel.c[i];
    const ScalarField& P = out.pressure_term.c[i];
    const ScalarField& V = out.viscous_term.c[i];
    const ScalarField& E = out.elastic_term.c[i];
    for (std::size_t n = 0; n < n_nodes; ++n) acc[n] = (-P[n] + V[n] + E[n]) / rho0[n];
  }
  if (forcing) {
    std::size_t n = 0;
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i, ++n) {
          const Vec3 f = (*forcing)(g.pos(i, j, k), state.t);
          for (int cmp = 0; cmp < 3; ++cmp) out.accel.c[cmp][n] += f[cmp] / rho0[n];
        }
  }
  return out;
}

}  // namespace vve
