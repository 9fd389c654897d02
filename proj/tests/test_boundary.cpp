/// Unit tests: wall boundary conditions, top closure, truncation monitor and
/// the compatibility projection.
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "vve/boundary.hpp"
#include "vve/dynamics.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/material.hpp"

#include "oracles.hpp"

using namespace vve;

namespace {

constexpr double kPi = std::numbers::pi;

MaterialParams make_params(double eps, double mu = 1.0, double lambda = 0.0, double alpha = 1.0,
                           bool elastic = true) {
  MaterialParams mp;
  mp.gamma = 1.4;
  mp.mu = mu;
  mp.lambda = lambda;
  mp.alpha = alpha;
  mp.eps = eps;
  mp.elastic_on = elastic;
  return mp;
}

ScalarField uniform_rho(const Grid& g, double v = 1.0) { return ScalarField(g.num_nodes(), v); }

ScalarField column_rho(const Grid& g) {
  ScalarField r(g.num_nodes());
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) r[g.idx(i, j, k)] = 1.0 + 0.1 * std::cos(kPi * g.z(k) / g.Lz);
  return r;
}

/// Smooth state with generic interior motion plus a velocity part that does
/// not vanish on the wall, so boundary enforcement has real work to do.
FlowMapState textured_state(const Grid& g, unsigned seed) {
  oracle::RandomSmoothMap me(seed, g.Lx, g.Ly, g.Lz, 0.03, 3, g.nx > 1, g.ny > 1, 2);
  oracle::RandomSmoothMap mv(seed + 101, g.Lx, g.Ly, g.Lz, 0.05, 3, g.nx > 1, g.ny > 1, 2);
  FlowMapState s(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.idx(i, j, k);
        const Vec3 p = g.pos(i, j, k);
        const Vec3 e = me.eta(p);
        const Vec3 w = mv.eta(p);
        const double taper = (1.0 - p[2] / g.Lz) * (1.0 - p[2] / g.Lz);
        const double trig = (g.nx > 1 ? std::cos(2.0 * kPi * p[0] / g.Lx) : 1.0) *
                            (g.ny > 1 ? std::cos(2.0 * kPi * p[1] / g.Ly) : 1.0);
        for (int c = 0; c < 3; ++c) {
          s.eta.c[c][n] = e[c];
          s.vel.c[c][n] = (w[c] - p[c]) + 0.02 * (c + 1) * trig * taper;
        }
      }
  return s;
}

double wall_one_sided(const Grid& g, const ScalarField& f, int i, int j) {
  const std::size_t s = g.wall_stride();
  const std::size_t n = g.idx(i, j, 0);
  return (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) / (2.0 * g.dz);
}

bool same_bits(const ScalarField& a, const ScalarField& b, std::size_t lo, std::size_t hi) {
  for (std::size_t n = lo; n < hi; ++n)
    if (a[n] != b[n]) return false;
  return true;
}

}  // namespace

TEST_CASE("boundary condition validation") {
  BoundaryCondition bc{BCKind::navier_slip, -0.5};
  CHECK_THROWS_AS(bc.validate(), Error);
  bc.alpha = std::nan("");
  CHECK_THROWS_AS(bc.validate(), Error);
  bc.alpha = 2.0;
  CHECK_NOTHROW(bc.validate());
  CHECK(std::string(to_string(BCKind::no_slip)) == "no_slip");
  CHECK(std::string(to_string(BCKind::navier_slip)) == "navier_slip");
}

TEST_CASE("node stencils match the field stencils bitwise") {
  const Grid g = make_grid(GridMode::slab3d, 8, 8, 17, 1.0, 1.3, 1.0);
  oracle::UniformStream rng(77);
  ScalarField f(g.num_nodes());
  for (auto& v : f) v = rng.next_in(-1.0, 1.0);
  for (Axis ax : {Axis::x, Axis::y, Axis::z}) {
    const ScalarField d = diff(g, f, ax);
    for (int k : {0, 1, 8, g.nz - 2, g.nz - 1})
      for (int j : {0, 3, g.ny - 1})
        for (int i : {0, 5, g.nx - 1})
          CHECK(node_diff(g, f.data(), ax, i, j, k) == d[g.idx(i, j, k)]);
  }
}

TEST_CASE("no_slip: wall and top velocities zeroed exactly, interior untouched") {
  const Grid g = make_grid(GridMode::slab3d, 8, 8, 33, 1.0, 1.0, 1.0);
  FlowMapState s = textured_state(g, 12);
  const FlowMapState before = s;
  const ScalarField rho0 = column_rho(g);
  const MaterialParams mp = make_params(0.2, 1.5, 0.3);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  apply_bc(g, s, rho0, mp, bc);

  const std::size_t str = g.wall_stride();
  const std::size_t top = static_cast<std::size_t>(g.nz - 1) * str;
  double wall_kinetic = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < str; ++n) {
      CHECK(s.vel.c[c][n] == 0.0);
      wall_kinetic += s.vel.c[c][n] * s.vel.c[c][n];
    }
  CHECK(wall_kinetic == 0.0);
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = top; n < top + str; ++n) CHECK(s.vel.c[c][n] == 0.0);
  // top positions pinned to the rest state
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.idx(i, j, g.nz - 1);
      CHECK(s.eta.c[0][n] == g.x(i));
      CHECK(s.eta.c[1][n] == g.y(j));
      CHECK(s.eta.c[2][n] == g.z(g.nz - 1));
    }
  // everything strictly between wall and top is bitwise untouched
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(s.vel.c[c], before.vel.c[c], str, top));
    CHECK(same_bits(s.eta.c[c], before.eta.c[c], 0, top));
  }
}

TEST_CASE("navier_slip column reduction: wall relation residual below 1e-10") {
  // In column mode on the rest map the tangential relation reduces to
  // rho0 d_z eta_b + mu eps d_z v_b + alpha eps v_b = 0 (a_33 = A_33 = 1).
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = column_rho(g);

  for (double alpha : {0.0, 2.5}) {
    FlowMapState s = make_identity_state(g);
    for (int k = 0; k < g.nz; ++k) {
      const double z = g.z(k);
      s.vel.c[0][k] = 0.05 * std::sin(kPi * z) + 0.015 * std::cos(2.0 * kPi * z);
      s.vel.c[1][k] = -0.03 * std::sin(2.0 * kPi * z) + 0.01;
      s.vel.c[2][k] = 0.02 * std::sin(kPi * z) + 0.005;
    }
    const MaterialParams mp = make_params(0.3, 2.0, 0.4, alpha);
    const BoundaryCondition bc{BCKind::navier_slip, alpha};
    apply_bc(g, s, rho0, mp, bc);

    CHECK(s.vel.c[2][0] == 0.0);
    for (int b = 0; b < 2; ++b) {
      const double hand = rho0[0] * wall_one_sided(g, s.eta.c[b], 0, 0) +
                          mp.mu * mp.eps * wall_one_sided(g, s.vel.c[b], 0, 0) +
                          alpha * mp.eps * s.vel.c[b][0];
      CHECK(std::abs(hand) < 1e-10);
    }
  }
}

TEST_CASE("navier_slip slab3d: Robin relation enforced at every wall node") {
  const Grid g = make_grid(GridMode::slab3d, 8, 8, 33, 1.0, 1.2, 1.0);
  FlowMapState s = textured_state(g, 31);
  const FlowMapState before = s;
  const ScalarField rho0 = column_rho(g);
  const MaterialParams mp = make_params(0.25, 1.7, 0.6, 2.2);
  const BoundaryCondition bc{BCKind::navier_slip, 2.2};

  const GeometricCache c = apply_bc(g, s, rho0, mp, bc);

  CHECK(robin_wall_residual(g, s, c, rho0, mp, bc) < 1e-10);

  // cross-check through the global-field assembly of the strain rate
  const TensorField S = strain_rate(g, c, s.vel);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.idx(i, j, 0);
      const double a33 = c.a.comp(2, 2)[n];
      for (int b = 0; b < 2; ++b) {
        const double C = rho0[n] * c.F.comp(b, 2)[n] + 2.0 * mp.mu * mp.eps * S.comp(b, 2)[n] * a33 +
                         bc.alpha * mp.eps * std::abs(a33) * s.vel.c[b][n];
        CHECK(std::abs(C) < 1e-10);
      }
    }

  const std::size_t str = g.wall_stride();
  const std::size_t top = static_cast<std::size_t>(g.nz - 1) * str;
  for (std::size_t n = 0; n < str; ++n) CHECK(s.vel.c[2][n] == 0.0);
  // positions below the top and interior velocities are bitwise untouched
  for (int c2 = 0; c2 < 3; ++c2) {
    CHECK(same_bits(s.eta.c[c2], before.eta.c[c2], 0, top));
    CHECK(same_bits(s.vel.c[c2], before.vel.c[c2], str, top));
  }
}

TEST_CASE("navier_slip inviscid branch: extrapolated wall traces, no viscosity constants read") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = column_rho(g);
  FlowMapState base = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    base.eta.c[0][k] += 0.01 * std::sin(0.5 * kPi * z / g.Lz);
    base.eta.c[1][k] -= 0.008 * std::sin(kPi * z);
    base.vel.c[0][k] = 0.05 * std::cos(kPi * z);
    base.vel.c[1][k] = 0.02 + 0.03 * z;
    base.vel.c[2][k] = 0.01 * std::sin(kPi * z) + 0.004;
  }

  FlowMapState clean = base;
  const MaterialParams mp_clean = make_params(0.0, 1.0, 0.0, 1.0);
  const BoundaryCondition bc_clean{BCKind::navier_slip, 1.0};
  const GeometricCache cache = apply_bc(g, clean, rho0, mp_clean, bc_clean);

  CHECK(clean.vel.c[2][0] == 0.0);
  for (int b = 0; b < 2; ++b) {
    CHECK(std::abs(wall_one_sided(g, clean.eta.c[b], 0, 0)) < 1e-12);
    CHECK(std::abs(wall_one_sided(g, clean.vel.c[b], 0, 0)) < 1e-12);
  }
  CHECK(inviscid_wall_residual(g, cache, rho0) < 1e-12);

  // Poisoned viscosity constants must leave the eps = 0 path bitwise intact.
  FlowMapState poisoned = base;
  MaterialParams mp_p = mp_clean;
  mp_p.mu = std::nan("");
  mp_p.lambda = std::nan("");
  mp_p.alpha = std::nan("");
  const BoundaryCondition bc_p{BCKind::navier_slip, std::nan("")};
  apply_bc(g, poisoned, rho0, mp_p, bc_p);
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(poisoned.eta.c[c], clean.eta.c[c], 0, g.num_nodes()));
    CHECK(same_bits(poisoned.vel.c[c], clean.vel.c[c], 0, g.num_nodes()));
  }
}

TEST_CASE("navier_slip ghost solve: degenerate wall state raises NonConvergedGhost") {
  // On the rest map the local response of the relation to the wall value is
  // eps (alpha - 3 mu / (2 dz)); choosing alpha = 3 mu / (2 dz) makes the
  // 2x2 solve exactly singular.
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) s.vel.c[0][k] = 0.02 * std::sin(kPi * g.z(k)) + 0.01;
  const double mu = 1.0;
  const double alpha = 3.0 * mu / (2.0 * g.dz);
  const MaterialParams mp = make_params(0.5, mu, 0.0, alpha);
  const BoundaryCondition bc{BCKind::navier_slip, alpha};
  try {
    apply_bc(g, s, rho0, mp, bc);
    FAIL("expected NonConvergedGhost");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonConvergedGhost);
  }
}

TEST_CASE("truncation monitor: quiet for compact data, fires near the top") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 65, 1.0, 1.0, 1.0);
  FlowMapState s = make_identity_state(g);
  CHECK(truncation_excess(g, s) == 0.0);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = 0.1 * std::exp(-std::pow((z - 0.25) / 0.05, 2));
  }
  CHECK(truncation_excess(g, s) < 1e-8);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] += 0.05 * std::exp(-std::pow((z - 0.95) / 0.02, 2));
  }
  CHECK(truncation_excess(g, s) > 1e-8);
}

TEST_CASE("compat order 0, no_slip: compatible data is a bitwise fixed point") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.1);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = (z > 0.1 && z < 0.5) ? 0.1 * std::exp(-std::pow((z - 0.3) / 0.05, 2)) *
                                               std::pow(std::sin(kPi * (z - 0.1) / 0.4), 2)
                                         : 0.0;
  }
  const FlowMapState before = s;
  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 0);
  CHECK(rep.order0 == 0.0);
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(s.vel.c[c], before.vel.c[c], 0, g.num_nodes()));
    CHECK(same_bits(s.eta.c[c], before.eta.c[c], 0, g.num_nodes()));
  }
}

TEST_CASE("compat order 0, no_slip: wall trace removed, interior beyond the cutoff untouched") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.1);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) s.vel.c[0][k] = 0.07 + 0.1 * std::sin(kPi * g.z(k));
  const FlowMapState before = s;
  CHECK(compat_residual(g, s, rho0, mp, bc, 0).order0 == doctest::Approx(0.07).epsilon(1e-12));

  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 0);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(s.vel.c[0][0] == 0.0);
  // the cutoff is supported on z < 8 dz: nodes from k = 8 on are unchanged
  for (int c = 0; c < 3; ++c) CHECK(same_bits(s.vel.c[c], before.vel.c[c], 8, g.num_nodes()));
  // second projection is a no-op
  FlowMapState again = s;
  compat_project(g, again, rho0, mp, bc, 0);
  for (int c = 0; c < 3; ++c) CHECK(same_bits(again.vel.c[c], s.vel.c[c], 0, g.num_nodes()));
}

TEST_CASE("compat order 0, navier_slip viscous: Robin trace and v3 trace removed") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = column_rho(g);
  const MaterialParams mp = make_params(0.2, 1.3, 0.5, 1.8);
  const BoundaryCondition bc{BCKind::navier_slip, 1.8};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = 0.04 + 0.05 * z * std::exp(-std::pow(z / 0.15, 2));
    s.vel.c[1][k] = -0.02 + 0.03 * std::sin(kPi * z);
    s.vel.c[2][k] = 0.02 * (1.0 - z / g.Lz);
  }
  const FlowMapState before = s;
  CHECK(compat_residual(g, s, rho0, mp, bc, 0).order0 > 1e-3);

  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 0);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(s.vel.c[2][0] == 0.0);
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(s.vel.c[c], before.vel.c[c], 8, g.num_nodes()));
    CHECK(same_bits(s.eta.c[c], before.eta.c[c], 0, g.num_nodes()));
  }
}

TEST_CASE("compat order 0, navier_slip inviscid: wall slope of eta corrected") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = column_rho(g);
  const MaterialParams mp = make_params(0.0);
  const BoundaryCondition bc{BCKind::navier_slip, 1.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.eta.c[0][k] += 0.01 * std::sin(0.5 * kPi * z / g.Lz);
    s.vel.c[2][k] = 0.01 * (1.0 - z / g.Lz);
  }
  CHECK(compat_residual(g, s, rho0, mp, bc, 0).order0 > 1e-4);

  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 0);
  CHECK(rep.order0 <= kCompatTolOrder0);
  const GeometricCache c = compute_geometry(g, s.eta);
  CHECK(inviscid_wall_residual(g, c, rho0) <= kCompatTolOrder0);
  CHECK(s.vel.c[2][0] == 0.0);
}

TEST_CASE("compat order 1, no_slip: rest map with compact bump passes untouched") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.2, 1.0, 0.3);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = (z > 0.1 && z < 0.5) ? 0.1 * std::exp(-std::pow((z - 0.3) / 0.05, 2)) *
                                               std::pow(std::sin(kPi * (z - 0.1) / 0.4), 2)
                                         : 0.0;
  }
  const FlowMapState before = s;
  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 1);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(rep.order1 <= 1e-10);  // identically satisfied at the rest map
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(s.vel.c[c], before.vel.c[c], 0, g.num_nodes()));
    CHECK(same_bits(s.eta.c[c], before.eta.c[c], 0, g.num_nodes()));
  }
}

TEST_CASE("compat order 1, no_slip: wall curvature incompatibility corrected") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.2, 1.0, 0.3);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.eta.c[0][k] += 0.01 * 0.5 * z * z * std::exp(-std::pow(z / 0.1, 2));
  }
  CHECK(compat_residual(g, s, rho0, mp, bc, 1).order1 > 1e-4);

  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 1);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(rep.order1 <= kCompatTolOrder1);
  const CompatReport again = compat_residual(g, s, rho0, mp, bc, 1);
  CHECK(again.order0 == rep.order0);
  CHECK(again.order1 == rep.order1);
}

TEST_CASE("compat order 1, navier_slip viscous: slope and curvature incompatibilities corrected") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.15, 1.2, 0.4, 2.0);
  const BoundaryCondition bc{BCKind::navier_slip, 2.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = 0.03 + 0.05 * z * std::exp(-std::pow(z / 0.2, 2));
    s.vel.c[1][k] = 0.02 * std::sin(kPi * z);
    s.vel.c[2][k] = 0.02 * std::sin(kPi * z);
    s.eta.c[2][k] += 0.004 * 0.5 * z * z * std::exp(-std::pow(z / 0.1, 2));
  }
  CHECK(compat_residual(g, s, rho0, mp, bc, 1).order1 > 1e-4);

  const CompatReport rep = compat_project(g, s, rho0, mp, bc, 1);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(rep.order1 <= kCompatTolOrder1);
}

TEST_CASE("compat order 1, navier_slip inviscid: exact tangential identity path") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const BoundaryCondition bc{BCKind::navier_slip, 1.0};

  FlowMapState base = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    base.eta.c[0][k] += 0.01 * std::sin(0.5 * kPi * z / g.Lz);
    base.vel.c[0][k] = 0.03 * std::cos(kPi * z);  // nonzero wall slope
    base.vel.c[2][k] = 0.01 * std::sin(kPi * z);
  }

  FlowMapState clean = base;
  const MaterialParams mp_clean = make_params(0.0);
  const CompatReport rep = compat_project(g, clean, rho0, mp_clean, bc, 1);
  CHECK(rep.order0 <= kCompatTolOrder0);
  CHECK(rep.order1 <= kCompatTolOrder1);

  // the eps = 0 projection must not read the viscosity constants either
  FlowMapState poisoned = base;
  MaterialParams mp_p = mp_clean;
  mp_p.mu = std::nan("");
  mp_p.lambda = std::nan("");
  mp_p.alpha = std::nan("");
  const BoundaryCondition bc_p{BCKind::navier_slip, std::nan("")};
  compat_project(g, poisoned, rho0, mp_p, bc_p, 1);
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(poisoned.eta.c[c], clean.eta.c[c], 0, g.num_nodes()));
    CHECK(same_bits(poisoned.vel.c[c], clean.vel.c[c], 0, g.num_nodes()));
  }
}

TEST_CASE("compat order 1 without the elastic term: tangential knob is degenerate") {
  // With the elastic term disabled (and pressure blind to tangential shear in
  // column mode), no correction profile can move the wall acceleration, and
  // the projection must fail honestly rather than converge.
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const MaterialParams mp = make_params(0.3, 1.0, 0.0, 1.0, /*elastic=*/false);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};

  FlowMapState s = make_identity_state(g);
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z(k);
    s.vel.c[0][k] = 0.03 * 0.5 * z * z * std::exp(-std::pow(z / 0.1, 2));
  }
  try {
    compat_project(g, s, rho0, mp, bc, 1);
    FAIL("expected ProjectionFailed");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ProjectionFailed);
  }
}

TEST_CASE("compat argument validation") {
  const Grid g = make_grid(GridMode::column1d, 1, 1, 257, 1.0, 1.0, 1.0);
  const Grid tiny = make_grid(GridMode::column1d, 1, 1, 12, 1.0, 1.0, 1.0);
  const ScalarField rho0 = uniform_rho(g);
  const ScalarField rho0_tiny = uniform_rho(tiny);
  const MaterialParams mp = make_params(0.1);
  const BoundaryCondition bc{BCKind::no_slip, 0.0};
  FlowMapState s = make_identity_state(g);
  FlowMapState st = make_identity_state(tiny);
  CHECK_THROWS_AS(compat_project(g, s, rho0, mp, bc, 2), Error);
  CHECK_THROWS_AS(compat_residual(g, s, rho0, mp, bc, -1), Error);
  CHECK_THROWS_AS(compat_project(tiny, st, rho0_tiny, mp, bc, 0), Error);
}
