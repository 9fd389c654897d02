#pragma once
/// @file material.hpp
/// @brief Isentropic pressure law, internal-energy potential and material
///        parameter validation.
///
/// With the reference density rho0(x) and Jacobian J, the Lagrangian density
/// is f = rho0 / J and the pressure is q = f^gamma (unit-normalized law).
/// The stored potential is Q(f) = (f^{gamma-1} - 1)/(gamma - 1), defined so
/// that Q(1) = 0; energies subtract the rest value Q(rho0) pointwise so the
/// rest state carries zero energy.

#include <cmath>
#include <string>

#include "vve/errors.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"

namespace vve {

struct MaterialParams {
  double gamma{1.4};   ///< adiabatic exponent, > 1
  double mu{1.0};      ///< shear viscosity scale, > 0
  double lambda{0.0};  ///< bulk viscosity scale, 2 mu + 3 lambda > 0
  double alpha{1.0};   ///< slip friction coefficient, >= 0
  double eps{0.0};     ///< viscosity magnitude, >= 0 (0 selects the inviscid operator)
  bool elastic_on{true};  ///< false drops the elastic stress (pure fluid contrast)

  void validate() const {
    if (!(gamma > 1.0))
      throw Error(ErrorKind::ConfigError, "material.gamma must be > 1 (isentropic exponent), got " + std::to_string(gamma));
    if (!(mu > 0.0)) throw Error(ErrorKind::ConfigError, "material.mu must be > 0, got " + std::to_string(mu));
    if (!(2.0 * mu + 3.0 * lambda > 0.0))
      throw Error(ErrorKind::ConfigError, "material requires 2*mu + 3*lambda > 0, got " + std::to_string(2.0 * mu + 3.0 * lambda));
    if (!(alpha >= 0.0)) throw Error(ErrorKind::ConfigError, "material.alpha must be >= 0, got " + std::to_string(alpha));
    if (!(eps >= 0.0)) throw Error(ErrorKind::ConfigError, "material.eps must be >= 0, got " + std::to_string(eps));
  }
};

/// Validates 0 < c0 <= rho0 <= C0 with finite bounds; returns {min, max}.
inline std::pair<double, double> validate_reference_density(const ScalarField& rho0) {
  double lo = rho0.empty() ? 0.0 : rho0[0];
  double hi = lo;
  for (double r : rho0) {
    if (!std::isfinite(r)) throw Error(ErrorKind::ConfigError, "material.rho0 must be finite everywhere");
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (!(lo > 0.0))
    throw Error(ErrorKind::ConfigError, "material.rho0 must be bounded below by a positive constant, got min " + std::to_string(lo));
  return {lo, hi};
}

/// Pressure q = (rho0 / J)^gamma at one node.
inline double pressure(double rho0, double J, double gamma) { return std::pow(rho0 / J, gamma); }

/// Pressure field over the grid from the geometric cache.
inline ScalarField pressure_field(const Grid& g, const GeometricCache& c, const ScalarField& rho0, double gamma) {
  ScalarField q(g.num_nodes());
  for (std::size_t n = 0; n < q.size(); ++n) q[n] = pressure(rho0[n], c.J[n], gamma);
  return q;
}

/// Internal-energy potential Q(f) = (f^{gamma-1} - 1)/(gamma - 1), Q(1) = 0.
inline double q_potential(double f, double gamma) { return (std::pow(f, gamma - 1.0) - 1.0) / (gamma - 1.0); }

/// Sound speed c_s = sqrt(gamma q / f) = sqrt(gamma q J / rho0).
inline double sound_speed(double rho0, double J, double gamma) {
  const double q = pressure(rho0, J, gamma);
  return std::sqrt(gamma * q * J / rho0);
}

/// Max-norm residual of the pressure-Jacobian transport consistency between
/// two states:  dJ/dt + J^{gamma+1} / (gamma rho0^gamma) * dq/dt  at the
/// midpoint.  Like jacobi_residual this isolates the O(dt^2) midpoint error.
inline double dJ_dq_consistency(const Grid& g, const FlowMapState& prev, const FlowMapState& next,
                                const ScalarField& rho0, double gamma, double j_floor = kJacobianFloor) {
  const double dt = next.t - prev.t;
  if (!(dt > 0)) throw Error(ErrorKind::ConfigError, "dJ_dq_consistency requires next.t > prev.t");
  const GeometricCache cp = compute_geometry(g, prev.eta, j_floor);
  const GeometricCache cn = compute_geometry(g, next.eta, j_floor);

  const std::size_t n_nodes = g.num_nodes();
  ScalarField j_mid(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) j_mid[n] = 0.5 * (cp.J[n] + cn.J[n]);

  double worst = 0.0;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    const double dJ = (cn.J[n] - cp.J[n]) / dt;
    const double dq = (pressure(rho0[n], cn.J[n], gamma) - pressure(rho0[n], cp.J[n], gamma)) / dt;
    const double coeff = std::pow(j_mid[n], gamma + 1.0) / (gamma * std::pow(rho0[n], gamma));
    worst = std::max(worst, std::abs(dJ + coeff * dq));
  }
  return worst;
}

}  // namespace vve
