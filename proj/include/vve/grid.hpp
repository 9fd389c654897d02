#pragma once
/// @file grid.hpp
/// @brief Structured collocated grid on the truncated half-space slab, plus
///        finite-difference stencils, quadrature and norms.
///
/// Domain: (x, y) periodic over [0,Lx) x [0,Ly), z in [0,Lz] with the
/// physical wall at z = 0 and the truncation closure at z = Lz.  Nodes are
/// collocated; spacing is dx = Lx/nx, dy = Ly/ny (periodic: nx cells) and
/// dz = Lz/(nz-1) (wall and top nodes included).
///
/// Stencils (all second order):
///   * first derivative, tangential: centered with periodic wrap;
///   * first derivative, z: centered in the interior, one-sided
///     (-3 f0 + 4 f1 - f2)/(2 dz) at the wall and its mirror at the top;
///   * second derivative in z ("compact"): (f[k+1] - 2 f[k] + f[k-1])/dz^2
///     in the interior, one-sided (2 f0 - 5 f1 + 4 f2 - f3)/dz^2 at the wall
///     and its mirror at the top.
/// Mixed and tangential second derivatives are formed by composing first
/// derivatives (field first, then derivative), which is also the convention
/// for every nested derivative in the operator assembly.
///
/// Reductions (integrals, norms, extrema) traverse nodes in a single fixed
/// memory order so results are bitwise reproducible.

#include <cstddef>
#include <string>
#include <vector>

#include "vve/core.hpp"
#include "vve/errors.hpp"

namespace vve {

enum class GridMode { column1d, slab2d, slab3d };

inline const char* to_string(GridMode m) {
  switch (m) {
    case GridMode::column1d: return "column1d";
    case GridMode::slab2d: return "slab2d";
    case GridMode::slab3d: return "slab3d";
  }
  return "unknown";
}

enum class Axis { x = 0, y = 1, z = 2 };

struct Grid {
  GridMode mode{GridMode::column1d};
  int nx{1}, ny{1}, nz{0};
  double Lx{1}, Ly{1}, Lz{1};
  double dx{1}, dy{1}, dz{1};

  std::size_t num_nodes() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  double x(int i) const { return i * dx; }
  double y(int j) const { return j * dy; }
  double z(int k) const { return k * dz; }
  Vec3 pos(int i, int j, int k) const { return {x(i), y(j), z(k)}; }
  std::size_t wall_stride() const { return static_cast<std::size_t>(nx) * ny; }
};

inline Grid make_grid(GridMode mode, int nx, int ny, int nz, double Lx, double Ly, double Lz) {
  if (nz < 8) throw Error(ErrorKind::ConfigError, "grid.nz must be >= 8 (got " + std::to_string(nz) + ")");
  if (nx < 1 || ny < 1) throw Error(ErrorKind::ConfigError, "grid.nx and grid.ny must be >= 1");
  if (!(Lx > 0) || !(Ly > 0) || !(Lz > 0)) throw Error(ErrorKind::ConfigError, "grid extents must be positive");
  switch (mode) {
    case GridMode::column1d:
      if (nx != 1 || ny != 1) throw Error(ErrorKind::ConfigError, "column1d requires nx = ny = 1");
      break;
    case GridMode::slab2d:
      if (nx < 4 || ny != 1) throw Error(ErrorKind::ConfigError, "slab2d requires nx >= 4 and ny = 1");
      break;
    case GridMode::slab3d:
      if (nx < 4 || ny < 4) throw Error(ErrorKind::ConfigError, "slab3d requires nx >= 4 and ny >= 4");
      break;
  }
  Grid g;
  g.mode = mode;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.Lx = Lx;
  g.Ly = Ly;
  g.Lz = Lz;
  g.dx = Lx / nx;
  g.dy = Ly / ny;
  g.dz = Lz / (nz - 1);
  return g;
}

using ScalarField = std::vector<double>;

inline ScalarField make_scalar(const Grid& g, double fill = 0.0) { return ScalarField(g.num_nodes(), fill); }

/// Three scalar components stored separately (component-of-arrays layout).
struct VectorField {
  std::array<ScalarField, 3> c;

  VectorField() = default;
  explicit VectorField(const Grid& g) { for (auto& f : c) f.assign(g.num_nodes(), 0.0); }

  Vec3 at(std::size_t n) const { return {c[0][n], c[1][n], c[2][n]}; }
  void set(std::size_t n, const Vec3& v) {
    c[0][n] = v[0];
    c[1][n] = v[1];
    c[2][n] = v[2];
  }
};

/// Nine scalar components m[3*i + j] representing a matrix field T_{ij}.
struct TensorField {
  std::array<ScalarField, 9> m;

  TensorField() = default;
  explicit TensorField(const Grid& g) { for (auto& f : m) f.assign(g.num_nodes(), 0.0); }

  ScalarField& comp(int i, int j) { return m[3 * i + j]; }
  const ScalarField& comp(int i, int j) const { return m[3 * i + j]; }
  Mat3 at(std::size_t n) const {
    return Mat3{{{m[0][n], m[1][n], m[2][n]}, {m[3][n], m[4][n], m[5][n]}, {m[6][n], m[7][n], m[8][n]}}};
  }
  void set(std::size_t n, const Mat3& a) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[3 * i + j][n] = a[i][j];
  }
};

namespace detail {

inline void diff_x_into(const Grid& g, const double* f, double* out) {
  const double inv2 = 1.0 / (2.0 * g.dx);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t row = g.idx(0, j, k);
      for (int i = 0; i < g.nx; ++i) {
        const int ip = (i + 1 == g.nx) ? 0 : i + 1;
        const int im = (i == 0) ? g.nx - 1 : i - 1;
        out[row + i] = (f[row + ip] - f[row + im]) * inv2;
      }
    }
}

inline void diff_y_into(const Grid& g, const double* f, double* out) {
  const double inv2 = 1.0 / (2.0 * g.dy);
  const std::size_t sx = static_cast<std::size_t>(g.nx);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) {
      const int jp = (j + 1 == g.ny) ? 0 : j + 1;
      const int jm = (j == 0) ? g.ny - 1 : j - 1;
      const std::size_t r = g.idx(0, j, k), rp = g.idx(0, jp, k), rm = g.idx(0, jm, k);
      (void)sx;
      for (int i = 0; i < g.nx; ++i) out[r + i] = (f[rp + i] - f[rm + i]) * inv2;
    }
}

inline void diff_z_into(const Grid& g, const double* f, double* out) {
  const double inv2 = 1.0 / (2.0 * g.dz);
  const std::size_t s = g.wall_stride();
  const std::size_t plane = s;
  // wall (k = 0): one-sided second order
  for (std::size_t n = 0; n < plane; ++n) out[n] = (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) * inv2;
  // interior
  for (int k = 1; k < g.nz - 1; ++k) {
    const std::size_t r = static_cast<std::size_t>(k) * s;
    for (std::size_t n = r; n < r + plane; ++n) out[n] = (f[n + s] - f[n - s]) * inv2;
  }
  // top (k = nz-1): mirrored one-sided
  const std::size_t t = static_cast<std::size_t>(g.nz - 1) * s;
  for (std::size_t n = t; n < t + plane; ++n) out[n] = (3.0 * f[n] - 4.0 * f[n - s] + f[n - 2 * s]) * inv2;
}

inline void d2z_into(const Grid& g, const double* f, double* out) {
  const double inv = 1.0 / (g.dz * g.dz);
  const std::size_t s = g.wall_stride();
  const std::size_t plane = s;
  for (std::size_t n = 0; n < plane; ++n)
    out[n] = (2.0 * f[n] - 5.0 * f[n + s] + 4.0 * f[n + 2 * s] - f[n + 3 * s]) * inv;
  for (int k = 1; k < g.nz - 1; ++k) {
    const std::size_t r = static_cast<std::size_t>(k) * s;
    for (std::size_t n = r; n < r + plane; ++n) out[n] = (f[n + s] - 2.0 * f[n] + f[n - s]) * inv;
  }
  const std::size_t t = static_cast<std::size_t>(g.nz - 1) * s;
  for (std::size_t n = t; n < t + plane; ++n)
    out[n] = (2.0 * f[n] - 5.0 * f[n - s] + 4.0 * f[n - 2 * s] - f[n - 3 * s]) * inv;
}

}  // namespace detail

inline void diff_into(const Grid& g, const double* f, double* out, Axis axis) {
  switch (axis) {
    case Axis::x: detail::diff_x_into(g, f, out); return;
    case Axis::y: detail::diff_y_into(g, f, out); return;
    case Axis::z: detail::diff_z_into(g, f, out); return;
  }
}

inline ScalarField diff(const Grid& g, const ScalarField& f, Axis axis) {
  ScalarField out(f.size());
  diff_into(g, f.data(), out.data(), axis);
  return out;
}

/// First derivative of a field at a single node, using exactly the same
/// arithmetic as diff_into so the value is bitwise identical to the
/// corresponding entry of the full-field derivative.
inline double node_diff(const Grid& g, const double* f, Axis axis, int i, int j, int k) {
  switch (axis) {
    case Axis::x: {
      const double inv2 = 1.0 / (2.0 * g.dx);
      const std::size_t row = g.idx(0, j, k);
      const int ip = (i + 1 == g.nx) ? 0 : i + 1;
      const int im = (i == 0) ? g.nx - 1 : i - 1;
      return (f[row + ip] - f[row + im]) * inv2;
    }
    case Axis::y: {
      const double inv2 = 1.0 / (2.0 * g.dy);
      const int jp = (j + 1 == g.ny) ? 0 : j + 1;
      const int jm = (j == 0) ? g.ny - 1 : j - 1;
      return (f[g.idx(i, jp, k)] - f[g.idx(i, jm, k)]) * inv2;
    }
    case Axis::z: {
      const double inv2 = 1.0 / (2.0 * g.dz);
      const std::size_t s = g.wall_stride();
      const std::size_t n = g.idx(i, j, k);
      if (k == 0) return (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) * inv2;
      if (k == g.nz - 1) return (3.0 * f[n] - 4.0 * f[n - s] + f[n - 2 * s]) * inv2;
      return (f[n + s] - f[n - s]) * inv2;
    }
  }
  return 0.0;
}

/// Compact second derivative in z (direct stencil, not composed).
inline ScalarField d2z(const Grid& g, const ScalarField& f) {
  ScalarField out(f.size());
  detail::d2z_into(g, f.data(), out.data());
  return out;
}

/// Volume quadrature: trapezoid in z, uniform (periodic) weights tangentially.
inline double integrate_volume(const Grid& g, const ScalarField& f) {
  const double wxy = g.dx * g.dy;
  const std::size_t s = g.wall_stride();
  double total = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    const double wz = (k == 0 || k == g.nz - 1) ? 0.5 * g.dz : g.dz;
    const std::size_t r = static_cast<std::size_t>(k) * s;
    double plane = 0.0;
    for (std::size_t n = r; n < r + s; ++n) plane += f[n];
    total += wz * plane;
  }
  return total * wxy;
}

/// Quadrature over the physical wall z = 0 (uniform periodic weights).
inline double integrate_boundary(const Grid& g, const ScalarField& f) {
  const std::size_t s = g.wall_stride();
  double total = 0.0;
  for (std::size_t n = 0; n < s; ++n) total += f[n];
  return total * g.dx * g.dy;
}

inline double l2_sq(const Grid& g, const ScalarField& f) {
  const double wxy = g.dx * g.dy;
  const std::size_t s = g.wall_stride();
  double total = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    const double wz = (k == 0 || k == g.nz - 1) ? 0.5 * g.dz : g.dz;
    const std::size_t r = static_cast<std::size_t>(k) * s;
    double plane = 0.0;
    for (std::size_t n = r; n < r + s; ++n) plane += f[n] * f[n];
    total += wz * plane;
  }
  return total * wxy;
}

inline double l2_sq(const Grid& g, const VectorField& v) {
  return l2_sq(g, v.c[0]) + l2_sq(g, v.c[1]) + l2_sq(g, v.c[2]);
}

inline double linf(const ScalarField& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

inline double linf(const VectorField& v) {
  return std::max(linf(v.c[0]), std::max(linf(v.c[1]), linf(v.c[2])));
}

}  // namespace vve
