#pragma once
/// @file core.hpp
/// @brief Dense 3-vector / 3x3-matrix algebra used throughout the solver.
///
/// Everything here is closed-form and allocation-free.  Conventions:
///   * Mat3 is row-major: m[i][j] is row i, column j.
///   * cofactor(M)[i][j] is the signed minor of entry (i,j), so
///     det(M) = sum_j M[r][j] * cofactor(M)[r][j] for any row r, and
///     adjugate = transpose(cofactor), inverse = adjugate / det.

#include <array>
#include <cmath>
#include <cstddef>

#include "vve/errors.hpp"

namespace vve {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr Mat3 mat3_zero() { return Mat3{{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}; }
inline constexpr Mat3 mat3_identity() { return Mat3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline Mat3 transpose(const Mat3& m) {
  return Mat3{{{m[0][0], m[1][0], m[2][0]}, {m[0][1], m[1][1], m[2][1]}, {m[0][2], m[1][2], m[2][2]}}};
}

/// Signed-minor (cofactor) matrix; see the header comment for conventions.
inline Mat3 cofactor(const Mat3& m) {
  Mat3 c;
  c[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  c[0][1] = -(m[1][0] * m[2][2] - m[1][2] * m[2][0]);
  c[0][2] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  c[1][0] = -(m[0][1] * m[2][2] - m[0][2] * m[2][1]);
  c[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  c[1][2] = -(m[0][0] * m[2][1] - m[0][1] * m[2][0]);
  c[2][0] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
  c[2][1] = -(m[0][0] * m[1][2] - m[0][2] * m[1][0]);
  c[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return c;
}

/// Determinant by first-row cofactor contraction.
inline double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Determinant expanded along an arbitrary row (cross-check path).
inline double det_by_row(const Mat3& m, int row) {
  const Mat3 c = cofactor(m);
  return m[row][0] * c[row][0] + m[row][1] * c[row][1] + m[row][2] * c[row][2];
}

inline Mat3 adjugate(const Mat3& m) { return transpose(cofactor(m)); }

inline Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][j] + b[i][j];
  return r;
}

inline Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][j] - b[i][j];
  return r;
}

inline Mat3 operator*(double s, const Mat3& a) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = s * a[i][j];
  return r;
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r = mat3_zero();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      const double aik = a[i][k];
      for (int j = 0; j < 3; ++j) r[i][j] += aik * b[k][j];
    }
  return r;
}

inline Vec3 matvec(const Mat3& a, const Vec3& x) {
  return {a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2], a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
          a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2]};
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i] * b[j];
  return r;
}

inline double frobenius_inner(const Mat3& a, const Mat3& b) {
  double s = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a[i][j] * b[i][j];
  return s;
}

inline double frobenius_norm2(const Mat3& a) { return frobenius_inner(a, a); }

inline double trace(const Mat3& a) { return a[0][0] + a[1][1] + a[2][2]; }

inline double max_abs_entry(const Mat3& a) {
  double m = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j]));
  return m;
}

/// Inverse via adjugate; throws DegenerateMap when |det| is below floor.
inline Mat3 inverse(const Mat3& m, double det_floor = 1e-300) {
  const double d = det(m);
  if (std::abs(d) < det_floor) throw Error(ErrorKind::DegenerateMap, "matrix determinant below invertibility floor");
  return (1.0 / d) * adjugate(m);
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
/// returned in ascending order.  Deterministic sweep order (01, 02, 12);
/// converges to machine precision in a handful of sweeps.
inline std::array<double, 3> sym3_eigenvalues(const Mat3& m_in) {
  Mat3 m = m_in;
  // Symmetrize defensively so roundoff asymmetry cannot stall the sweep.
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double avg = 0.5 * (m[i][j] + m[j][i]);
      m[i][j] = m[j][i] = avg;
    }
  constexpr int kMaxSweeps = 50;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    const double diag = m[0][0] * m[0][0] + m[1][1] * m[1][1] + m[2][2] * m[2][2];
    if (off <= 1e-30 * (diag + off) || off == 0.0) break;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (m[p][q] == 0.0) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 r = mat3_identity();
        r[p][p] = c;
        r[q][q] = c;
        r[p][q] = s;
        r[q][p] = -s;
        m = matmul(transpose(r), matmul(m, r));
        m[p][q] = m[q][p] = 0.0;  // rotation zeroes this pair exactly by construction
      }
  }
  std::array<double, 3> ev{m[0][0], m[1][1], m[2][2]};
  if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
  if (ev[1] > ev[2]) std::swap(ev[1], ev[2]);
  if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
  return ev;
}

}  // namespace vve
