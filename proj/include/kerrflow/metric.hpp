#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "kerrflow/error.hpp"
#include "kerrflow/params.hpp"

namespace kerrflow {

using Matrix4 = std::array<std::array<double, 4>, 4>;
using Vec4 = std::array<double, 4>;

/// Boyer-Lindquist line element on block I, components ordered (t, r, theta, phi).
inline Matrix4 metric_cov_boyer_lindquist(const SpacetimeParams& p, double r, double theta) {
  if (!(r > p.r_plus)) {
    throw Error(ErrorCode::OutsideChart, "Boyer-Lindquist metric needs r > r_plus");
  }
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  const double s2 = std::sin(theta) * std::sin(theta);
  Matrix4 g{};
  g[0][0] = -(1.0 - 2.0 * p.M * r / rho2);
  g[0][3] = g[3][0] = -2.0 * p.a * p.M * r * s2 / rho2;
  g[1][1] = rho2 / D;
  g[2][2] = rho2;
  g[3][3] = sigma2 / rho2 * s2;
  return g;
}

/// Kerr-star (t*, r, theta, phi*) when advanced is true, star-Kerr
/// (*t, r, theta, *phi) otherwise. Regular for r > r_minus.
inline Matrix4 metric_cov_shifted(const SpacetimeParams& p, double r, double theta, bool advanced) {
  if (!(r > p.r_minus)) {
    throw Error(ErrorCode::OutsideChart, "shifted Kerr charts need r > r_minus");
  }
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  const double s2 = std::sin(theta) * std::sin(theta);
  const double sign = advanced ? 1.0 : -1.0;
  Matrix4 g{};
  g[0][0] = -(1.0 - 2.0 * p.M * r / rho2);
  g[0][3] = g[3][0] = -2.0 * p.a * p.M * r * s2 / rho2;
  g[3][3] = sigma2 / rho2 * s2;
  g[0][1] = g[1][0] = sign;
  g[3][1] = g[1][3] = -sign * p.a * s2;
  g[2][2] = rho2;
  return g;
}

/// Determinant by Laplace expansion along the first row.
inline double determinant(const Matrix4& m) {
  auto minor3 = [&](int skip) {
    int c[3];
    for (int j = 0, k = 0; j < 4; ++j)
      if (j != skip) c[k++] = j;
    return m[1][c[0]] * (m[2][c[1]] * m[3][c[2]] - m[2][c[2]] * m[3][c[1]]) -
           m[1][c[1]] * (m[2][c[0]] * m[3][c[2]] - m[2][c[2]] * m[3][c[0]]) +
           m[1][c[2]] * (m[2][c[0]] * m[3][c[1]] - m[2][c[1]] * m[3][c[0]]);
  };
  double det = 0.0;
  for (int j = 0; j < 4; ++j) det += ((j % 2) ? -1.0 : 1.0) * m[0][j] * minor3(j);
  return det;
}

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix4 inverse(Matrix4 m) {
  Matrix4 inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 4; ++row)
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    if (m[pivot][col] == 0.0) throw Error(ErrorCode::DivisionDomain, "singular 4x4 matrix");
    std::swap(m[pivot], m[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = 1.0 / m[col][col];
    for (int j = 0; j < 4; ++j) {
      m[col][j] *= d;
      inv[col][j] *= d;
    }
    for (int row = 0; row < 4; ++row) {
      if (row == col) continue;
      const double f = m[row][col];
      for (int j = 0; j < 4; ++j) {
        m[row][j] -= f * m[col][j];
        inv[row][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

inline double quadratic_form(const Matrix4& m, const Vec4& v) {
  double q = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) q += v[i] * m[i][j] * v[j];
  return q;
}

}  // namespace kerrflow
