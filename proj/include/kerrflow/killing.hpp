#pragma once

#include <cmath>

#include "kerrflow/charts.hpp"
#include "kerrflow/params.hpp"

namespace kerrflow {

/// v_I = d_t generates stationarity at infinity; v_H = d_t + Omega_H d_phi
/// is the horizon generator, equal to kappa_plus (-U d_U + V d_V) in
/// Kruskal coordinates.
enum class KillingField { Infinity, Horizon };

/// xi(v) for a covector in any chart of the atlas. The shifted and conformal
/// charts only reparameterize r, so d_t and d_phi keep their component form.
inline double killing_contraction(const SpacetimeParams& p, const ChartPoint& pt, const Covector& xi,
                                  KillingField field) {
  if (pt.chart == ChartId::Kruskal) {
    const double boost = p.kappa_plus * (-pt.x[0] * xi.xi[0] + pt.x[1] * xi.xi[1]);
    return field == KillingField::Horizon ? boost : boost - p.Omega_H * xi.xi[3];
  }
  double axial = xi.xi[3];
  if (pt.chart == ChartId::AxisStereo) axial = pt.x[2] * xi.xi[3] - pt.x[3] * xi.xi[2];
  return field == KillingField::Infinity ? xi.xi[0] : xi.xi[0] + p.Omega_H * axial;
}

/// Component form on Boyer-Lindquist data.
inline double killing_contraction(const SpacetimeParams& p, double xi_t, double xi_phi, KillingField field) {
  return field == KillingField::Infinity ? xi_t : xi_t + p.Omega_H * xi_phi;
}

/// True where the field is spacelike.
inline bool ergoregion_membership(const SpacetimeParams& p, double r, double theta, KillingField field) {
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  if (field == KillingField::Infinity) return rho2 - 2.0 * p.M * r < 0.0;
  const double s2 = std::sin(theta) * std::sin(theta);
  const double W = p.Omega_H;
  const double lhs = (1.0 - 2.0 * p.M * r / rho2) + 4.0 * p.a * p.M * r * s2 / rho2 * W -
                     sigma2 / rho2 * s2 * W * W;
  return lhs < 0.0;
}

}  // namespace kerrflow
