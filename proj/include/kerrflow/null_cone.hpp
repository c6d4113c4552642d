#pragma once

#include <cmath>
#include <string_view>

#include "kerrflow/charts.hpp"
#include "kerrflow/error.hpp"
#include "kerrflow/hamiltonian.hpp"
#include "kerrflow/params.hpp"
#include "kerrflow/tolerance.hpp"

namespace kerrflow {

enum class Orientation { Future, Past };

/// Sign in front of the square root when solving the null shell for xi_t.
/// Plus yields future-pointing covectors, Minus past-pointing ones.
enum class Branch { Plus, Minus };

constexpr std::string_view to_string(Orientation o) { return o == Orientation::Future ? "Future" : "Past"; }
constexpr std::string_view to_string(Branch b) { return b == Branch::Plus ? "Plus" : "Minus"; }

namespace detail {

inline void require_chart(const ChartPoint& x, ChartId id, const char* who) {
  if (x.chart != id) {
    throw Error(ErrorCode::ChartDomain, std::string(who) + " expects a " + std::string(to_string(id)) + " point");
  }
}

inline void require_nonzero(double a, double b, double c) {
  if (a == 0.0 && b == 0.0 && c == 0.0) {
    throw Error(ErrorCode::ZeroSpatialPart, "spatial covector components all vanish");
  }
}

}  // namespace detail

/// Solves G = 0 for xi_t at a Boyer-Lindquist point off the axis.
inline Covector complete_null(const SpacetimeParams& p, const ChartPoint& x, double xi_r, double xi_theta,
                              double xi_phi, Branch branch, const ToleranceConfig& tol = {}) {
  detail::require_chart(x, ChartId::BL_I, "complete_null");
  detail::require_nonzero(xi_r, xi_theta, xi_phi);
  const double r = x.x[1];
  const double theta = x.x[2];
  detail::require_exterior(p, r);
  const double s = std::sin(theta);
  if (std::abs(s) < tol.axis_threshold) {
    throw Error(ErrorCode::OnAxis, "sin(theta) below axis threshold; use complete_null_axis");
  }
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  const double radicand =
      D / sigma2 * (D * xi_r * xi_r + xi_theta * xi_theta + rho2 * rho2 / (sigma2 * s * s) * xi_phi * xi_phi);
  const double root = std::sqrt(radicand);
  const double xi_t = -2.0 * p.M * p.a * r / sigma2 * xi_phi + (branch == Branch::Plus ? root : -root);
  return {ChartId::BL_I, {xi_t, xi_r, xi_theta, xi_phi}};
}

/// Null completion in the stereographic patch (t, r, x1, x2). On the axis
/// itself this reduces to xi_t = +-sqrt(Delta (xi_1^2 + xi_2^2 + Delta xi_r^2))/(r^2+a^2).
inline Covector complete_null_axis(const SpacetimeParams& p, const ChartPoint& x, double xi_r, double xi_1,
                                   double xi_2, Branch branch) {
  detail::require_chart(x, ChartId::AxisStereo, "complete_null_axis");
  detail::require_nonzero(xi_r, xi_1, xi_2);
  const double r = x.x[1];
  detail::require_exterior(p, r);
  const double x1 = x.x[2];
  const double x2 = x.x[3];
  const double s2 = x1 * x1 + x2 * x2;
  if (!(s2 < 1.0)) throw Error(ErrorCode::ChartDomain, "stereographic point outside the unit disc");
  const double a = p.a;
  const double D = delta(p, r);
  const double ra = r * r + a * a;
  const double sigma2 = ra * ra - a * a * D * s2;
  const double L = x1 * xi_2 - x2 * xi_1;
  const double dot = x1 * xi_1 + x2 * xi_2;
  // split |xi|^2 into the parts along and across the circles of constant s;
  // written this way every term under the root is nonnegative
  double along = 0.0;
  double across = xi_1 * xi_1 + xi_2 * xi_2;
  if (s2 > 1e-200) {
    along = dot * dot / s2;
    across = L * L / s2;
  }
  const double rho2 = r * r + a * a * (1.0 - s2);
  const double frame = 2.0 * p.M * a * r * L;
  const double radicand = D * (sigma2 * D * xi_r * xi_r + sigma2 * (1.0 - s2) * along + rho2 * rho2 * across);
  const double root = std::sqrt(radicand);
  const double xi_t = (-frame + (branch == Branch::Plus ? root : -root)) / sigma2;
  return {ChartId::AxisStereo, {xi_t, xi_r, xi_1, xi_2}, x.patch};
}

/// xi(-grad t) = (sigma^2 xi_t + 2 M a r xi_phi) / (rho^2 Delta).
inline double grad_t_contraction(const SpacetimeParams& p, const ChartPoint& x, const Covector& xi) {
  const double r = x.x[1];
  const double a = p.a;
  const double D = delta(p, r);
  double sigma2, rho2, axial;
  if (x.chart == ChartId::AxisStereo) {
    const double s2 = x.x[2] * x.x[2] + x.x[3] * x.x[3];
    const double ra = r * r + a * a;
    sigma2 = ra * ra - a * a * D * s2;
    rho2 = r * r + a * a * (1.0 - s2);
    axial = x.x[2] * xi.xi[3] - x.x[3] * xi.xi[2];
  } else {
    detail::require_chart(x, ChartId::BL_I, "grad_t_contraction");
    const auto sc = metric_scalars(p, r, x.x[2]);
    sigma2 = sc.sigma2;
    rho2 = sc.rho2;
    axial = xi.xi[3];
  }
  return (sigma2 * xi.xi[0] + 2.0 * p.M * a * r * axial) / (rho2 * D);
}

/// |G| divided by the magnitude of its terms; zero on the null shell.
inline double null_residual(const SpacetimeParams& p, const ChartPoint& x, const Covector& xi) {
  const ProductChart chart = detail::product_of(x.chart, x.patch);
  const double scale = hamiltonian_scale(p, chart, x.x, xi.xi);
  if (scale == 0.0) return 0.0;
  return std::abs(hamiltonian(p, chart, x.x, xi.xi)) / scale;
}

inline Orientation orientation(const SpacetimeParams& p, const ChartPoint& x, const Covector& xi,
                               const ToleranceConfig& tol = {}) {
  const double residual = null_residual(p, x, xi);
  if (!(residual <= tol.null_tol)) {
    throw Error(ErrorCode::NotNull, "null residual " + std::to_string(residual) + " exceeds tolerance");
  }
  const double c = grad_t_contraction(p, x, xi);
  // scale of the two terms in the contraction, for a relative test
  double axial = xi.xi[3];
  if (x.chart == ChartId::AxisStereo) axial = x.x[2] * xi.xi[3] - x.x[3] * xi.xi[2];
  const double r = x.x[1];
  const double rho2 = x.chart == ChartId::AxisStereo
                          ? r * r + p.a * p.a * (1.0 - x.x[2] * x.x[2] - x.x[3] * x.x[3])
                          : metric_scalars(p, r, x.x[2]).rho2;
  const double ra = r * r + p.a * p.a;
  const double scale =
      (ra * ra * std::abs(xi.xi[0]) + 2.0 * p.M * std::abs(p.a * axial) * r) / (rho2 * delta(p, r));
  if (!(std::abs(c) > tol.orientation_tol * scale)) {
    throw Error(ErrorCode::DegenerateZero, "orientation contraction vanishes numerically");
  }
  return c > 0.0 ? Orientation::Future : Orientation::Past;
}

}  // namespace kerrflow
