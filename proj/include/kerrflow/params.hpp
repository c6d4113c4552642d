#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kerrflow/error.hpp"

namespace kerrflow {

/// Mass and spin of a subextreme Kerr black hole together with the horizon
/// constants derived from them. Geometric units (G = c = 1).
struct SpacetimeParams {
  double M = 1.0;
  double a = 0.0;
  double r_plus = 2.0;
  double r_minus = 0.0;
  double kappa_plus = 0.25;
  // -inf when a = 0: the inner horizon collapses onto r = 0.
  double kappa_minus = -std::numeric_limits<double>::infinity();
  double Omega_H = 0.0;
  double T_H = 0.25 / (2.0 * std::numbers::pi);

  // 1/(2 kappa_plus) and 1/(2 kappa_minus); the latter is 0 for a = 0.
  double half_inv_kappa_plus = 2.0;
  double half_inv_kappa_minus = 0.0;
};

inline SpacetimeParams derive_constants(double M, double a) {
  if (!(M > 0.0) || !std::isfinite(M)) {
    throw Error(ErrorCode::NonpositiveMass, "mass must be positive, got " + std::to_string(M));
  }
  if (!std::isfinite(a) || std::abs(a) > M * (1.0 - 1e-12)) {
    throw Error(ErrorCode::ExtremalOrSuper,
                "subextreme range required: |a| < M, got a=" + std::to_string(a));
  }
  SpacetimeParams p;
  p.M = M;
  p.a = a;
  const double root = std::sqrt((M - a) * (M + a));
  p.r_plus = M + root;
  // a^2 / r_plus avoids cancellation in M - root for small spins.
  p.r_minus = a * a / p.r_plus;
  const double a2 = a * a;
  const double gap = p.r_plus - p.r_minus;
  p.kappa_plus = gap / (2.0 * (p.r_plus * p.r_plus + a2));
  const double inner = p.r_minus * p.r_minus + a2;
  p.kappa_minus = inner > 0.0 ? -gap / (2.0 * inner) : -std::numeric_limits<double>::infinity();
  p.Omega_H = a / (p.r_plus * p.r_plus + a2);
  p.T_H = p.kappa_plus / (2.0 * std::numbers::pi);
  p.half_inv_kappa_plus = (p.r_plus * p.r_plus + a2) / gap;
  p.half_inv_kappa_minus = -inner / gap;
  return p;
}

struct MetricScalars {
  double Delta;
  double rho2;
  double sigma2;
};

inline double delta(const SpacetimeParams& p, double r) { return r * r - 2.0 * p.M * r + p.a * p.a; }

inline MetricScalars metric_scalars(const SpacetimeParams& p, double r, double theta) {
  const double a2 = p.a * p.a;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double D = delta(p, r);
  const double ra = r * r + a2;
  return {D, r * r + a2 * c * c, ra * ra - a2 * D * s * s};
}

/// Second form of sigma^2, kept separate as a cross-check on the first.
inline double sigma2_alternate(const SpacetimeParams& p, double r, double theta) {
  const double a2 = p.a * p.a;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return (r * r + a2) * (r * r + a2 * c * c) + 2.0 * a2 * p.M * r * s * s;
}

}  // namespace kerrflow
