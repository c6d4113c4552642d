#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kerrflow/charts.hpp"
#include "kerrflow/error.hpp"
#include "kerrflow/hamiltonian.hpp"
#include "kerrflow/null_cone.hpp"
#include "kerrflow/params.hpp"
#include "kerrflow/roots.hpp"
#include "kerrflow/tolerance.hpp"

namespace kerrflow {

struct RadialFunctions {
  double G_r;
  double G_theta;
  double dG_r;  // d/dr of G_r at fixed covector
};

/// xi ordered (xi_t, xi_r, xi_theta, xi_phi).
inline RadialFunctions radial_functions(const SpacetimeParams& p, double r, double theta,
                                        const std::array<double, 4>& xi) {
  const double a = p.a;
  const double D = delta(p, r);
  const double dD = 2.0 * (r - p.M);
  const double E = (r * r + a * a) * xi[0] + a * xi[3];
  const double s = std::sin(theta);
  const double w = a * s * s * xi[0] + xi[3];
  RadialFunctions out;
  out.G_r = D * xi[1] * xi[1] - E * E / D;
  out.G_theta = xi[2] * xi[2] + w * w / (s * s);
  out.dG_r = dD * xi[1] * xi[1] + E * E * dD / (D * D) - 4.0 * r * xi[0] * E / D;
  return out;
}

/// xi_t [r^2 (r - 3M) + a^2 (r + M)] - a xi_phi (r - M). With xi_r = 0,
/// d_r G_r = -2 E T / Delta^2, so its zeros (E != 0) are the trapping radii.
inline double trapped_condition_value(const SpacetimeParams& p, double r, double xi_t, double xi_phi) {
  const double M = p.M;
  const double a = p.a;
  return xi_t * (r * r * (r - 3.0 * M) + a * a * (r + M)) - a * xi_phi * (r - M);
}

enum class KReason { None, XiR, NotNull, RadialDerivative, ZeroCovector };

constexpr std::string_view to_string(KReason r) {
  switch (r) {
    case KReason::None: return "none";
    case KReason::XiR: return "xi_r";
    case KReason::NotNull: return "not-null";
    case KReason::RadialDerivative: return "radial-derivative";
    case KReason::ZeroCovector: return "zero-covector";
  }
  return "?";
}

struct TrappedWitness {
  double r_hat = 0.0;
  // residuals relative to the magnitude of their terms (xi_r relative to |xi|)
  double G = 0.0;
  double dG_r = 0.0;
  double xi_r = 0.0;
  bool in_K = false;
  KReason reason = KReason::None;
  // xi_t (xi_t + Omega_0 xi_phi) > 0 with Omega_0 = a/(r^2+a^2); expected on K.
  bool positivity_consistent = false;
};

inline double euclidean_norm(const std::array<double, 4>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}

/// Pointwise test of G = d_r G_r = xi_r = 0, xi != 0 at a Boyer-Lindquist or
/// stereographic point.
inline TrappedWitness is_in_K(const SpacetimeParams& p, const ChartPoint& x, const Covector& xi,
                              const ToleranceConfig& tol = {}) {
  TrappedWitness w;
  const double r = x.x[1];
  w.r_hat = r;
  detail::require_exterior(p, r);
  const double norm = euclidean_norm(xi.xi);
  if (!(norm > 0.0)) {
    w.reason = KReason::ZeroCovector;
    return w;
  }
  const ProductChart chart = detail::product_of(x.chart, x.patch);
  const double a = p.a;
  const double axial = chart.angular == AngularChart::Polar ? xi.xi[3] : x.x[2] * xi.xi[3] - x.x[3] * xi.xi[2];
  const double D = delta(p, r);
  const double dD = 2.0 * (r - p.M);
  const double E = (r * r + a * a) * xi.xi[0] + a * axial;
  const double xr = xi.xi[1];

  const double G = hamiltonian(p, chart, x.x, xi.xi);
  const double G_scale = hamiltonian_scale(p, chart, x.x, xi.xi);
  const double t1 = dD * xr * xr;
  const double t2 = E * E * dD / (D * D);
  const double t3 = 4.0 * r * xi.xi[0] * E / D;
  const double dG = t1 + t2 - t3;
  const double dG_scale = std::abs(t1) + std::abs(t2) + std::abs(t3);

  w.xi_r = std::abs(xr) / norm;
  w.G = G_scale > 0.0 ? std::abs(G) / G_scale : 0.0;
  w.dG_r = dG_scale > 0.0 ? std::abs(dG) / dG_scale : 0.0;
  const double omega0 = a / (r * r + a * a);
  w.positivity_consistent = xi.xi[0] * (xi.xi[0] + omega0 * axial) > 0.0;

  if (w.xi_r >= tol.trapped_tol) {
    w.reason = KReason::XiR;
  } else if (w.G >= tol.trapped_tol) {
    w.reason = KReason::NotNull;
  } else if (w.dG_r >= tol.trapped_tol) {
    w.reason = KReason::RadialDerivative;
  } else {
    w.in_K = true;
  }
  return w;
}

namespace detail {

inline std::vector<double> radial_bracket_grid(const SpacetimeParams& p, const ToleranceConfig& tol,
                                               std::size_t n) {
  const double lo = p.r_plus * (1.0 + tol.horizon_offset);
  const double hi = tol.radial_max * p.M;
  return roots::offset_log_grid(p.r_plus, lo, hi, n);
}

}  // namespace detail

/// Root of trapped_condition_value in (r_plus, radial_max M) for fixed
/// (xi_t, xi_phi); absent when the cubic does not change sign there.
inline std::optional<double> photon_radius_solve(const SpacetimeParams& p, double xi_t, double xi_phi,
                                                 const ToleranceConfig& tol = {}) {
  if (xi_t == 0.0 && xi_phi == 0.0) throw Error(ErrorCode::ZeroSpatialPart, "(xi_t, xi_phi) = 0");
  auto f = [&](double r) { return trapped_condition_value(p, r, xi_t, xi_phi); };
  const auto grid = detail::radial_bracket_grid(p, tol, 64);
  const auto brackets = roots::sign_changes(f, grid);
  if (brackets.empty()) return std::nullopt;
  const auto [lo, hi] = brackets.front();
  return roots::bracketed(f, lo, hi).x;
}

// ---------------------------------------------------------------------------
// Projection K-hat: (theta; xi_t, xi_theta, xi_phi), with t and phi omitted
// since nothing depends on them.

struct AngularCovector {
  double theta = 0.0;
  double xi_t = 0.0;
  double xi_theta = 0.0;
  double xi_phi = 0.0;
};

/// Phi(r) = -G(r, x-hat, xi_r = 0, xi-hat).
inline double phi_potential(const SpacetimeParams& p, double r, const AngularCovector& k) {
  const auto f = radial_functions(p, r, k.theta, {k.xi_t, 0.0, k.xi_theta, k.xi_phi});
  return -(f.G_r + f.G_theta);
}

inline double phi_scale(const SpacetimeParams& p, double r, const AngularCovector& k) {
  const auto f = radial_functions(p, r, k.theta, {k.xi_t, 0.0, k.xi_theta, k.xi_phi});
  return std::abs(f.G_r) + std::abs(f.G_theta);
}

struct RPrime {
  double r_prime;
  // Phi(r') over its term scale; zero for data on K-hat
  double margin;
};

/// Critical point of Phi and the relative value there, without validation.
/// For data on K-hat the critical point is the double zero r'.
inline std::optional<RPrime> khat_margin(const SpacetimeParams& p, const AngularCovector& k,
                                         const ToleranceConfig& tol = {}) {
  if (k.xi_t == 0.0 && k.xi_phi == 0.0) return std::nullopt;
  const auto r = photon_radius_solve(p, k.xi_t, k.xi_phi, tol);
  if (!r) return std::nullopt;
  const double scale = phi_scale(p, *r, k);
  return RPrime{*r, scale > 0.0 ? phi_potential(p, *r, k) / scale : 0.0};
}

/// r' with Phi(r') = 0 for (x-hat, xi-hat) on K-hat. Phi touches zero
/// there without changing sign, so the root is located through the sign
/// change of Phi' (the trapping cubic) and then validated.
inline double r_prime_solve(const SpacetimeParams& p, const AngularCovector& k, const ToleranceConfig& tol = {}) {
  const auto rp = khat_margin(p, k, tol);
  if (!rp) throw Error(ErrorCode::NoRoot, "no critical radius for Phi in the exterior");
  if (!(std::abs(rp->margin) < tol.trapped_tol)) {
    throw Error(ErrorCode::NotInKHat, "Phi(r') = " + std::to_string(rp->margin) + " (relative), not on K-hat");
  }
  // Uniqueness: Phi must stay nonnegative on a log grid out to 10^4 M.
  const auto grid = roots::offset_log_grid(p.r_plus, p.r_plus * (1.0 + 1e-8), 1e4 * p.M, 200);
  for (double r : grid) {
    if (std::abs(r - rp->r_prime) < 1e-3 * rp->r_prime) continue;
    if (phi_potential(p, r, k) < -tol.trapped_tol * phi_scale(p, r, k)) {
      throw Error(ErrorCode::SecondRoot, "Phi changes sign again near r = " + std::to_string(r));
    }
  }
  return rp->r_prime;
}

enum class GammaSide { Plus, Minus };

constexpr std::string_view to_string(GammaSide s) { return s == GammaSide::Plus ? "Gamma+" : "Gamma-"; }

enum class GammaReason { None, NotInKHat, NoRoot, SecondRoot, NegativePhi, XiRMismatch };

constexpr std::string_view to_string(GammaReason r) {
  switch (r) {
    case GammaReason::None: return "none";
    case GammaReason::NotInKHat: return "not-in-K-hat";
    case GammaReason::NoRoot: return "no-root";
    case GammaReason::SecondRoot: return "second-root";
    case GammaReason::NegativePhi: return "negative-phi";
    case GammaReason::XiRMismatch: return "xi_r-mismatch";
  }
  return "?";
}

struct GammaMembership {
  GammaSide side = GammaSide::Plus;
  double r_prime = 0.0;
  double xi_r_required = 0.0;
  bool in_set = false;
  GammaReason reason = GammaReason::None;
};

inline double gamma_xi_r(const SpacetimeParams& p, double r, double r_prime, const AngularCovector& k,
                         GammaSide side) {
  const double phi = phi_potential(p, r, k);
  const double mag = std::sqrt(std::max(0.0, phi) / delta(p, r));
  const double sgn = r > r_prime ? 1.0 : (r < r_prime ? -1.0 : 0.0);
  return (side == GammaSide::Plus ? 1.0 : -1.0) * sgn * mag;
}

/// Membership of a Boyer-Lindquist phase point in Gamma+ (trapped as s -> -inf)
/// or Gamma- (trapped as s -> +inf): xi_r = +-sgn(r - r') sqrt(Phi/Delta).
inline GammaMembership gamma_membership(const SpacetimeParams& p, const ChartPoint& x, const Covector& xi,
                                        GammaSide side, const ToleranceConfig& tol = {}) {
  detail::require_chart(x, ChartId::BL_I, "gamma_membership");
  GammaMembership m;
  m.side = side;
  const AngularCovector k{x.x[2], xi.xi[0], xi.xi[2], xi.xi[3]};
  try {
    m.r_prime = r_prime_solve(p, k, tol);
  } catch (const Error& e) {
    m.reason = e.code() == ErrorCode::NotInKHat    ? GammaReason::NotInKHat
               : e.code() == ErrorCode::SecondRoot ? GammaReason::SecondRoot
                                                   : GammaReason::NoRoot;
    return m;
  }
  const double r = x.x[1];
  if (phi_potential(p, r, k) < -tol.trapped_tol * phi_scale(p, r, k)) {
    m.reason = GammaReason::NegativePhi;
    return m;
  }
  m.xi_r_required = gamma_xi_r(p, r, m.r_prime, k, side);
  const double norm = euclidean_norm(xi.xi);
  if (std::abs(xi.xi[1] - m.xi_r_required) < std::sqrt(tol.trapped_tol) * norm) {
    m.in_set = true;
  } else {
    m.reason = GammaReason::XiRMismatch;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Positivity certificate for P(r) = r^3 - 3M r^2 + (r_plus^2 + 2a^2) r - M r_plus^2.

inline double p_polynomial(const SpacetimeParams& p, double r) {
  const double M = p.M;
  const double rp2 = p.r_plus * p.r_plus;
  return ((r - 3.0 * M) * r + rp2 + 2.0 * p.a * p.a) * r - M * rp2;
}

inline double p_polynomial_slope(const SpacetimeParams& p, double r) {
  return 3.0 * r * r - 6.0 * p.M * r + p.r_plus * p.r_plus + 2.0 * p.a * p.a;
}

struct PositivityReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double p_at_r_plus = 0.0;
  double min_p = 0.0;
  double min_slope = 0.0;     // finite-difference slope between grid points
  double slope_bound = 0.0;   // r_plus^2 - a^2, a lower bound for P' on block I
  double min_slope_excess = 0.0;  // min over grid of P'(r) - slope_bound
  std::optional<double> first_violation;
};

/// Checks P > 0 and strictly increasing on the grid; never throws for a
/// violation so campaigns can report it.
inline PositivityReport p_positivity_report(const SpacetimeParams& p, const std::vector<double>& grid) {
  PositivityReport rep;
  rep.samples = grid.size();
  rep.p_at_r_plus = p_polynomial(p, p.r_plus);
  rep.slope_bound = p.r_plus * p.r_plus - p.a * p.a;
  rep.min_p = std::numeric_limits<double>::infinity();
  rep.min_slope = std::numeric_limits<double>::infinity();
  rep.min_slope_excess = std::numeric_limits<double>::infinity();
  auto flag = [&](double r) {
    ++rep.violations;
    if (!rep.first_violation) rep.first_violation = r;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid[i];
    const double P = p_polynomial(p, r);
    rep.min_p = std::min(rep.min_p, P);
    const double excess = p_polynomial_slope(p, r) - rep.slope_bound;
    rep.min_slope_excess = std::min(rep.min_slope_excess, excess);
    bool bad = !(P > 0.0) || !(excess > 0.0) || !(r > p.r_plus);
    if (i > 0) {
      const double slope = (P - p_polynomial(p, grid[i - 1])) / (r - grid[i - 1]);
      rep.min_slope = std::min(rep.min_slope, slope);
      bad = bad || !(slope > 0.0);
    }
    if (bad) flag(r);
  }
  return rep;
}

/// Throwing form: PositivityViolation names the first offending radius.
inline PositivityReport p_positivity_scan(const SpacetimeParams& p, const std::vector<double>& grid) {
  auto rep = p_positivity_report(p, grid);
  if (rep.first_violation) {
    throw Error(ErrorCode::PositivityViolation, "P fails positivity or monotonicity at r = " +
                                                    std::to_string(*rep.first_violation));
  }
  return rep;
}

/// |xi_t / (a xi_phi)| for a Minus-completed covector with xi_r = 0.
inline double omega_ratio(const SpacetimeParams& p, double r, double theta, double xi_theta, double xi_phi) {
  if (p.a * xi_phi == 0.0) throw Error(ErrorCode::DivisionDomain, "omega ratio needs a xi_phi != 0");
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  const double s = std::sin(theta);
  const double a2 = p.a * p.a;
  return 2.0 * p.M * r / sigma2 +
         std::sqrt(D / sigma2 *
                   (rho2 * rho2 / (sigma2 * a2 * s * s) + xi_theta * xi_theta / (a2 * xi_phi * xi_phi)));
}

// ---------------------------------------------------------------------------
// Trapped-set sampler: fix (theta, xi_theta, xi_phi) and the branch, let
// xi_t(r) follow the null shell with xi_r = 0, and solve the trapping cubic
// for r-hat.

struct TrappedSample {
  ChartPoint point;
  Covector covector;
  TrappedWitness witness;
};

inline std::optional<TrappedSample> sample_trapped(const SpacetimeParams& p, double theta, double xi_theta,
                                                   double xi_phi, Branch branch, const ToleranceConfig& tol = {}) {
  if (xi_theta == 0.0 && xi_phi == 0.0) return std::nullopt;
  auto covector_at = [&](double r) {
    return complete_null(p, ChartPoint{ChartId::BL_I, {0.0, r, theta, 0.0}}, 0.0, xi_theta, xi_phi, branch, tol);
  };
  auto F = [&](double r) { return trapped_condition_value(p, r, covector_at(r).xi[0], xi_phi); };
  const auto grid = detail::radial_bracket_grid(p, tol, 32);
  const auto brackets = roots::sign_changes(F, grid);
  if (brackets.empty()) return std::nullopt;
  const double r = roots::bracketed(F, brackets.front().first, brackets.front().second).x;
  TrappedSample out;
  out.point = {ChartId::BL_I, {0.0, r, theta, 0.0}};
  out.covector = covector_at(r);
  out.witness = is_in_K(p, out.point, out.covector, tol);
  if (!out.witness.in_K) return std::nullopt;
  return out;
}

/// Trapped data sitting exactly on the rotation axis, where xi_phi = 0 and the
/// trapping radius solves r^3 - 3M r^2 + a^2 r + a^2 M = 0.
inline std::optional<TrappedSample> sample_trapped_axis(const SpacetimeParams& p, double xi_1, double xi_2,
                                                        Branch branch, Patch pole = Patch::North,
                                                        const ToleranceConfig& tol = {}) {
  auto c = [&](double r) { return trapped_condition_value(p, r, 1.0, 0.0); };
  const auto grid = detail::radial_bracket_grid(p, tol, 32);
  const auto brackets = roots::sign_changes(c, grid);
  if (brackets.empty()) return std::nullopt;
  const double r = roots::bracketed(c, brackets.front().first, brackets.front().second).x;
  TrappedSample out;
  out.point = {ChartId::AxisStereo, {0.0, r, 0.0, 0.0}, pole};
  out.covector = complete_null_axis(p, out.point, 0.0, xi_1, xi_2, branch);
  out.witness = is_in_K(p, out.point, out.covector, tol);
  if (!out.witness.in_K) return std::nullopt;
  return out;
}

}  // namespace kerrflow
