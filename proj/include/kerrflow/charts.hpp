#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "kerrflow/error.hpp"
#include "kerrflow/hamiltonian.hpp"
#include "kerrflow/params.hpp"
#include "kerrflow/roots.hpp"

namespace kerrflow {

enum class ChartId { BL_I, KerrStar, StarKerr, Kruskal, Conformal, AxisStereo };

/// Disambiguates the two-sheeted charts: the conformal chart is built on
/// either the advanced (t*, phi*) or retarded (*t, *phi) slicing, and the
/// stereographic patch sits on either pole.
enum class Patch { None, Advanced, Retarded, North, South };

constexpr std::string_view to_string(ChartId c) {
  switch (c) {
    case ChartId::BL_I: return "BL_I";
    case ChartId::KerrStar: return "KerrStar";
    case ChartId::StarKerr: return "StarKerr";
    case ChartId::Kruskal: return "Kruskal";
    case ChartId::Conformal: return "Conformal";
    case ChartId::AxisStereo: return "AxisStereo";
  }
  return "?";
}

constexpr std::string_view to_string(Patch p) {
  switch (p) {
    case Patch::None: return "";
    case Patch::Advanced: return "advanced";
    case Patch::Retarded: return "retarded";
    case Patch::North: return "north";
    case Patch::South: return "south";
  }
  return "?";
}

/// Coordinate order per chart:
///   BL_I (t, r, theta, phi); KerrStar (t*, r, theta, phi*);
///   StarKerr (*t, r, theta, *phi); Kruskal (U, V, theta, phi#);
///   Conformal (t* or *t, w, theta, phi* or *phi); AxisStereo (t, r, x1, x2).
/// Angles of phi type are stored unwrapped.
struct ChartPoint {
  ChartId chart = ChartId::BL_I;
  std::array<double, 4> x{};
  Patch patch = Patch::None;
};

/// Components dual to the coordinates of the owning chart.
struct Covector {
  ChartId chart = ChartId::BL_I;
  std::array<double, 4> xi{};
  Patch patch = Patch::None;
};

// ---------------------------------------------------------------------------
// Radial shift functions: dx/dr = (r^2+a^2)/Delta, dLambda/dr = a/Delta,
// integration constants fixed at zero.

inline double time_shift(const SpacetimeParams& p, double r) {
  double x = r + p.half_inv_kappa_plus * std::log(std::abs(r - p.r_plus));
  if (p.half_inv_kappa_minus != 0.0) x += p.half_inv_kappa_minus * std::log(std::abs(r - p.r_minus));
  return x;
}

inline double angle_shift(const SpacetimeParams& p, double r) {
  if (p.a == 0.0) return 0.0;
  return p.a / (p.r_plus - p.r_minus) * std::log(std::abs((r - p.r_plus) / (r - p.r_minus)));
}

inline double time_shift_slope(const SpacetimeParams& p, double r) {
  return (r * r + p.a * p.a) / delta(p, r);
}

inline double angle_shift_slope(const SpacetimeParams& p, double r) { return p.a / delta(p, r); }

// ---------------------------------------------------------------------------
// Product-chart conversions. Boyer-Lindquist polar data is the hub.

struct PhaseCoords {
  std::array<double, 4> x{};
  std::array<double, 4> xi{};
};

namespace detail {

inline void require_exterior(const SpacetimeParams& p, double r) {
  if (!std::isfinite(r)) throw Error(ErrorCode::ChartDomain, "non-finite radius");
  if (r == p.r_plus) throw Error(ErrorCode::HorizonSingular, "r = r_plus in a Boyer-Lindquist map");
  if (r < p.r_plus) throw Error(ErrorCode::ChartDomain, "radius inside the outer horizon");
}

inline void require_polar(double theta) {
  if (!(theta > 0.0 && theta < std::numbers::pi)) {
    throw Error(ErrorCode::ChartDomain, "polar angle outside (0, pi)");
  }
}

inline PhaseCoords polar_to_stereo(const PhaseCoords& in, AngularChart target) {
  const double theta = in.x[2];
  const double phi = in.x[3];
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const bool north = c > 0.0;
  if (c == 0.0 || (target == AngularChart::StereoNorth) != north) {
    throw Error(ErrorCode::ChartDomain, "point outside the requested stereographic patch");
  }
  if (s == 0.0) throw Error(ErrorCode::ChartDomain, "polar coordinates undefined on the axis");
  PhaseCoords out = in;
  const double x1 = s * std::cos(phi);
  const double x2 = s * std::sin(phi);
  out.x[2] = x1;
  out.x[3] = x2;
  const double cot = c / s;
  const double det = cot * s * s;
  const double xt = in.xi[2];
  const double xp = in.xi[3];
  out.xi[2] = (x1 * xt - cot * x2 * xp) / det;
  out.xi[3] = (x2 * xt + cot * x1 * xp) / det;
  return out;
}

inline PhaseCoords stereo_to_polar(const PhaseCoords& in, AngularChart source) {
  const double x1 = in.x[2];
  const double x2 = in.x[3];
  const double s2 = x1 * x1 + x2 * x2;
  if (!(s2 < 1.0)) throw Error(ErrorCode::ChartDomain, "stereographic point outside the unit disc");
  if (s2 == 0.0) throw Error(ErrorCode::ChartDomain, "polar coordinates undefined on the axis");
  const double s = std::sqrt(s2);
  const double c = (source == AngularChart::StereoNorth ? 1.0 : -1.0) * std::sqrt(1.0 - s2);
  PhaseCoords out = in;
  out.x[2] = std::atan2(s, c);
  out.x[3] = std::atan2(x2, x1);
  const double cot = c / s;
  out.xi[2] = cot * (x1 * in.xi[2] + x2 * in.xi[3]);
  out.xi[3] = x1 * in.xi[3] - x2 * in.xi[2];
  return out;
}

}  // namespace detail

/// Boyer-Lindquist polar data to the polar version of a radial chart.
inline PhaseCoords radial_from_bl(const SpacetimeParams& p, RadialChart target, const PhaseCoords& bl) {
  const double r = bl.x[1];
  detail::require_exterior(p, r);
  if (target == RadialChart::BoyerLindquist) return bl;
  const bool advanced = target == RadialChart::KerrStar || target == RadialChart::ConformalAdvanced;
  const double sign = advanced ? 1.0 : -1.0;
  PhaseCoords out = bl;
  out.x[0] = bl.x[0] + sign * time_shift(p, r);
  out.x[3] = bl.x[3] + sign * angle_shift(p, r);
  const double eta_r = bl.xi[1] - sign * (time_shift_slope(p, r) * bl.xi[0] +
                                          angle_shift_slope(p, r) * bl.xi[3]);
  if (is_conformal(target)) {
    out.x[1] = 1.0 / r;
    out.xi[1] = -r * r * eta_r;
  } else {
    out.xi[1] = eta_r;
  }
  return out;
}

inline PhaseCoords radial_to_bl(const SpacetimeParams& p, RadialChart source, const PhaseCoords& in) {
  if (source == RadialChart::BoyerLindquist) {
    detail::require_exterior(p, in.x[1]);
    return in;
  }
  double r = in.x[1];
  double eta_r = in.xi[1];
  if (is_conformal(source)) {
    const double w = in.x[1];
    if (!(w > 0.0)) throw Error(ErrorCode::ChartDomain, "w <= 0 has no Boyer-Lindquist image");
    r = 1.0 / w;
    eta_r = -w * w * in.xi[1];
  }
  detail::require_exterior(p, r);
  const bool advanced = source == RadialChart::KerrStar || source == RadialChart::ConformalAdvanced;
  const double sign = advanced ? 1.0 : -1.0;
  PhaseCoords out = in;
  out.x[0] = in.x[0] - sign * time_shift(p, r);
  out.x[1] = r;
  out.x[3] = in.x[3] - sign * angle_shift(p, r);
  out.xi[1] = eta_r + sign * (time_shift_slope(p, r) * in.xi[0] + angle_shift_slope(p, r) * in.xi[3]);
  return out;
}

inline PhaseCoords to_boyer_lindquist(const SpacetimeParams& p, ProductChart chart, const PhaseCoords& in) {
  PhaseCoords polar = chart.angular == AngularChart::Polar ? in : detail::stereo_to_polar(in, chart.angular);
  return radial_to_bl(p, chart.radial, polar);
}

inline PhaseCoords from_boyer_lindquist(const SpacetimeParams& p, ProductChart chart, const PhaseCoords& bl) {
  detail::require_polar(bl.x[2]);
  PhaseCoords radial = radial_from_bl(p, chart.radial, bl);
  if (chart.angular == AngularChart::Polar) return radial;
  return detail::polar_to_stereo(radial, chart.angular);
}

/// Inverse of the implicit relation (r - r_plus)/(UV) = G(r) with
/// G(r) = exp(-2 kappa_plus r) (r - r_minus)^(r_minus/r_plus), for
/// r in (r_minus, inf).
inline double kruskal_log_G(const SpacetimeParams& p, double r) {
  double lg = -2.0 * p.kappa_plus * r;
  if (p.r_minus > 0.0) lg += p.r_minus / p.r_plus * std::log(r - p.r_minus);
  return lg;
}

namespace detail {

// Solves ln(r - r_plus) - ln G(r) = log_uv on block I in u = ln(r - r_plus).
inline double kruskal_r_exterior(const SpacetimeParams& p, double log_uv) {
  auto h = [&](double u) {
    const double r = p.r_plus + std::exp(u);
    return u - kruskal_log_G(p, r) - log_uv;
  };
  double lo = 0.0;
  for (double step = 1.0; h(lo) > 0.0; step *= 2.0) lo -= step;
  double hi = 0.0;
  for (int i = 0; h(hi) < 0.0; ++i) {
    if (i > 800) throw Error(ErrorCode::NoBracket, "UV too large to invert");
    hi += 1.0;
  }
  const auto root = roots::bracketed(h, lo, hi);
  return p.r_plus + std::exp(root.x);
}

inline double kruskal_r_interior(const SpacetimeParams& p, double log_neg_uv) {
  auto h = [&](double r) { return std::log(p.r_plus - r) - kruskal_log_G(p, r) - log_neg_uv; };
  const double span = p.r_plus - p.r_minus;
  const double lo = p.r_minus + span * 1e-15;
  const double hi = p.r_plus - span * 1e-15;
  const auto root = roots::bracketed(h, lo, hi);
  return root.x;
}

}  // namespace detail

inline double kruskal_r_from_UV(const SpacetimeParams& p, double uv) {
  if (!std::isfinite(uv)) throw Error(ErrorCode::NoBracket, "non-finite UV");
  if (uv == 0.0) return p.r_plus;
  if (uv > 0.0) return detail::kruskal_r_exterior(p, std::log(uv));
  return detail::kruskal_r_interior(p, std::log(-uv));
}

/// (r - r_plus) - UV G(r), evaluated in log space so large UV does not overflow.
inline double kruskal_residual(const SpacetimeParams& p, double uv, double r) {
  if (uv == 0.0) return r - p.r_plus;
  const double mag = std::exp(std::log(std::abs(uv)) + kruskal_log_G(p, r));
  return (r - p.r_plus) - (uv > 0.0 ? mag : -mag);
}

namespace detail {

inline PhaseCoords kruskal_from_bl(const SpacetimeParams& p, const PhaseCoords& bl) {
  const double t = bl.x[0];
  const double r = bl.x[1];
  require_exterior(p, r);
  const double X = time_shift(p, r);
  const double k = p.kappa_plus;
  PhaseCoords out;
  const double U = std::exp(-k * (t - X));
  const double V = std::exp(k * (t + X));
  out.x = {U, V, bl.x[2], bl.x[3] - p.Omega_H * t};
  const double A = bl.xi[1] / (k * time_shift_slope(p, r));
  const double B = (bl.xi[0] + p.Omega_H * bl.xi[3]) / k;
  out.xi = {(A - B) / (2.0 * U), (A + B) / (2.0 * V), bl.xi[2], bl.xi[3]};
  return out;
}

inline PhaseCoords kruskal_to_bl(const SpacetimeParams& p, const PhaseCoords& kr) {
  const double U = kr.x[0];
  const double V = kr.x[1];
  if (U == 0.0 || V == 0.0) throw Error(ErrorCode::HorizonSingular, "UV = 0 is a horizon");
  if (!(U > 0.0 && V > 0.0)) throw Error(ErrorCode::ChartDomain, "Kruskal point outside block I");
  const double k = p.kappa_plus;
  const double lu = std::log(U);
  const double lv = std::log(V);
  const double r = kruskal_r_exterior(p, lu + lv);
  const double t = (lv - lu) / (2.0 * k);
  PhaseCoords out;
  out.x = {t, r, kr.x[2], kr.x[3] + p.Omega_H * t};
  const double uxu = U * kr.xi[0];
  const double vxv = V * kr.xi[1];
  const double xi_phi = kr.xi[3];
  out.xi = {k * (vxv - uxu) - p.Omega_H * xi_phi, k * time_shift_slope(p, r) * (uxu + vxv), kr.xi[2],
            xi_phi};
  return out;
}

inline ProductChart product_of(ChartId id, Patch patch) {
  switch (id) {
    case ChartId::BL_I: return {RadialChart::BoyerLindquist, AngularChart::Polar};
    case ChartId::KerrStar: return {RadialChart::KerrStar, AngularChart::Polar};
    case ChartId::StarKerr: return {RadialChart::StarKerr, AngularChart::Polar};
    case ChartId::Conformal:
      return {patch == Patch::Retarded ? RadialChart::ConformalRetarded : RadialChart::ConformalAdvanced,
              AngularChart::Polar};
    case ChartId::AxisStereo:
      return {RadialChart::BoyerLindquist,
              patch == Patch::South ? AngularChart::StereoSouth : AngularChart::StereoNorth};
    case ChartId::Kruskal: break;
  }
  throw Error(ErrorCode::ChartDomain, "Kruskal chart has no product form");
}

inline void validate(const SpacetimeParams& p, const ChartPoint& pt) {
  const auto& x = pt.x;
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::ChartDomain, "non-finite coordinate");
  switch (pt.chart) {
    case ChartId::BL_I:
      require_exterior(p, x[1]);
      require_polar(x[2]);
      break;
    case ChartId::KerrStar:
    case ChartId::StarKerr:
      if (!(x[1] > p.r_minus)) throw Error(ErrorCode::ChartDomain, "shifted chart needs r > r_minus");
      require_polar(x[2]);
      break;
    case ChartId::Conformal:
      if (!(x[1] > 0.0 && x[1] <= 1.0 / p.r_plus)) {
        throw Error(ErrorCode::ChartDomain, "conformal chart needs 0 < w <= 1/r_plus");
      }
      require_polar(x[2]);
      break;
    case ChartId::AxisStereo:
      require_exterior(p, x[1]);
      if (!(x[2] * x[2] + x[3] * x[3] < 1.0)) {
        throw Error(ErrorCode::ChartDomain, "stereographic point needs x1^2 + x2^2 < 1");
      }
      break;
    case ChartId::Kruskal:
      break;
  }
}

inline Patch default_patch(ChartId target, const PhaseCoords& bl, Patch requested) {
  if (requested != Patch::None) return requested;
  if (target == ChartId::Conformal) return Patch::Advanced;
  if (target == ChartId::AxisStereo) return std::cos(bl.x[2]) >= 0.0 ? Patch::North : Patch::South;
  return Patch::None;
}

inline PhaseCoords phase_to_bl(const SpacetimeParams& p, ChartId id, Patch patch, const PhaseCoords& in) {
  if (id == ChartId::Kruskal) return kruskal_to_bl(p, in);
  return to_boyer_lindquist(p, product_of(id, patch), in);
}

inline PhaseCoords phase_from_bl(const SpacetimeParams& p, ChartId id, Patch patch, const PhaseCoords& bl) {
  if (id == ChartId::Kruskal) return kruskal_from_bl(p, bl);
  return from_boyer_lindquist(p, product_of(id, patch), bl);
}

}  // namespace detail

/// Re-expresses a block-I point in another chart of the atlas.
inline ChartPoint chart_map(const SpacetimeParams& p, const ChartPoint& pt, ChartId target,
                            Patch patch = Patch::None) {
  detail::validate(p, pt);
  if (target == pt.chart && (patch == Patch::None || patch == pt.patch)) return pt;
  const PhaseCoords bl = detail::phase_to_bl(p, pt.chart, pt.patch, {pt.x, {}});
  const Patch out_patch = detail::default_patch(target, bl, patch);
  const PhaseCoords out = detail::phase_from_bl(p, target, out_patch, bl);
  return {target, out.x, out_patch};
}

/// Transports a covector at pt into the target chart (inverse-transpose Jacobian).
inline Covector chart_map_cov(const SpacetimeParams& p, const ChartPoint& pt, const Covector& xi,
                              ChartId target, Patch patch = Patch::None) {
  detail::validate(p, pt);
  if (xi.chart != pt.chart) throw Error(ErrorCode::ChartDomain, "covector and point charts differ");
  if (target == pt.chart && (patch == Patch::None || patch == pt.patch)) return xi;
  const PhaseCoords bl = detail::phase_to_bl(p, pt.chart, pt.patch, {pt.x, xi.xi});
  const Patch out_patch = detail::default_patch(target, bl, patch);
  const PhaseCoords out = detail::phase_from_bl(p, target, out_patch, bl);
  return {target, out.xi, out_patch};
}

/// g^{-1}(xi, xi) at pt. Kruskal data is evaluated through its
/// Boyer-Lindquist image; every other chart uses its own closed form.
inline double inverse_quadform(const SpacetimeParams& p, const ChartPoint& pt, const Covector& xi) {
  detail::validate(p, pt);
  if (pt.chart == ChartId::Kruskal) {
    const PhaseCoords bl = detail::kruskal_to_bl(p, {pt.x, xi.xi});
    const ProductChart chart{};
    return hamiltonian(p, chart, bl.x, bl.xi) / rho_squared(p, chart, bl.x);
  }
  const ProductChart chart = detail::product_of(pt.chart, pt.patch);
  return hamiltonian(p, chart, pt.x, xi.xi) / rho_squared(p, chart, pt.x);
}

}  // namespace kerrflow
