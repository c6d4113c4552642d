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
#include "kerrflow/dual.hpp"
#include "kerrflow/error.hpp"
#include "kerrflow/hamiltonian.hpp"
#include "kerrflow/null_cone.hpp"
#include "kerrflow/params.hpp"
#include "kerrflow/tolerance.hpp"

namespace kerrflow {

/// Phase-space point of the G-flow. The chart is a product of a radial and an
/// angular chart; x and xi are components in that chart.
struct PhasePoint {
  ProductChart chart{};
  std::array<double, 4> x{};
  std::array<double, 4> xi{};
  double s = 0.0;
};

inline PhasePoint phase_point(const ChartPoint& x, const Covector& xi, double s = 0.0) {
  if (xi.chart != x.chart) throw Error(ErrorCode::ChartDomain, "covector and point charts differ");
  return {detail::product_of(x.chart, x.patch), x.x, xi.xi, s};
}

enum class Direction { Past, Future };
enum class Fate { HorizonPast, ScriPast, HorizonFuture, ScriFuture, Trapped, Undecided };
enum class EventTag { ChartSwitch, HorizonPad, Escape };
enum class StopReason { Horizon, Escape, Budget };

constexpr std::string_view to_string(Direction d) { return d == Direction::Past ? "past" : "future"; }

constexpr std::string_view to_string(Fate f) {
  switch (f) {
    case Fate::HorizonPast: return "HorizonPast";
    case Fate::ScriPast: return "ScriPast";
    case Fate::HorizonFuture: return "HorizonFuture";
    case Fate::ScriFuture: return "ScriFuture";
    case Fate::Trapped: return "Trapped";
    case Fate::Undecided: return "Undecided";
  }
  return "?";
}

constexpr std::string_view to_string(EventTag e) {
  switch (e) {
    case EventTag::ChartSwitch: return "chart-switch";
    case EventTag::HorizonPad: return "horizon-pad";
    case EventTag::Escape: return "escape";
  }
  return "?";
}

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Horizon: return "horizon";
    case StopReason::Escape: return "escape";
    case StopReason::Budget: return "budget";
  }
  return "?";
}

inline std::string chart_name(ProductChart c) {
  return std::string(to_string(c.radial)) + "/" + std::string(to_string(c.angular));
}

/// Lengths are in units of M. The parameter budget s_max refers to a covector
/// with |xi_t| + (|xi_phi| + sqrt(G_theta)) / 100 = 1; G is quadratic in xi, so
/// the budget is divided by that conserved quantity. Instability of the
/// trapped set grows like exp(c |xi_t| s), which this keeps uniform across
/// samples.
struct IntegratorOpts {
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  double s_max = 1.5;
  double r_escape = 100.0;
  double r_horizon_pad = 1e-3;
  std::size_t max_steps = 2'000'000;
  // radial distance from r_plus below which a horizon-regular chart is used
  double horizon_switch = 0.5;
  double w_min = 1e-4;
  // sin(theta) thresholds for entering and leaving the axis chart
  double axis_enter = 0.1;
  double axis_leave = 0.3;
  double event_tol = 1e-8;
  bool record = true;
};

inline void validate(const SpacetimeParams& p, const IntegratorOpts& o) {
  const bool positive = o.rel_tol > 0 && o.abs_tol > 0 && o.s_max > 0 && o.r_escape > 0 &&
                        o.r_horizon_pad > 0 && o.max_steps > 0 && o.horizon_switch > o.r_horizon_pad &&
                        o.w_min > 0 && o.event_tol > 0 && o.axis_enter > 0 && o.axis_leave > o.axis_enter &&
                        o.axis_leave < 0.9;
  if (!positive) throw Error(ErrorCode::TolFailure, "integrator options out of range");
  if (!(o.r_escape * p.M > 10.0 * p.r_plus)) throw Error(ErrorCode::TolFailure, "r_escape must exceed 10 r_plus");
}

struct TrajectoryEvent {
  double s;
  EventTag tag;
  ProductChart from;
  ProductChart to;
};

// Drifts are relative to S = |xi_t| + |xi_phi| + sqrt(G_theta) at the start.
struct Drifts {
  double xi_t = 0.0;
  double xi_phi = 0.0;
  double carter = 0.0;    // G_theta, relative to max(G_theta(0), S^2)
  double residual = 0.0;  // max relative |G|
};

struct Trajectory {
  std::vector<PhasePoint> samples;
  std::vector<TrajectoryEvent> events;
  PhasePoint final_state;
  StopReason stop = StopReason::Budget;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  Drifts drift;
};

// ---------------------------------------------------------------------------

namespace detail {

using State = std::array<double, 8>;

inline State pack(const PhasePoint& q) {
  return {q.x[0], q.x[1], q.x[2], q.x[3], q.xi[0], q.xi[1], q.xi[2], q.xi[3]};
}

inline void unpack(const State& y, PhasePoint& q) {
  for (int i = 0; i < 4; ++i) {
    q.x[i] = y[i];
    q.xi[i] = y[4 + i];
  }
}

inline State gradient_flow(const SpacetimeParams& p, ProductChart chart, const State& y) {
  using D8 = Dual<8>;
  std::array<D8, 4> x, xi;
  for (std::size_t i = 0; i < 4; ++i) {
    x[i] = D8::variable(y[i], i);
    xi[i] = D8::variable(y[4 + i], 4 + i);
  }
  const D8 G = hamiltonian(p, chart, x, xi);
  State f;
  for (std::size_t i = 0; i < 4; ++i) {
    f[i] = G.d[4 + i];
    f[4 + i] = -G.d[i];
  }
  return f;
}

inline double bl_radius(ProductChart chart, const std::array<double, 4>& x) {
  return is_conformal(chart.radial) ? 1.0 / x[1] : x[1];
}

inline double axial_component(ProductChart chart, const std::array<double, 4>& x, const std::array<double, 4>& xi) {
  return chart.angular == AngularChart::Polar ? xi[3] : x[2] * xi[3] - x[3] * xi[2];
}

inline double sin_theta(ProductChart chart, const std::array<double, 4>& x) {
  if (chart.angular == AngularChart::Polar) return std::sin(x[2]);
  return std::sqrt(x[2] * x[2] + x[3] * x[3]);
}

inline bool in_domain(const SpacetimeParams& p, ProductChart chart, const State& y) {
  for (double v : y)
    if (!std::isfinite(v)) return false;
  switch (chart.radial) {
    case RadialChart::BoyerLindquist:
      if (!(y[1] > p.r_plus)) return false;
      break;
    case RadialChart::KerrStar:
    case RadialChart::StarKerr:
      if (!(y[1] > 0.5 * (p.r_plus + p.r_minus))) return false;
      break;
    case RadialChart::ConformalAdvanced:
    case RadialChart::ConformalRetarded:
      if (!(y[1] > 0.0 && y[1] < 1.0 / p.r_plus)) return false;
      break;
  }
  if (chart.angular == AngularChart::Polar) {
    if (!(y[2] > 0.0 && y[2] < std::numbers::pi) || std::sin(y[2]) < 1e-3) return false;
  } else if (!(y[2] * y[2] + y[3] * y[3] < 0.8)) {
    return false;
  }
  return true;
}

// Rotation of the stereographic plane, the form a shift of phi takes there.
inline void rotate_plane(std::array<double, 4>& x, std::array<double, 4>& xi, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double x1 = x[2], x2 = x[3], k1 = xi[2], k2 = xi[3];
  x[2] = c * x1 - s * x2;
  x[3] = s * x1 + c * x2;
  xi[2] = c * k1 - s * k2;
  xi[3] = s * k1 + c * k2;
}

inline double radial_sign(RadialChart c) {
  switch (c) {
    case RadialChart::KerrStar:
    case RadialChart::ConformalAdvanced: return 1.0;
    case RadialChart::StarKerr:
    case RadialChart::ConformalRetarded: return -1.0;
    case RadialChart::BoyerLindquist: break;
  }
  return 0.0;
}

inline void shift_angle(ProductChart chart, PhaseCoords& c, double amount) {
  if (chart.angular == AngularChart::Polar) {
    c.x[3] += amount;
  } else {
    rotate_plane(c.x, c.xi, amount);
  }
}

/// Changes only the radial chart; the angular chart is carried along.
inline PhaseCoords switch_radial(const SpacetimeParams& p, ProductChart from, RadialChart to, PhaseCoords c) {
  if (from.radial == to) return c;
  // to Boyer-Lindquist radial data
  if (is_conformal(from.radial)) {
    const double w = c.x[1];
    c.x[1] = 1.0 / w;
    c.xi[1] = -w * w * c.xi[1];
  }
  double r = c.x[1];
  require_exterior(p, r);
  double sign = radial_sign(from.radial);
  if (sign != 0.0) {
    c.x[0] -= sign * time_shift(p, r);
    shift_angle(from, c, -sign * angle_shift(p, r));
    const double L = axial_component(from, c.x, c.xi);
    c.xi[1] += sign * (time_shift_slope(p, r) * c.xi[0] + angle_shift_slope(p, r) * L);
  }
  // to the target chart
  sign = radial_sign(to);
  if (sign != 0.0) {
    const double L = axial_component(from, c.x, c.xi);
    c.xi[1] -= sign * (time_shift_slope(p, r) * c.xi[0] + angle_shift_slope(p, r) * L);
    c.x[0] += sign * time_shift(p, r);
    shift_angle(from, c, sign * angle_shift(p, r));
  }
  if (is_conformal(to)) {
    c.x[1] = 1.0 / r;
    c.xi[1] = -r * r * c.xi[1];
  }
  return c;
}

inline PhaseCoords switch_angular(AngularChart from, AngularChart to, const PhaseCoords& c) {
  if (from == to) return c;
  if (to == AngularChart::Polar) return stereo_to_polar(c, from);
  if (from == AngularChart::Polar) return polar_to_stereo(c, to);
  return polar_to_stereo(stereo_to_polar(c, from), to);
}

inline PhasePoint switch_chart(const SpacetimeParams& p, const PhasePoint& q, ProductChart to) {
  PhaseCoords c{q.x, q.xi};
  c = switch_radial(p, q.chart, to.radial, c);
  c = switch_angular(q.chart.angular, to.angular, c);
  return {to, c.x, c.xi, q.s};
}

struct StepOut {
  State y;
  State k7;
  double err;
  bool ok;
};

// Dormand-Prince 5(4), advancing y by h along sigma * (Hamiltonian vector field).
inline StepOut dp_step(const SpacetimeParams& p, ProductChart chart, double sigma, const State& y, const State& k1,
                       double h, const IntegratorOpts& o) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  StepOut out{};
  out.ok = false;
  auto f = [&](const State& s) {
    State d = gradient_flow(p, chart, s);
    for (double& v : d) v *= sigma;
    return d;
  };
  auto stage = [&](auto&&... terms) {
    State s = y;
    for (std::size_t i = 0; i < 8; ++i) s[i] += h * (0.0 + ... + (terms.first * terms.second[i]));
    return s;
  };
  using P = std::pair<double, const State&>;
  State y2 = stage(P{a21, k1});
  if (!in_domain(p, chart, y2)) return out;
  const State k2 = f(y2);
  State y3 = stage(P{a31, k1}, P{a32, k2});
  if (!in_domain(p, chart, y3)) return out;
  const State k3 = f(y3);
  State y4 = stage(P{a41, k1}, P{a42, k2}, P{a43, k3});
  if (!in_domain(p, chart, y4)) return out;
  const State k4 = f(y4);
  State y5 = stage(P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
  if (!in_domain(p, chart, y5)) return out;
  const State k5 = f(y5);
  State y6 = stage(P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
  if (!in_domain(p, chart, y6)) return out;
  const State k6 = f(y6);
  out.y = stage(P{b1, k1}, P{b3, k3}, P{b4, k4}, P{b5, k5}, P{b6, k6});
  if (!in_domain(p, chart, out.y)) return out;
  out.k7 = f(out.y);
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y[i]), std::abs(out.y[i]));
    acc += (e / sc) * (e / sc);
  }
  out.err = std::sqrt(acc / 8.0);
  out.ok = std::isfinite(out.err);
  return out;
}

inline double carter_value(const SpacetimeParams& p, const PhasePoint& q) {
  return hamiltonian_terms(p, q.chart, q.x, q.xi).angular;
}

}  // namespace detail

/// (dx/ds, dxi/ds) = (dG/dxi, -dG/dx) for a point in a Boyer-Lindquist
/// radial chart, polar or stereographic.
inline std::array<double, 8> hamilton_rhs(const SpacetimeParams& p, const PhasePoint& q,
                                          const ToleranceConfig& tol = {}) {
  if (q.chart.radial != RadialChart::BoyerLindquist) {
    throw Error(ErrorCode::ChartDomain, "hamilton_rhs expects Boyer-Lindquist radial data");
  }
  detail::require_exterior(p, q.x[1]);
  if (q.chart.angular == AngularChart::Polar && std::abs(std::sin(q.x[2])) < tol.axis_threshold) {
    throw Error(ErrorCode::OnAxisInPolarChart, "polar chart degenerates on the axis; switch to stereo");
  }
  return detail::gradient_flow(p, q.chart, detail::pack(q));
}

inline double relative_residual(const SpacetimeParams& p, const PhasePoint& q) {
  const double scale = hamiltonian_scale(p, q.chart, q.x, q.xi);
  return scale > 0.0 ? std::abs(hamiltonian(p, q.chart, q.x, q.xi)) / scale : 0.0;
}

/// BL covector norm used to normalize budgets.
inline double covector_norm_bl(const SpacetimeParams& p, const PhasePoint& q) {
  const PhasePoint bl = detail::switch_chart(p, q, {RadialChart::BoyerLindquist, q.chart.angular});
  const double axial = detail::axial_component(bl.chart, bl.x, bl.xi);
  if (bl.chart.angular == AngularChart::Polar) {
    return std::sqrt(bl.xi[0] * bl.xi[0] + bl.xi[1] * bl.xi[1] + bl.xi[2] * bl.xi[2] + axial * axial);
  }
  // on the axis the angular momentum components (xi_1, xi_2) play the role of (xi_theta, xi_phi)
  return std::sqrt(bl.xi[0] * bl.xi[0] + bl.xi[1] * bl.xi[1] + bl.xi[2] * bl.xi[2] + bl.xi[3] * bl.xi[3]);
}

/// +1 for a future-pointing covector (xi(-grad t) > 0), -1 for a past-pointing one.
inline double orientation_sign(const SpacetimeParams& p, const PhasePoint& q, const ToleranceConfig& tol = {}) {
  const PhasePoint bl = detail::switch_chart(p, q, {RadialChart::BoyerLindquist, q.chart.angular});
  const ChartId id = bl.chart.angular == AngularChart::Polar ? ChartId::BL_I : ChartId::AxisStereo;
  const Patch patch = bl.chart.angular == AngularChart::StereoSouth ? Patch::South
                      : id == ChartId::AxisStereo                   ? Patch::North
                                                                    : Patch::None;
  const auto o = orientation(p, ChartPoint{id, bl.x, patch}, Covector{id, bl.xi, patch}, tol);
  return o == Orientation::Future ? 1.0 : -1.0;
}

namespace detail {

// A future-pointing covector flows to the past as s increases.
inline double flow_sign(const SpacetimeParams& p, const PhasePoint& q, Direction dir, const ToleranceConfig& tol) {
  const double o = orientation_sign(p, q, tol);
  return dir == Direction::Past ? o : -o;
}

inline RadialChart horizon_chart(Direction dir) {
  return dir == Direction::Past ? RadialChart::StarKerr : RadialChart::KerrStar;
}

inline RadialChart scri_chart(Direction dir) {
  return dir == Direction::Past ? RadialChart::ConformalAdvanced : RadialChart::ConformalRetarded;
}

inline std::optional<ProductChart> preferred_chart(const SpacetimeParams& p, const PhasePoint& q, Direction dir,
                                                   const IntegratorOpts& o) {
  ProductChart next = q.chart;
  const double r = bl_radius(q.chart, q.x);
  const double M = p.M;
  switch (q.chart.radial) {
    case RadialChart::BoyerLindquist:
      if (r < p.r_plus + o.horizon_switch * M) next.radial = horizon_chart(dir);
      else if (r > 0.5 * o.r_escape * M) next.radial = scri_chart(dir);
      break;
    case RadialChart::KerrStar:
    case RadialChart::StarKerr:
      if (r > p.r_plus + 2.0 * o.horizon_switch * M) next.radial = RadialChart::BoyerLindquist;
      break;
    case RadialChart::ConformalAdvanced:
    case RadialChart::ConformalRetarded:
      if (r < 0.25 * o.r_escape * M) next.radial = RadialChart::BoyerLindquist;
      break;
  }
  const double s = sin_theta(q.chart, q.x);
  if (q.chart.angular == AngularChart::Polar) {
    if (s < o.axis_enter) {
      next.angular = std::cos(q.x[2]) > 0.0 ? AngularChart::StereoNorth : AngularChart::StereoSouth;
    }
  } else if (s > o.axis_leave) {
    next.angular = AngularChart::Polar;
  }
  if (next == q.chart) return std::nullopt;
  return next;
}

// Signed terminal-event function in the current chart; crossing to <= 0 stops the run.
inline std::optional<double> terminal_event(const SpacetimeParams& p, ProductChart chart, const State& y,
                                            Direction dir, const IntegratorOpts& o) {
  if (chart.radial == horizon_chart(dir)) return y[1] - (p.r_plus + o.r_horizon_pad * p.M);
  if (chart.radial == scri_chart(dir)) return y[1] - o.w_min / p.M;
  return std::nullopt;
}

}  // namespace detail

/// Adaptive integration of the G-flow in the requested time direction with
/// chart switching and terminal events at the horizon pad and at w_min.
inline Trajectory integrate(const SpacetimeParams& p, const PhasePoint& q0, Direction dir,
                            const IntegratorOpts& opts = {}, const ToleranceConfig& tol = {}) {
  validate(p, opts);
  const double res0 = relative_residual(p, q0);
  if (!(res0 <= tol.null_tol)) {
    throw Error(ErrorCode::NotNull, "initial data off the null shell (relative residual " + std::to_string(res0) + ")");
  }
  const double sigma = detail::flow_sign(p, q0, dir, tol);
  const double xi_t0 = q0.xi[0];
  const double L0 = detail::axial_component(q0.chart, q0.x, q0.xi);
  const double C0 = detail::carter_value(p, q0);
  const double angular = std::abs(L0) + std::sqrt(std::max(0.0, C0));
  const double tau_max = opts.s_max / (std::abs(xi_t0) + 0.01 * angular);
  // scale for drifts and step sizes, built from conserved quantities
  const double norm = std::abs(xi_t0) + angular;

  Trajectory traj;
  PhasePoint q = q0;
  const double C_scale = std::max(std::abs(C0), norm * norm);
  auto track = [&](const PhasePoint& s) {
    const double r = detail::bl_radius(s.chart, s.x);
    traj.r_min = std::min(traj.r_min, r);
    traj.r_max = std::max(traj.r_max, r);
    auto& d = traj.drift;
    d.xi_t = std::max(d.xi_t, std::abs(s.xi[0] - xi_t0) / norm);
    d.xi_phi = std::max(d.xi_phi, std::abs(detail::axial_component(s.chart, s.x, s.xi) - L0) / norm);
    d.carter = std::max(d.carter, std::abs(detail::carter_value(p, s) - C0) / C_scale);
    d.residual = std::max(d.residual, relative_residual(p, s));
    if (opts.record) traj.samples.push_back(s);
  };
  traj.r_min = traj.r_max = detail::bl_radius(q.chart, q.x);

  auto settle_chart = [&]() {
    for (int guard = 0; guard < 3; ++guard) {
      const auto next = detail::preferred_chart(p, q, dir, opts);
      if (!next) return;
      const ProductChart from = q.chart;
      q = detail::switch_chart(p, q, *next);
      traj.events.push_back({q.s, EventTag::ChartSwitch, from, q.chart});
    }
  };
  settle_chart();
  track(q);

  auto finish_if_event = [&](const detail::State& y) -> bool {
    const auto g = detail::terminal_event(p, q.chart, y, dir, opts);
    return g && *g <= 0.0;
  };
  {
    const detail::State y = detail::pack(q);
    if (finish_if_event(y)) {
      traj.stop = detail::terminal_event(p, q.chart, y, dir, opts) && q.chart.radial == detail::horizon_chart(dir)
                      ? StopReason::Horizon
                      : StopReason::Escape;
      traj.events.push_back({q.s, traj.stop == StopReason::Horizon ? EventTag::HorizonPad : EventTag::Escape,
                             q.chart, q.chart});
      traj.final_state = q;
      return traj;
    }
  }

  double tau = 0.0;
  double h = std::min(1e-3 * tau_max, 1e-2 / norm);
  double err_prev = 1e-4;
  detail::State y = detail::pack(q);
  detail::State k1 = detail::gradient_flow(p, q.chart, y);
  for (double& v : k1) v *= sigma;
  const double h_floor = 1e-14 * tau_max;

  while (tau < tau_max) {
    if (traj.accepted + traj.rejected >= opts.max_steps) {
      throw Error(ErrorCode::StepBudgetExceeded, "step budget exhausted at s = " + std::to_string(q.s));
    }
    const bool last = tau + h >= tau_max;
    const double h_try = last ? tau_max - tau : h;
    auto out = detail::dp_step(p, q.chart, sigma, y, k1, h_try, opts);
    if (!out.ok || out.err > 1.0) {
      ++traj.rejected;
      h = out.ok ? h_try * std::max(0.2, 0.9 * std::pow(out.err, -0.2)) : 0.5 * h_try;
      if (h < h_floor) throw Error(ErrorCode::TolFailure, "step size underflow at s = " + std::to_string(q.s));
      continue;
    }
    ++traj.accepted;
    // terminal event inside this step: bisect on the step length
    if (finish_if_event(out.y)) {
      double lo = 0.0, hi = h_try;
      detail::State y_hi = out.y;
      while (hi - lo > opts.event_tol) {
        const double mid = 0.5 * (lo + hi);
        const auto m = detail::dp_step(p, q.chart, sigma, y, k1, mid, opts);
        if (m.ok && !finish_if_event(m.y)) {
          lo = mid;
        } else {
          hi = mid;
          if (m.ok) y_hi = m.y;
        }
      }
      tau += hi;
      detail::unpack(y_hi, q);
      q.s = q0.s + sigma * tau;
      track(q);
      traj.stop = q.chart.radial == detail::horizon_chart(dir) ? StopReason::Horizon : StopReason::Escape;
      traj.events.push_back({q.s, traj.stop == StopReason::Horizon ? EventTag::HorizonPad : EventTag::Escape,
                             q.chart, q.chart});
      traj.final_state = q;
      return traj;
    }
    tau = last ? tau_max : tau + h_try;
    y = out.y;
    k1 = out.k7;
    detail::unpack(y, q);
    q.s = q0.s + sigma * tau;
    // PI step-size control
    const double e = std::max(out.err, 1e-10);
    h = h_try * std::clamp(0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0), 0.2, 5.0);
    err_prev = e;
    const ProductChart before = q.chart;
    settle_chart();
    if (!(q.chart == before)) {
      y = detail::pack(q);
      k1 = detail::gradient_flow(p, q.chart, y);
      for (double& v : k1) v *= sigma;
    }
    track(q);
  }
  traj.stop = StopReason::Budget;
  traj.final_state = q;
  return traj;
}

/// Flow by a signed parameter span in the current chart, without events or
/// chart switches; used for short arcs.
inline PhasePoint flow_by(const SpacetimeParams& p, const PhasePoint& q0, double ds, const IntegratorOpts& opts = {}) {
  const double sigma = ds < 0.0 ? -1.0 : 1.0;
  const double span = std::abs(ds);
  detail::State y = detail::pack(q0);
  detail::State k1 = detail::gradient_flow(p, q0.chart, y);
  for (double& v : k1) v *= sigma;
  double tau = 0.0;
  double h = std::min(span, 1e-3);
  double err_prev = 1e-4;
  std::size_t steps = 0;
  while (tau < span) {
    if (++steps > opts.max_steps) throw Error(ErrorCode::StepBudgetExceeded, "flow_by step budget exhausted");
    const bool last = tau + h >= span;
    const double h_try = last ? span - tau : h;
    auto out = detail::dp_step(p, q0.chart, sigma, y, k1, h_try, opts);
    if (!out.ok || out.err > 1.0) {
      h = out.ok ? h_try * std::max(0.2, 0.9 * std::pow(out.err, -0.2)) : 0.5 * h_try;
      if (h < 1e-14 * span) throw Error(ErrorCode::TolFailure, "step size underflow in flow_by");
      continue;
    }
    tau = last ? span : tau + h_try;
    y = out.y;
    k1 = out.k7;
    const double e = std::max(out.err, 1e-10);
    h = h_try * std::clamp(0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0), 0.2, 5.0);
    err_prev = e;
  }
  PhasePoint q = q0;
  detail::unpack(y, q);
  q.s = q0.s + ds;
  return q;
}

struct FateReport {
  Fate fate = Fate::Undecided;
  PhasePoint exit_state;
  Drifts drift;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t steps = 0;
  std::string diagnostic;
};

/// Fate read off a finished run. Trapped means the whole parameter budget
/// was spent with r in [r_plus + 2 pad, r_escape / 2].
inline Fate fate_of(const SpacetimeParams& p, const Trajectory& tr, Direction dir, const IntegratorOpts& o) {
  const bool past = dir == Direction::Past;
  switch (tr.stop) {
    case StopReason::Horizon: return past ? Fate::HorizonPast : Fate::HorizonFuture;
    case StopReason::Escape: return past ? Fate::ScriPast : Fate::ScriFuture;
    case StopReason::Budget: break;
  }
  const double r0 = p.r_plus + 2.0 * o.r_horizon_pad * p.M;
  const double R0 = 0.5 * o.r_escape * p.M;
  return tr.r_min >= r0 && tr.r_max <= R0 ? Fate::Trapped : Fate::Undecided;
}

/// Fate of the bicharacteristic through q0 in one time direction; integrator
/// errors become Undecided with the error in the diagnostic.
inline FateReport classify_fate(const SpacetimeParams& p, const PhasePoint& q0, Direction dir,
                                const IntegratorOpts& opts = {}, const ToleranceConfig& tol = {}) {
  FateReport rep;
  rep.exit_state = q0;
  IntegratorOpts o = opts;
  o.record = false;
  try {
    const Trajectory tr = integrate(p, q0, dir, o, tol);
    rep.exit_state = tr.final_state;
    rep.drift = tr.drift;
    rep.r_min = tr.r_min;
    rep.r_max = tr.r_max;
    rep.steps = tr.accepted;
    rep.fate = fate_of(p, tr, dir, o);
    if (rep.fate == Fate::Undecided) rep.diagnostic = "budget exhausted outside the trapping band";
  } catch (const Error& e) {
    rep.fate = Fate::Undecided;
    rep.diagnostic = std::string(to_string(e.code())) + ": " + e.what();
  }
  return rep;
}

/// (t, phi, xi_t, xi_phi) -> (-t, -phi, -xi_t, -xi_phi); maps bicharacteristics
/// to bicharacteristics and exchanges past and future. Only defined in
/// Boyer-Lindquist radial charts; it exchanges the advanced and retarded ones.
inline PhasePoint time_reflect(const PhasePoint& q) {
  if (q.chart.radial != RadialChart::BoyerLindquist) {
    throw Error(ErrorCode::ChartDomain, "time reflection needs Boyer-Lindquist radial data");
  }
  // in the stereographic plane phi -> -phi is x2 -> -x2, which acts on the
  // fourth components exactly as in the polar chart
  PhasePoint out = q;
  out.x[0] = -q.x[0];
  out.xi[0] = -q.xi[0];
  out.x[3] = -q.x[3];
  out.xi[3] = -q.xi[3];
  return out;
}

enum class Principal { Ingoing, Outgoing };

/// Future-pointing principal null covector with xi_t = 1: xi_theta = 0,
/// xi_phi = -a sin^2 theta, xi_r = +-rho^2 / Delta.
inline PhasePoint principal_null(const SpacetimeParams& p, double r, double theta, Principal kind) {
  detail::require_exterior(p, r);
  detail::require_polar(theta);
  const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
  const double s = std::sin(theta);
  const double xi_r = (kind == Principal::Ingoing ? 1.0 : -1.0) * rho2 / D;
  return {ProductChart{}, {0.0, r, theta, 0.0}, {1.0, xi_r, 0.0, -p.a * s * s}, 0.0};
}

}  // namespace kerrflow
