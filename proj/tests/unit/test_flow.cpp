#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/expect_error.hpp"
#include "kerrflow/campaigns.hpp"
#include "kerrflow/flow.hpp"
#include "kerrflow/trapping.hpp"

using namespace kerrflow;
using std::numbers::pi;
using testing_support::code_of;

namespace {

ChartPoint bl(double r, double theta, double phi = 0.0) { return {ChartId::BL_I, {0.0, r, theta, phi}}; }

/// Random null phase point in Boyer-Lindquist polar coordinates.
PhasePoint random_null(const SpacetimeParams& p, SampleRng& rng, double r_lo, double r_hi, double sin_min = 1e-3) {
  const double r = p.r_plus + std::exp(rng.uniform(std::log(r_lo), std::log(r_hi)));
  double theta = rng.polar_angle();
  while (std::sin(theta) < sin_min) theta = rng.polar_angle();
  double x, y, z;
  rng.unit_sphere(x, y, z);
  const auto pt = bl(r, theta, rng.uniform(-pi, pi));
  const auto xi = complete_null(p, pt, x, y, z, rng.coin() ? Branch::Plus : Branch::Minus);
  return phase_point(pt, xi);
}

double conserved_L(const PhasePoint& q) { return detail::axial_component(q.chart, q.x, q.xi); }

Fate mirror(Fate f) {
  switch (f) {
    case Fate::HorizonPast: return Fate::HorizonFuture;
    case Fate::HorizonFuture: return Fate::HorizonPast;
    case Fate::ScriPast: return Fate::ScriFuture;
    case Fate::ScriFuture: return Fate::ScriPast;
    default: return f;
  }
}

}  // namespace

TEST(HamiltonRhs, CyclicCoordinatesAndRadialVelocity) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u01(0, 1), uxi(-1, 1), ua(-0.99, 0.99);
  for (int i = 0; i < 2000; ++i) {
    const auto p = derive_constants(1.0, ua(rng));
    const double r = p.r_plus + 0.01 + 30 * u01(rng);
    const double theta = 0.05 + (pi - 0.1) * u01(rng);
    const PhasePoint q{{}, {0.0, r, theta, 0.0}, {uxi(rng), uxi(rng), uxi(rng), uxi(rng)}, 0.0};
    const auto f = hamilton_rhs(p, q);
    EXPECT_EQ(f[4], 0.0);
    EXPECT_EQ(f[7], 0.0);
    EXPECT_NEAR(f[1], 2.0 * delta(p, r) * q.xi[1], 1e-13 * std::abs(f[1]) + 1e-15);
    // the remaining components against central differences of G
    for (int k = 0; k < 8; ++k) {
      if (k == 0 || k == 3 || k == 1) continue;
      auto shifted = [&](double hsign) {
        PhasePoint s = q;
        const double h = 1e-6 * std::max(1.0, std::abs(k < 4 ? s.x[k] : s.xi[k - 4]));
        (k < 4 ? s.x[k] : s.xi[k - 4]) += hsign * h;
        return std::pair{hamiltonian(p, s.chart, s.x, s.xi), h};
      };
      const auto [gp, h] = shifted(1.0);
      const auto [gm, h2] = shifted(-1.0);
      const double fd = (gp - gm) / (2 * h);
      const double want = k < 4 ? -fd : fd;
      const int slot = k < 4 ? 4 + k : k - 4;
      EXPECT_NEAR(f[slot], want, 1e-5 * (1.0 + std::abs(want))) << "k=" << k;
    }
  }
}

TEST(HamiltonRhs, StationaryAtTrappedPoint) {
  const auto p = derive_constants(1.0, 0.8);
  const auto s = sample_trapped(p, 1.1, 0.3, 0.9, Branch::Minus);
  ASSERT_TRUE(s.has_value());
  const auto f = hamilton_rhs(p, phase_point(s->point, s->covector));
  const double scale = std::abs(f[0]) + std::abs(f[3]);
  EXPECT_LT(std::abs(f[1]), 1e-12 * scale);
  EXPECT_LT(std::abs(f[5]), 1e-9 * scale);
}

TEST(HamiltonRhs, StereoConservesAxialMomentum) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u01(0, 1), uxi(-1, 1), ux(-0.6, 0.6), ua(-0.99, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const auto p = derive_constants(1.0, ua(rng));
    const PhasePoint q{{RadialChart::BoyerLindquist, i % 2 ? AngularChart::StereoNorth : AngularChart::StereoSouth},
                       {0.0, p.r_plus + 0.01 + 20 * u01(rng), ux(rng), ux(rng)},
                       {uxi(rng), uxi(rng), uxi(rng), uxi(rng)},
                       0.0};
    const auto f = hamilton_rhs(p, q);
    EXPECT_EQ(f[4], 0.0);
    const double dL = f[2] * q.xi[3] + q.x[2] * f[7] - f[3] * q.xi[2] - q.x[3] * f[6];
    EXPECT_NEAR(dL, 0.0, 1e-13 * (1.0 + std::abs(f[2]) + std::abs(f[3]) + std::abs(f[6]) + std::abs(f[7])));
  }
}

TEST(HamiltonRhs, Errors) {
  const auto p = derive_constants(1.0, 0.5);
  const PhasePoint axis{{}, {0.0, 3.0, 1e-8, 0.0}, {1, 0, 0, 0}, 0.0};
  EXPECT_EQ(code_of([&] { hamilton_rhs(p, axis); }), ErrorCode::OnAxisInPolarChart);
  const PhasePoint ks{{RadialChart::KerrStar, AngularChart::Polar}, {0.0, 3.0, 1.0, 0.0}, {1, 0, 0, 0}, 0.0};
  EXPECT_EQ(code_of([&] { hamilton_rhs(p, ks); }), ErrorCode::ChartDomain);
}

TEST(Integrate, RejectsBadInput) {
  const auto p = derive_constants(1.0, 0.5);
  const PhasePoint q = principal_null(p, 5.0, 1.0, Principal::Ingoing);
  PhasePoint off = q;
  off.xi[1] *= 1.1;
  EXPECT_EQ(code_of([&] { integrate(p, off, Direction::Past); }), ErrorCode::NotNull);
  IntegratorOpts o;
  o.r_escape = 10.0;
  EXPECT_EQ(code_of([&] { integrate(p, q, Direction::Past, o); }), ErrorCode::TolFailure);
  o = {};
  o.rel_tol = 0.0;
  EXPECT_EQ(code_of([&] { integrate(p, q, Direction::Past, o); }), ErrorCode::TolFailure);
  o = {};
  o.max_steps = 5;
  EXPECT_EQ(code_of([&] { integrate(p, q, Direction::Past, o); }), ErrorCode::StepBudgetExceeded);
}

TEST(Integrate, PrincipalNullFates) {
  for (double a : {0.0, 0.5, 0.9, 0.999}) {
    const auto p = derive_constants(1.0, a);
    for (double dr : {0.01, 1.0, 8.0, 38.0}) {
      for (double theta : {0.3, pi / 2, 2.5}) {
        const double r = p.r_plus + dr;
        for (Principal kind : {Principal::Ingoing, Principal::Outgoing}) {
          const auto q = principal_null(p, r, theta, kind);
          EXPECT_EQ(orientation_sign(p, q), 1.0);
          for (Direction dir : {Direction::Past, Direction::Future}) {
            const auto tr = integrate(p, q, dir);
            // ingoing light came in from past null infinity and falls into the future horizon
            const bool towards_horizon = (kind == Principal::Ingoing) == (dir == Direction::Future);
            EXPECT_EQ(tr.stop, towards_horizon ? StopReason::Horizon : StopReason::Escape)
                << "a=" << a << " r=" << r << " theta=" << theta;
            double prev = detail::bl_radius(tr.samples.front().chart, tr.samples.front().x);
            for (std::size_t i = 1; i < tr.samples.size(); ++i) {
              const double rr = detail::bl_radius(tr.samples[i].chart, tr.samples[i].x);
              if (towards_horizon) {
                EXPECT_LT(rr, prev);
              } else {
                EXPECT_GT(rr, prev);
              }
              prev = rr;
            }
            EXPECT_LT(tr.drift.carter, 1e-9);
            EXPECT_LT(tr.drift.residual, 1e-8) << "a=" << a << " r=" << r << " theta=" << theta << " kind=" << int(kind) << " dir=" << int(dir);
            const auto f = classify_fate(p, q, dir);
            const Fate want = dir == Direction::Past
                                  ? (kind == Principal::Ingoing ? Fate::ScriPast : Fate::HorizonPast)
                                  : (kind == Principal::Ingoing ? Fate::HorizonFuture : Fate::ScriFuture);
            EXPECT_EQ(f.fate, want) << f.diagnostic;
          }
        }
      }
    }
  }
}

TEST(Integrate, EventsLandOnThresholds) {
  const auto p = derive_constants(1.0, 0.7);
  IntegratorOpts o;
  const auto in = integrate(p, principal_null(p, 6.0, 1.2, Principal::Outgoing), Direction::Past, o);
  ASSERT_EQ(in.stop, StopReason::Horizon);
  EXPECT_EQ(in.final_state.chart.radial, RadialChart::StarKerr);
  const double dr = detail::gradient_flow(p, in.final_state.chart, detail::pack(in.final_state))[1];
  EXPECT_NEAR(in.final_state.x[1], p.r_plus + o.r_horizon_pad, 2.0 * o.event_tol * std::abs(dr));
  EXPECT_EQ(in.events.back().tag, EventTag::HorizonPad);
  const auto out = integrate(p, principal_null(p, 6.0, 1.2, Principal::Ingoing), Direction::Past, o);
  ASSERT_EQ(out.stop, StopReason::Escape);
  EXPECT_EQ(out.final_state.chart.radial, RadialChart::ConformalAdvanced);
  // located to event_tol in the flow parameter
  const double dw = detail::gradient_flow(p, out.final_state.chart, detail::pack(out.final_state))[1];
  EXPECT_NEAR(out.final_state.x[1], o.w_min, 2.0 * o.event_tol * std::abs(dw));
  EXPECT_EQ(out.events.back().tag, EventTag::Escape);
  const auto fut = integrate(p, principal_null(p, 6.0, 1.2, Principal::Ingoing), Direction::Future, o);
  EXPECT_EQ(fut.final_state.chart.radial, RadialChart::KerrStar);
  // samples are ordered along the run
  for (const auto* tr : {&in, &out, &fut}) {
    for (std::size_t i = 1; i < tr->samples.size(); ++i) EXPECT_NE(tr->samples[i].s, tr->samples[i - 1].s);
    const double dir = tr->samples.back().s > tr->samples.front().s ? 1.0 : -1.0;
    for (std::size_t i = 1; i < tr->samples.size(); ++i) EXPECT_GT(dir * (tr->samples[i].s - tr->samples[i - 1].s), 0.0);
  }
}

TEST(Integrate, TrappedDataStayNearPhotonRadius) {
  std::size_t n = 0;
  for (std::size_t i = 0; n < 150; ++i) {
    SampleRng rng(43, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    double c, s;
    rng.unit_circle(c, s);
    // every third sample has small xi_phi, so the orbit passes close to the axis
    if (i % 3 == 0) s *= 1e-3;
    const auto t = sample_trapped(p, rng.polar_angle(), c, s, rng.coin() ? Branch::Plus : Branch::Minus);
    if (!t) continue;
    ++n;
    const auto q = phase_point(t->point, t->covector);
    for (Direction dir : {Direction::Past, Direction::Future}) {
      const auto tr = integrate(p, q, dir);
      EXPECT_EQ(tr.stop, StopReason::Budget);
      EXPECT_LT(std::max(tr.r_max - t->point.x[1], t->point.x[1] - tr.r_min), 1e-6 * p.M);
      EXPECT_EQ(classify_fate(p, q, dir).fate, Fate::Trapped);
    }
  }
}

TEST(Integrate, TrappedAxisData) {
  for (double a : {0.3, 0.95}) {
    const auto p = derive_constants(1.0, a);
    const auto t = sample_trapped_axis(p, 0.6, 0.8, Branch::Plus, Patch::North);
    ASSERT_TRUE(t.has_value());
    const auto q = phase_point(t->point, t->covector);
    const auto tr = integrate(p, q, Direction::Past);
    EXPECT_LT(std::max(tr.r_max - t->point.x[1], t->point.x[1] - tr.r_min), 1e-6);
    EXPECT_EQ(classify_fate(p, q, Direction::Future).fate, Fate::Trapped);
  }
}

TEST(Integrate, Conservation) {
  IntegratorOpts o;
  o.record = false;
  for (std::size_t i = 0; i < 300; ++i) {
    SampleRng rng(44, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    const auto q = random_null(p, rng, 1e-2, 40.0);
    const auto tr = integrate(p, q, rng.coin() ? Direction::Past : Direction::Future, o);
    EXPECT_NE(tr.stop, StopReason::Budget);
    EXPECT_LT(tr.drift.xi_t, 1e-12);
    EXPECT_LT(tr.drift.xi_phi, 1e-12);
    EXPECT_LT(tr.drift.carter, 1e-9);
    EXPECT_LT(tr.drift.residual, 1e-8);
  }
}

TEST(Integrate, AxisCrossingKeepsConservedQuantities) {
  // covector with tiny axial momentum started near the pole: the orbit passes
  // through the stereographic patch
  const auto p = derive_constants(1.0, 0.9);
  const auto x = bl(6.0, 0.05, 0.3);
  const auto xi = complete_null(p, x, 0.2, -1.0, 1e-4, Branch::Plus);
  const auto tr = integrate(p, phase_point(x, xi), Direction::Future);
  bool stereo = false;
  for (const auto& e : tr.events) stereo = stereo || e.to.angular != AngularChart::Polar;
  EXPECT_TRUE(stereo);
  EXPECT_LT(tr.drift.xi_phi, 1e-12);
  EXPECT_LT(tr.drift.carter, 1e-9);
}

TEST(ChartSwitch, ConservedQuantitiesContinuous) {
  const RadialChart radials[] = {RadialChart::BoyerLindquist, RadialChart::KerrStar, RadialChart::StarKerr,
                                 RadialChart::ConformalAdvanced, RadialChart::ConformalRetarded};
  double worst = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    SampleRng rng(45, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    const auto q = random_null(p, rng, 1e-2, 200.0, 0.05);
    const double L = conserved_L(q), C = detail::carter_value(p, q);
    const double norm = covector_norm_bl(p, q);
    for (RadialChart rc : radials) {
      for (AngularChart ac : {AngularChart::Polar, AngularChart::StereoNorth, AngularChart::StereoSouth}) {
        if (ac == AngularChart::StereoNorth && std::cos(q.x[2]) < 0.2) continue;
        if (ac == AngularChart::StereoSouth && std::cos(q.x[2]) > -0.2) continue;
        const auto s = detail::switch_chart(p, q, {rc, ac});
        worst = std::max({worst, std::abs(s.xi[0] - q.xi[0]) / norm, std::abs(conserved_L(s) - L) / norm,
                          std::abs(detail::carter_value(p, s) - C) / (norm * norm)});
        const auto back = detail::switch_chart(p, s, q.chart);
        for (int k = 1; k < 4; ++k) EXPECT_NEAR(back.x[k], q.x[k], 1e-10 * std::max(1.0, std::abs(q.x[k])));
      }
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(TimeReversal, ShortArcsReturn) {
  for (std::size_t i = 0; i < 300; ++i) {
    SampleRng rng(46, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    const auto q = random_null(p, rng, 1.0, 30.0, 0.3);
    const double ds = 0.02 / covector_norm_bl(p, q);
    const auto fwd = flow_by(p, q, ds);
    const auto back = flow_by(p, fwd, -ds);
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(back.x[k], q.x[k], 1e-8 * std::max(1.0, std::abs(q.x[k])));
      EXPECT_NEAR(back.xi[k], q.xi[k], 1e-8 * covector_norm_bl(p, q));
    }
    EXPECT_EQ(back.s, q.s);
  }
}

TEST(TimeReversal, IntegratedArcReturns) {
  IntegratorOpts o;
  o.s_max = 0.01;
  for (std::size_t i = 0; i < 100; ++i) {
    SampleRng rng(47, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    const auto q = random_null(p, rng, 2.0, 20.0, 0.4);
    const auto tr = integrate(p, q, Direction::Future, o);
    ASSERT_EQ(tr.stop, StopReason::Budget);
    ASSERT_EQ(tr.final_state.chart, q.chart);
    const auto back = flow_by(p, tr.final_state, q.s - tr.final_state.s);
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(back.x[k], q.x[k], 1e-8 * std::max(1.0, std::abs(q.x[k])));
      EXPECT_NEAR(back.xi[k], q.xi[k], 1e-8 * covector_norm_bl(p, q));
    }
  }
}

TEST(TimeReversal, ReflectionSwapsFates) {
  IntegratorOpts o;
  for (std::size_t i = 0; i < 200; ++i) {
    SampleRng rng(48, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.999, 0.999));
    const auto q = random_null(p, rng, 1e-2, 40.0);
    const auto refl = time_reflect(q);
    EXPECT_EQ(orientation_sign(p, refl), -orientation_sign(p, q));
    EXPECT_NEAR(relative_residual(p, refl), 0.0, 1e-12);
    for (Direction dir : {Direction::Past, Direction::Future}) {
      const auto a = classify_fate(p, q, dir, o);
      const auto b = classify_fate(p, refl, dir == Direction::Past ? Direction::Future : Direction::Past, o);
      EXPECT_EQ(b.fate, mirror(a.fate));
      EXPECT_NEAR(a.r_min, b.r_min, 1e-9 * a.r_min);
      EXPECT_NEAR(a.r_max, b.r_max, 1e-9 * a.r_max);
    }
  }
  const PhasePoint ks{{RadialChart::KerrStar, AngularChart::Polar}, {0, 3, 1, 0}, {1, 0, 0, 0}, 0};
  EXPECT_EQ(code_of([&] { time_reflect(ks); }), ErrorCode::ChartDomain);
}

TEST(Gamma, MembersAreTrappedOnOneSide) {
  // Gamma+ is trapped as s -> -inf, Gamma- as s -> +inf. A past run moves s
  // toward +inf for future-pointing data and toward -inf for past-pointing data.
  std::size_t n = 0;
  for (std::size_t i = 0; n < 60; ++i) {
    SampleRng rng(49, i);
    const auto p = derive_constants(1.0, rng.uniform(-0.99, 0.99));
    double c, s;
    rng.unit_circle(c, s);
    const auto t = sample_trapped(p, rng.uniform(0.4, pi - 0.4), c, s, rng.coin() ? Branch::Plus : Branch::Minus);
    if (!t) continue;
    const AngularCovector k{t->point.x[2], t->covector.xi[0], t->covector.xi[2], t->covector.xi[3]};
    const double rp = r_prime_solve(p, k);
    const double r = rng.coin() ? rp + 0.3 : std::max(p.r_plus + 0.6, rp - 0.3);
    if (std::abs(r - rp) < 0.05) continue;
    ++n;
    for (GammaSide side : {GammaSide::Plus, GammaSide::Minus}) {
      const auto x = bl(r, k.theta);
      const Covector xi{ChartId::BL_I, {k.xi_t, gamma_xi_r(p, r, rp, k, side), k.xi_theta, k.xi_phi}};
      ASSERT_TRUE(gamma_membership(p, x, xi, side).in_set);
      const auto q = phase_point(x, xi);
      const double o = orientation_sign(p, q);
      const bool trapped_side = (side == GammaSide::Minus) == (o > 0);
      const auto f = classify_fate(p, q, Direction::Past);
      if (trapped_side) {
        EXPECT_EQ(f.fate, Fate::Trapped) << f.diagnostic << " r=" << r << " r'=" << rp;
      } else {
        EXPECT_TRUE(f.fate == Fate::HorizonPast || f.fate == Fate::ScriPast) << to_string(f.fate);
      }
    }
  }
}

TEST(Lemma33, SmallCampaign) {
  CampaignOpts o;
  o.n = 300;
  o.seed = 5;
  const auto r = lemma33_campaign(derive_constants(1.0, 0.7), o);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.validated, o.n);
  EXPECT_EQ(r.attempts, r.validated + r.excluded);
  EXPECT_EQ(r.counts.at("HorizonPast") + r.counts.at("ScriPast") + r.undecided, r.validated);
}

TEST(Lemma33, TrappedDataAreExcluded) {
  const auto p = derive_constants(1.0, 0.7);
  const auto t = sample_trapped(p, 1.2, 0.4, -0.9, Branch::Minus);
  ASSERT_TRUE(t.has_value());
  ASSERT_LT(t->covector.xi[0], 0.0);
  const auto km = khat_margin(p, {1.2, t->covector.xi[0], t->covector.xi[2], t->covector.xi[3]});
  ASSERT_TRUE(km.has_value());
  EXPECT_LT(std::abs(km->margin), CampaignOpts{}.exclusion);
}

TEST(Lemma33, BudgetSensitivity) {
  // same samples, growing budget: the share not yet resolved to a past fate shrinks
  const auto p = derive_constants(1.0, 0.7);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double s_max : {0.25, 0.5, 1.0, 1.5}) {
    CampaignOpts o;
    o.n = 300;
    o.seed = 6;
    o.exclusion = 1e-6;
    o.flow.s_max = s_max;
    const auto r = lemma33_campaign(p, o);
    const std::size_t open = r.violations + r.undecided;
    EXPECT_LE(open, prev) << "s_max=" << s_max;
    prev = open;
  }
  EXPECT_EQ(prev, 0u);
}
