#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kerrflow/flow.hpp"
#include "kerrflow/killing.hpp"
#include "kerrflow/null_cone.hpp"
#include "kerrflow/parallel.hpp"
#include "kerrflow/random.hpp"
#include "kerrflow/trapping.hpp"

namespace kerrflow {

struct CampaignOpts {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;  // 0: KERRFLOW_JOBS or hardware threads
  ToleranceConfig tol{};
  IntegratorOpts flow{};
  // draws per sample before it is reported as unresolved
  int max_attempts = 64;
  // share of trapped samples placed on the rotation axis
  double axis_fraction = 0.01;
  // lemma33: |Phi(r')| / scale below this marks data as near the trapped set
  double exclusion = 1e-3;
  // lemma33: sampled radii lie in (r_plus + r_inner, r_outer), units of M
  double r_inner = 1e-2;
  double r_outer = 40.0;
};

/// Outcome of a randomized verification run. worst_margin is the largest
/// signed margin seen (<= 0 when the property holds with room to spare);
/// absent when no sample reached the margin test.
struct SearchReport {
  std::string campaign;
  double M = 1.0;
  double a = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t violations = 0;
  std::optional<double> worst_margin;
  double wall_time_s = 0.0;
  std::size_t validated = 0;
  std::size_t attempts = 0;
  std::size_t unresolved = 0;
  std::size_t excluded = 0;
  std::size_t undecided = 0;
  std::size_t errors = 0;
  std::map<std::string, std::size_t> counts;
  bool ok = false;
};

namespace detail {

struct Tally {
  std::size_t violations = 0, validated = 0, attempts = 0, unresolved = 0, excluded = 0, undecided = 0, errors = 0;
  std::optional<double> worst;
  std::map<std::string, std::size_t> counts;

  void margin(double m) { worst = worst ? std::max(*worst, m) : m; }
  void merge(const Tally& o) {
    violations += o.violations;
    validated += o.validated;
    attempts += o.attempts;
    unresolved += o.unresolved;
    excluded += o.excluded;
    undecided += o.undecided;
    errors += o.errors;
    if (o.worst) margin(*o.worst);
    for (const auto& [k, v] : o.counts) counts[k] += v;
  }
};

inline SearchReport finish(std::string name, const SpacetimeParams& p, const CampaignOpts& o,
                           const std::vector<Tally>& parts, std::chrono::steady_clock::time_point start) {
  Tally t;
  for (const auto& part : parts) t.merge(part);
  SearchReport r;
  r.campaign = std::move(name);
  r.M = p.M;
  r.a = p.a;
  r.n = o.n;
  r.seed = o.seed;
  r.violations = t.violations;
  r.worst_margin = t.worst;
  r.validated = t.validated;
  r.attempts = t.attempts;
  r.unresolved = t.unresolved;
  r.excluded = t.excluded;
  r.undecided = t.undecided;
  r.errors = t.errors;
  r.counts = std::move(t.counts);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// One validated point of K drawn from the sample's stream, or nothing after
/// max_attempts draws.
inline std::optional<TrappedSample> draw_trapped(const SpacetimeParams& p, SampleRng& rng, const CampaignOpts& o,
                                                 double axis_fraction, Tally& t) {
  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    ++t.attempts;
    const Branch branch = rng.coin() ? Branch::Plus : Branch::Minus;
    std::optional<TrappedSample> s;
    if (rng.uniform() < axis_fraction) {
      double c, sn;
      rng.unit_circle(c, sn);
      s = sample_trapped_axis(p, c, sn, branch, rng.coin() ? Patch::North : Patch::South, o.tol);
    } else {
      const double theta = rng.polar_angle();
      if (std::sin(theta) < o.tol.axis_threshold) continue;
      double c, sn;
      rng.unit_circle(c, sn);
      s = sample_trapped(p, theta, c, sn, branch, o.tol);
    }
    if (!s) continue;
    const double norm = euclidean_norm(s->covector.xi);
    if (std::abs(s->covector.xi[0]) < o.tol.xi_t_floor * norm) continue;
    return s;
  }
  ++t.unresolved;
  return std::nullopt;
}

}  // namespace detail

/// Searches K for covectors with xi_t < 0 and xi_t + Omega_H xi_phi > 0.
/// The margin is (xi_t + Omega_H xi_phi) / |xi| over samples with xi_t < 0.
inline SearchReport lemma65_search(const SpacetimeParams& p, const CampaignOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  auto parts = parallel_accumulate<detail::Tally>(o.n, resolve_jobs(o.jobs), [&](std::size_t i, detail::Tally& t) {
    SampleRng rng(o.seed, i);
    const auto s = detail::draw_trapped(p, rng, o, o.axis_fraction, t);
    if (!s) return;
    ++t.validated;
    if (!s->witness.positivity_consistent) ++t.counts["positivity_inconsistent"];
    const double xi_t = s->covector.xi[0];
    if (xi_t >= 0.0) return;
    ++t.counts["negative_xi_t"];
    const double axial = killing_contraction(p, s->point, s->covector, KillingField::Horizon);
    const double m = axial / euclidean_norm(s->covector.xi);
    t.margin(m);
    if (m > 0.0) ++t.violations;
  });
  auto r = detail::finish("lemma65", p, o, parts, start);
  const auto inconsistent = r.counts.count("positivity_inconsistent") ? r.counts["positivity_inconsistent"] : 0;
  r.ok = r.violations == 0 && r.unresolved == 0 && inconsistent == 0 && (!r.worst_margin || *r.worst_margin <= 0.0);
  return r;
}

/// Samples Gamma+ and Gamma- through validated points of K-hat, keeps those
/// with xi_t > 0 or xi_t + Omega_H xi_phi > 0, and counts past-pointing ones.
/// The margin is minus the normalized contraction with -grad t.
inline SearchReport prop67_verify(const SpacetimeParams& p, const CampaignOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  auto parts = parallel_accumulate<detail::Tally>(o.n, resolve_jobs(o.jobs), [&](std::size_t i, detail::Tally& t) {
    SampleRng rng(o.seed, i);
    for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
      const auto s = detail::draw_trapped(p, rng, o, 0.0, t);
      if (!s) return;
      const double theta = s->point.x[2];
      const AngularCovector k{theta, s->covector.xi[0], s->covector.xi[2], s->covector.xi[3]};
      if (!(k.xi_t > 0.0 || k.xi_t + p.Omega_H * k.xi_phi > 0.0)) {
        ++t.counts["filtered"];
        continue;
      }
      double r_prime;
      try {
        r_prime = r_prime_solve(p, k, o.tol);
      } catch (const Error& e) {
        ++t.errors;
        ++t.counts[std::string(to_string(e.code()))];
        return;
      }
      const double r = rng.log_uniform_offset(p.r_plus, 1e-6 * p.r_plus, 100.0 * p.M - p.r_plus);
      const GammaSide side = rng.coin() ? GammaSide::Plus : GammaSide::Minus;
      const double xi_r = gamma_xi_r(p, r, r_prime, k, side);
      const ChartPoint x{ChartId::BL_I, {0.0, r, theta, 0.0}};
      const Covector xi{ChartId::BL_I, {k.xi_t, xi_r, k.xi_theta, k.xi_phi}};
      ++t.validated;
      ++t.counts[side == GammaSide::Plus ? "gamma_plus" : "gamma_minus"];
      try {
        const Orientation ori = orientation(p, x, xi, o.tol);
        const auto [D, rho2, sigma2] = metric_scalars(p, r, theta);
        const double scale = (sigma2 * std::abs(k.xi_t) + 2.0 * p.M * std::abs(p.a * k.xi_phi) * r) / (rho2 * D);
        t.margin(-grad_t_contraction(p, x, xi) / scale);
        if (ori == Orientation::Past) ++t.violations;
      } catch (const Error& e) {
        ++t.errors;
        ++t.counts[std::string(to_string(e.code()))];
      }
      return;
    }
    ++t.unresolved;
  });
  auto r = detail::finish("prop67", p, o, parts, start);
  r.ok = r.violations == 0 && r.errors == 0 && r.unresolved == 0;
  return r;
}

/// Random null data outside a neighbourhood of the trapped set, classified
/// by their past fate. A draw inside the neighbourhood is counted as excluded
/// and replaced, so n data are classified. Trapped or future fates count as
/// violations; the Undecided share must stay below 1%.
inline SearchReport lemma33_campaign(const SpacetimeParams& p, const CampaignOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  auto parts = parallel_accumulate<detail::Tally>(o.n, resolve_jobs(o.jobs), [&](std::size_t i, detail::Tally& t) {
    SampleRng rng(o.seed, i);
    for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
      ++t.attempts;
      const double r = rng.log_uniform_offset(p.r_plus, o.r_inner * p.M, o.r_outer * p.M - p.r_plus);
      double theta = rng.polar_angle();
      double xr, xth, xph;
      rng.unit_sphere(xr, xth, xph);
      const Branch branch = rng.coin() ? Branch::Plus : Branch::Minus;
      if (std::sin(theta) < o.tol.axis_threshold) theta = 0.5 * std::numbers::pi;
      const ChartPoint x{ChartId::BL_I, {0.0, r, theta, 0.0}};
      Covector xi;
      try {
        xi = complete_null(p, x, xr, xth, xph, branch, o.tol);
      } catch (const Error& e) {
        ++t.errors;
        ++t.undecided;
        return;
      }
      const auto km = khat_margin(p, {theta, xi.xi[0], xi.xi[2], xi.xi[3]}, o.tol);
      if (km && std::abs(km->margin) < o.exclusion) {
        ++t.excluded;
        continue;
      }
      ++t.validated;
      if (km) t.margin(-std::abs(km->margin));
      const FateReport fr = classify_fate(p, phase_point(x, xi), Direction::Past, o.flow, o.tol);
      ++t.counts[std::string(to_string(fr.fate))];
      switch (fr.fate) {
        case Fate::HorizonPast:
        case Fate::ScriPast: break;
        case Fate::Undecided: ++t.undecided; break;
        default: ++t.violations; break;
      }
      return;
    }
    ++t.unresolved;
  });
  auto r = detail::finish("lemma33", p, o, parts, start);
  r.ok = r.violations == 0 && r.unresolved == 0 &&
         static_cast<double>(r.undecided) < 0.01 * static_cast<double>(std::max<std::size_t>(1, r.validated));
  return r;
}

/// P > 0 and increasing on an n-point log grid over (r_plus (1 + 1e-8), radial_max M].
/// The margin is max of -P(r) / (r^3 + M r_plus^2).
inline SearchReport p_positivity_campaign(const SpacetimeParams& p, const CampaignOpts& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto grid = roots::offset_log_grid(p.r_plus, p.r_plus * (1.0 + 1e-8),
                                           o.tol.radial_max * p.M, std::max<std::size_t>(2, o.n));
  const PositivityReport rep = p_positivity_report(p, grid);
  detail::Tally t;
  t.attempts = t.validated = grid.size();
  t.violations = rep.violations;
  for (double r : grid) t.margin(-p_polynomial(p, r) / (r * r * r + p.M * p.r_plus * p.r_plus));
  auto r = detail::finish("p-positivity", p, o, {t}, start);
  r.ok = r.violations == 0 && std::abs(rep.p_at_r_plus) <= 1e-10 * p.M * p.M * p.M;
  return r;
}

}  // namespace kerrflow
