#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include <json.hpp>

#include "kerrflow/campaigns.hpp"
#include "kerrflow/flow.hpp"
#include "kerrflow/params.hpp"

namespace kerrflow::io {

using nlohmann::json;

inline constexpr int schema_version = 1;

/// Shortest round-trip decimal form, so repeated runs print identical bytes.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const SpacetimeParams& p) {
  return {{"M", p.M},
          {"a", p.a},
          {"r_plus", p.r_plus},
          {"r_minus", p.r_minus},
          {"kappa_plus", p.kappa_plus},
          {"kappa_minus", std::isfinite(p.kappa_minus) ? json(p.kappa_minus) : json(nullptr)},
          {"Omega_H", p.Omega_H},
          {"T_H", p.T_H},
          {"ergosphere_equatorial", 2.0 * p.M}};
}

/// Coordinates as written out: phi wrapped to (-pi, pi] in polar charts.
inline std::array<double, 4> output_coords(const PhasePoint& q) {
  auto x = q.x;
  if (q.chart.angular == AngularChart::Polar) x[3] = std::remainder(x[3], 2.0 * std::numbers::pi);
  return x;
}

inline json to_json(const SpacetimeParams& p, const PhasePoint& q) {
  return {{"s", q.s},
          {"chart", chart_name(q.chart)},
          {"coords", output_coords(q)},
          {"covector", q.xi},
          {"G_residual", relative_residual(p, q)}};
}

inline json to_json(const Drifts& d) {
  return {{"xi_t", d.xi_t}, {"xi_phi", d.xi_phi}, {"carter", d.carter}, {"residual", d.residual}};
}

inline json to_json(const SearchReport& r) {
  json counts = json::object();
  for (const auto& [k, v] : r.counts) counts[k] = v;
  return {{"schema_version", schema_version},
          {"campaign", r.campaign},
          {"params", {{"M", r.M}, {"a", r.a}}},
          {"n", r.n},
          {"seed", r.seed},
          {"violations", r.violations},
          {"worst_margin", r.worst_margin ? json(*r.worst_margin) : json(nullptr)},
          {"wall_time_s", r.wall_time_s},
          {"validated", r.validated},
          {"attempts", r.attempts},
          {"unresolved", r.unresolved},
          {"excluded", r.excluded},
          {"undecided", r.undecided},
          {"errors", r.errors},
          {"counts", counts},
          {"ok", r.ok}};
}

/// One JSON object per line: every sample, then a summary record.
inline void write_jsonl(std::ostream& os, const SpacetimeParams& p, const Trajectory& tr, const json& summary) {
  for (const auto& q : tr.samples) os << to_json(p, q).dump() << '\n';
  os << summary.dump() << '\n';
}

inline json trajectory_summary(const SpacetimeParams& p, const Trajectory& tr, Direction dir, Fate fate) {
  json events = json::array();
  for (const auto& e : tr.events) {
    events.push_back(
        {{"s", e.s}, {"tag", to_string(e.tag)}, {"from", chart_name(e.from)}, {"to", chart_name(e.to)}});
  }
  return {{"schema_version", schema_version},
          {"summary", true},
          {"params", to_json(p)},
          {"direction", to_string(dir)},
          {"fate", to_string(fate)},
          {"stop", to_string(tr.stop)},
          {"samples", tr.samples.size()},
          {"accepted_steps", tr.accepted},
          {"rejected_steps", tr.rejected},
          {"r_min", tr.r_min},
          {"r_max", tr.r_max},
          {"drift", to_json(tr.drift)},
          {"events", events},
          {"final", to_json(p, tr.final_state)}};
}

inline constexpr const char* sweep_header =
    "campaign,M,a,n,seed,violations,worst_margin,validated,attempts,unresolved,excluded,undecided,errors,ok,status";

/// One sweep row without the wall time, so reruns give identical bytes.
inline std::string sweep_row(const SearchReport& r, const std::string& status) {
  std::string out = r.campaign;
  auto add = [&](const std::string& v) { out += ',' + v; };
  add(format_double(r.M));
  add(format_double(r.a));
  add(std::to_string(r.n));
  add(std::to_string(r.seed));
  add(std::to_string(r.violations));
  add(r.worst_margin ? format_double(*r.worst_margin) : "");
  add(std::to_string(r.validated));
  add(std::to_string(r.attempts));
  add(std::to_string(r.unresolved));
  add(std::to_string(r.excluded));
  add(std::to_string(r.undecided));
  add(std::to_string(r.errors));
  add(r.ok ? "true" : "false");
  add(status);
  return out;
}

inline void write_csv(std::ostream& os, const SpacetimeParams& p, const Trajectory& tr) {
  os << "s,chart,x0,x1,x2,x3,xi0,xi1,xi2,xi3,G_residual\n";
  for (const auto& q : tr.samples) {
    os << format_double(q.s) << ',' << chart_name(q.chart);
    for (double v : output_coords(q)) os << ',' << format_double(v);
    for (double v : q.xi) os << ',' << format_double(v);
    os << ',' << format_double(relative_residual(p, q)) << '\n';
  }
}

}  // namespace kerrflow::io
