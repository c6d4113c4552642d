#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kerrflow/cli.hpp"
#include "kerrflow/io.hpp"
#include "kerrflow/kerrflow.hpp"

using namespace kerrflow;
using io::json;

namespace {

constexpr const char* kVersion = "1.0.0";

using namespace kerrflow::cli;

struct Spacetime {
  double mass = 1.0;
  double spin = 0.0;
};

void add_spacetime(CLI::App* cmd, Spacetime& s) {
  cmd->add_option("--mass", s.mass, "black hole mass M")->capture_default_str();
  cmd->add_option("--spin", s.spin, "spin parameter a, |a| < M")->capture_default_str();
}

// Invalid parameters are a usage error.
std::optional<SpacetimeParams> make_params(const Spacetime& s) {
  try {
    return derive_constants(s.mass, s.spin);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ExtremalOrSuper) {
      std::cerr << "kerrflow: subextreme range required (|a| < M), got M = " << s.mass << ", a = " << s.spin << "\n";
    } else {
      std::cerr << "kerrflow: " << e.what() << "\n";
    }
    return std::nullopt;
  }
}

/// Writes to the named file, or to stdout for "" and "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }
  bool is_file() const { return file_ != nullptr; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// --- constants ------------------------------------------------------------

struct ConstantsArgs {
  Spacetime st;
  std::string output;
};

int run_constants(const ConstantsArgs& args) {
  const auto p = make_params(args.st);
  if (!p) return Usage;
  json out = io::to_json(*p);
  out["schema_version"] = io::schema_version;
  Sink sink(args.output);
  sink.stream() << out.dump(2) << "\n";
  return Ok;
}

// --- trace ----------------------------------------------------------------

struct TraceArgs {
  Spacetime st;
  double r = 6.0;
  double theta = std::numbers::pi / 2;
  double phi = 0.0;
  std::optional<double> xi_r, xi_theta, xi_phi;
  std::string branch = "plus";
  std::string principal;
  bool trapped = false;
  std::string direction = "past";
  std::string format = "jsonl";
  std::string output;
  IntegratorOpts flow;
};

int run_trace(const TraceArgs& args) {
  const auto p = make_params(args.st);
  if (!p) return Usage;
  const Branch branch = args.branch == "plus" ? Branch::Plus : Branch::Minus;
  const Direction dir = args.direction == "past" ? Direction::Past : Direction::Future;
  const bool has_xi = args.xi_r || args.xi_theta || args.xi_phi;
  const bool principal = !args.principal.empty();
  if (principal + args.trapped + (has_xi && !args.trapped) != 1 || (principal && has_xi) ||
      (args.trapped && args.xi_r)) {
    std::cerr << "kerrflow trace: give exactly one of --principal, --trapped or covector components"
                 " (--trapped takes --xi-theta and --xi-phi only)\n";
    return Usage;
  }

  PhasePoint q;
  try {
    if (!args.principal.empty()) {
      q = principal_null(*p, args.r, args.theta, args.principal == "in" ? Principal::Ingoing : Principal::Outgoing);
      q.x[3] = args.phi;
    } else if (args.trapped) {
      // K point through (theta, xi_theta, xi_phi); r is solved for
      const auto s = sample_trapped(*p, args.theta, args.xi_theta.value_or(0.0), args.xi_phi.value_or(1.0), branch);
      if (!s) {
        std::cerr << "kerrflow trace: no trapped radius for this (theta, xi_theta, xi_phi, branch)\n";
        return Usage;
      }
      q = phase_point(s->point, s->covector);
      q.x[3] = args.phi;
    } else {
      const ChartPoint x{ChartId::BL_I, {0.0, args.r, args.theta, args.phi}};
      const auto xi = complete_null(*p, x, args.xi_r.value_or(0.0), args.xi_theta.value_or(0.0),
                                    args.xi_phi.value_or(0.0), branch);
      q = phase_point(x, xi);
    }
  } catch (const Error& e) {
    std::cerr << "kerrflow trace: invalid initial data: " << e.what() << "\n";
    return Usage;
  }

  Trajectory tr;
  try {
    tr = integrate(*p, q, dir, args.flow);
  } catch (const Error& e) {
    std::cerr << "kerrflow trace: integrator failure [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return Numerical;
  }
  const json summary = io::trajectory_summary(*p, tr, dir, fate_of(*p, tr, dir, args.flow));
  Sink sink(args.output);
  if (args.format == "csv") {
    io::write_csv(sink.stream(), *p, tr);
    std::cout << summary.dump() << "\n";
  } else {
    io::write_jsonl(sink.stream(), *p, tr, summary);
    if (sink.is_file()) std::cout << summary.dump() << "\n";
  }
  return Ok;
}

// --- verify / sweep ---------------------------------------------------------

struct CampaignArgs {
  Spacetime st;
  std::string campaign = "lemma65";
  std::size_t n = 10'000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  std::string output;
  double exclusion = CampaignOpts{}.exclusion;
  IntegratorOpts flow;
};

SearchReport run_campaign(const std::string& name, const SpacetimeParams& p, const CampaignOpts& o) {
  if (name == "lemma65") return lemma65_search(p, o);
  if (name == "prop67") return prop67_verify(p, o);
  if (name == "lemma33") return lemma33_campaign(p, o);
  return p_positivity_campaign(p, o);
}

CampaignOpts campaign_opts(const CampaignArgs& args) {
  CampaignOpts o;
  o.n = args.n;
  o.seed = args.seed;
  o.jobs = args.jobs;
  o.exclusion = args.exclusion;
  o.flow = args.flow;
  return o;
}

int run_verify(const CampaignArgs& args) {
  const auto p = make_params(args.st);
  if (!p) return Usage;
  SearchReport r;
  try {
    validate(*p, args.flow);
    r = run_campaign(args.campaign, *p, campaign_opts(args));
  } catch (const Error& e) {
    std::cerr << "kerrflow verify: numerical failure [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return Numerical;
  }
  const json out = io::to_json(r);
  Sink sink(args.output);
  sink.stream() << out.dump(2) << "\n";
  if (sink.is_file()) std::cout << out.dump() << "\n";
  if (r.violations > 0) std::cerr << "kerrflow verify: " << r.violations << " violation(s) found\n";
  return verify_exit_code(r);
}

struct SweepArgs {
  CampaignArgs base;
  double spin_min = 0.1;
  double spin_max = 0.9;
  std::size_t spin_steps = 9;
};

int run_sweep(const SweepArgs& args) {
  if (args.spin_steps == 0) {
    std::cerr << "kerrflow sweep: --spin-steps must be positive\n";
    return Usage;
  }
  std::vector<double> spins(args.spin_steps);
  for (std::size_t i = 0; i < spins.size(); ++i) {
    spins[i] = args.spin_steps == 1 ? args.spin_min
                                    : args.spin_min + (args.spin_max - args.spin_min) * static_cast<double>(i) /
                                                          static_cast<double>(args.spin_steps - 1);
  }
  for (double a : spins) {
    if (!make_params({args.base.st.mass, a})) return Usage;
  }
  struct Row {
    std::size_t index;
    std::string line;
    bool failed;
  };
  // grid points in parallel, each campaign on one worker; rows are sorted afterwards
  auto parts = parallel_accumulate<std::vector<Row>>(
      spins.size(), resolve_jobs(args.base.jobs), [&](std::size_t i, std::vector<Row>& acc) {
        CampaignOpts o = campaign_opts(args.base);
        o.jobs = 1;
        const auto p = derive_constants(args.base.st.mass, spins[i]);
        SearchReport r;
        std::string status = "ok";
        try {
          validate(p, o.flow);
          r = run_campaign(args.base.campaign, p, o);
          if (r.violations > 0) status = "violation";
          else if (!r.ok) status = "numerical";
        } catch (const Error& e) {
          r.campaign = args.base.campaign;
          r.M = p.M;
          r.a = p.a;
          r.n = o.n;
          r.seed = o.seed;
          status = std::string("error:") + std::string(to_string(e.code()));
        }
        acc.push_back({i, io::sweep_row(r, status), status != "ok"});
      });
  std::vector<Row> rows;
  for (auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.index < b.index; });

  Sink sink(args.base.output);
  sink.stream() << io::sweep_header << "\n";
  bool failed = false;
  for (const auto& row : rows) {
    sink.stream() << row.line << "\n";
    failed = failed || row.failed;
  }
  if (failed) std::cerr << "kerrflow sweep: at least one row failed\n";
  return failed ? SweepFailure : Ok;
}

void add_flow_options(CLI::App* cmd, IntegratorOpts& flow) {
  cmd->add_option("--s-max", flow.s_max, "flow parameter budget")->capture_default_str();
  cmd->add_option("--rel-tol", flow.rel_tol, "relative step tolerance")->capture_default_str();
  cmd->add_option("--r-escape", flow.r_escape, "escape radius in units of M")->capture_default_str();
  cmd->add_option("--max-steps", flow.max_steps, "accepted step limit per trajectory")->capture_default_str();
}

void add_campaign_options(CLI::App* cmd, CampaignArgs& c) {
  add_spacetime(cmd, c.st);
  cmd->add_option("--n", c.n, "number of samples (grid points for p-positivity)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "root seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "worker threads (0: KERRFLOW_JOBS or all cores)")->capture_default_str();
  cmd->add_option("--output", c.output, "output path (default stdout)");
  cmd->add_option("--exclusion", c.exclusion, "lemma33: relative margin around the trapped set")
      ->capture_default_str();
  add_flow_options(cmd, c.flow);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null geodesic flow, trapping and positivity checks on the Kerr exterior"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion) + " (schema " + std::to_string(io::schema_version) + ")");

  ConstantsArgs constants_args;
  auto* constants = app.add_subcommand("constants", "horizon radii, surface gravities, Omega_H, T_H");
  add_spacetime(constants, constants_args.st);
  constants->add_option("--output", constants_args.output, "output path (default stdout)");

  TraceArgs trace_args;
  auto* trace = app.add_subcommand("trace", "integrate one null bicharacteristic and report its fate");
  add_spacetime(trace, trace_args.st);
  trace->add_option("--r", trace_args.r, "Boyer-Lindquist radius")->capture_default_str();
  trace->add_option("--theta", trace_args.theta, "polar angle")->capture_default_str();
  trace->add_option("--phi", trace_args.phi, "azimuth")->capture_default_str();
  trace->add_option("--xi-r", trace_args.xi_r, "covector component xi_r");
  trace->add_option("--xi-theta", trace_args.xi_theta, "covector component xi_theta");
  trace->add_option("--xi-phi", trace_args.xi_phi, "covector component xi_phi");
  trace->add_option("--branch", trace_args.branch, "null completion branch")
      ->check(CLI::IsMember({"plus", "minus"}))
      ->capture_default_str();
  trace->add_option("--principal", trace_args.principal, "principal null data, ingoing or outgoing")
      ->check(CLI::IsMember({"in", "out"}));
  trace->add_flag("--trapped", trace_args.trapped,
                  "start on the trapped set through (theta, xi_theta, xi_phi, branch); r is solved for");
  trace->add_option("--direction", trace_args.direction, "time direction")
      ->check(CLI::IsMember({"past", "future"}))
      ->capture_default_str();
  trace->add_option("--format", trace_args.format, "trajectory format")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  trace->add_option("--output", trace_args.output, "trajectory path (default stdout)");
  add_flow_options(trace, trace_args.flow);

  CampaignArgs verify_args;
  auto* verify = app.add_subcommand("verify", "randomized verification campaign");
  verify->add_option("campaign", verify_args.campaign, "lemma65 | prop67 | lemma33 | p-positivity")
      ->required()
      ->check(CLI::IsMember({"lemma65", "prop67", "lemma33", "p-positivity"}));
  add_campaign_options(verify, verify_args);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "one campaign per spin value, CSV output");
  sweep->add_option("--campaign", sweep_args.base.campaign, "campaign to run")
      ->check(CLI::IsMember({"lemma65", "prop67", "lemma33", "p-positivity"}))
      ->capture_default_str();
  add_campaign_options(sweep, sweep_args.base);
  sweep->add_option("--spin-min", sweep_args.spin_min, "first spin")->capture_default_str();
  sweep->add_option("--spin-max", sweep_args.spin_max, "last spin")->capture_default_str();
  sweep->add_option("--spin-steps", sweep_args.spin_steps, "number of spin values")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return Usage;
  }

  try {
    if (*constants) return run_constants(constants_args);
    if (*trace) return run_trace(trace_args);
    if (*verify) return run_verify(verify_args);
    if (*sweep) return run_sweep(sweep_args);
  } catch (const Error& e) {
    std::cerr << "kerrflow: numerical failure [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return Numerical;
  } catch (const std::exception& e) {
    std::cerr << "kerrflow: " << e.what() << "\n";
    return Usage;
  }
  return Usage;
}
