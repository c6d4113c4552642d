#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kerrflow/cli.hpp"
#include "kerrflow/io.hpp"
#include "kerrflow/kerrflow.hpp"

using namespace kerrflow;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("kerrflow_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

// removes this process's scratch directory at exit
struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("kerrflow_cli_test_" + std::to_string(::getpid())), ec);
  }
} scratch_cleanup;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto err_path = scratch_dir() / "stderr.txt";
  const std::string cmd = std::string(KERRFLOW_CLI_PATH) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

json schema() {
  std::ifstream in(KERRFLOW_SCHEMA_PATH);
  return json::parse(in);
}

void expect_required_keys(const json& doc, const std::string& def) {
  const json s = schema();
  ASSERT_TRUE(s["$defs"].contains(def)) << def;
  for (const auto& key : s["$defs"][def]["required"]) {
    EXPECT_TRUE(doc.contains(key.get<std::string>())) << def << " lacks " << key;
  }
}

}  // namespace

TEST(CliConstants, Schwarzschild) {
  const auto r = run("constants --mass 1 --spin 0");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["r_plus"].get<double>(), 2.0);
  EXPECT_NEAR(j["T_H"].get<double>(), 1.0 / (8.0 * std::numbers::pi), 1e-15);
  EXPECT_DOUBLE_EQ(j["Omega_H"].get<double>(), 0.0);
  EXPECT_TRUE(j["kappa_minus"].is_null());
  expect_required_keys(j, "constants_report");
  expect_required_keys(j, "params");
}

TEST(CliConstants, MatchesLibrary) {
  for (const double a : {0.5, 0.3, -0.7, 0.999}) {
    const auto r = run("constants --mass 1 --spin " + io::format_double(a));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    const auto p = derive_constants(1.0, a);
    EXPECT_DOUBLE_EQ(j["r_plus"].get<double>(), p.r_plus);
    EXPECT_DOUBLE_EQ(j["r_minus"].get<double>(), p.r_minus);
    EXPECT_DOUBLE_EQ(j["kappa_plus"].get<double>(), p.kappa_plus);
    EXPECT_DOUBLE_EQ(j["kappa_minus"].get<double>(), p.kappa_minus);
    EXPECT_DOUBLE_EQ(j["Omega_H"].get<double>(), p.Omega_H);
    EXPECT_DOUBLE_EQ(j["T_H"].get<double>(), p.T_H);
  }
}

TEST(CliConstants, MassScaling) {
  const auto j = json::parse(run("constants --mass 2.5 --spin 1").out);
  EXPECT_NEAR(j["r_plus"].get<double>(), 2.5 + std::sqrt(2.5 * 2.5 - 1.0), 1e-14);
  EXPECT_DOUBLE_EQ(j["ergosphere_equatorial"].get<double>(), 5.0);
}

TEST(CliConstants, InvalidParams) {
  const auto r = run("constants --mass 1 --spin 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("subextreme range required"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run("constants --mass 1 --spin -1.5").code, 2);
  EXPECT_EQ(run("constants --mass 0 --spin 0").code, 2);
  EXPECT_EQ(run("constants --mass -1 --spin 0").code, 2);
}

TEST(CliUsage, MalformedFlags) {
  for (const char* args : {"", "bogus", "constants --spin", "constants --spin abc", "trace --bogus",
                           "trace --principal sideways", "trace --direction up --principal in", "verify",
                           "verify lemma99", "verify lemma65 --n 0", "sweep --campaign nope",
                           "trace --principal in --xi-r 1", "trace --trapped --xi-r 1 --xi-phi 1",
                           "sweep --spin-steps 0"}) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 2) << args;
    EXPECT_FALSE(r.err.empty()) << args;
  }
  EXPECT_NE(run("trace --bogus").err.find("Usage"), std::string::npos);
}

TEST(CliUsage, HelpAndVersion) {
  const auto help = run("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"constants", "trace", "verify", "sweep"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
  const auto version = run("--version");
  EXPECT_EQ(version.code, 0);
  EXPECT_NE(version.out.find("schema " + std::to_string(io::schema_version)), std::string::npos);
}

TEST(CliTrace, PrincipalIngoingReachesScriPast) {
  const auto r = run("trace --principal in --spin 0.9 --direction past");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_GE(lines.size(), 3u);
  const auto summary = json::parse(lines.back());
  EXPECT_EQ(summary["fate"], "ScriPast");
  EXPECT_EQ(summary["direction"], "past");
  EXPECT_EQ(summary["samples"].get<std::size_t>(), lines.size() - 1);
  EXPECT_LT(summary["drift"]["residual"].get<double>(), 1e-8);
  EXPECT_LT(summary["drift"]["xi_t"].get<double>(), 1e-12);
  expect_required_keys(summary, "trajectory_summary");
  expect_required_keys(summary["final"], "sample");

  // radius grows monotonically along the recorded samples while in the r chart
  double r_prev = 0.0;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const auto sample = json::parse(lines[i]);
    expect_required_keys(sample, "sample");
    const std::string chart = sample["chart"];
    if (chart.rfind("BL_I", 0) != 0) break;
    const double r_now = sample["coords"][1];
    EXPECT_GE(r_now, r_prev);
    r_prev = r_now;
  }
}

TEST(CliTrace, PrincipalFutureFates) {
  const auto in = json::parse(lines_of(run("trace --principal in --spin 0.9 --direction future").out).back());
  EXPECT_EQ(in["fate"], "HorizonFuture");
  const auto out = json::parse(lines_of(run("trace --principal out --spin 0.5 --direction future").out).back());
  EXPECT_EQ(out["fate"], "ScriFuture");
}

TEST(CliTrace, TrappedFromKSampler) {
  const auto p = derive_constants(1.0, 0.5);
  const double theta = 1.2, xi_theta = 0.3, xi_phi = 0.8;
  const auto k = sample_trapped(p, theta, xi_theta, xi_phi, Branch::Plus);
  ASSERT_TRUE(k.has_value());
  const double r_hat = k->point.x[1];

  const auto out = scratch_dir() / "trapped.jsonl";
  const auto r = run("trace --spin 0.5 --trapped --theta 1.2 --xi-theta 0.3 --xi-phi 0.8 --output " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  // the summary also goes to stdout when writing a file
  const auto summary = json::parse(r.out);
  EXPECT_EQ(summary["fate"], "Trapped");
  EXPECT_EQ(summary["stop"], "budget");
  EXPECT_NEAR(summary["r_min"].get<double>(), r_hat, 1e-6);
  EXPECT_NEAR(summary["r_max"].get<double>(), r_hat, 1e-6);
  const auto file_lines = lines_of(slurp(out));
  EXPECT_EQ(json::parse(file_lines.back()), summary);

  // the same point given as explicit components
  const auto explicit_data = run("trace --spin 0.5 --r " + io::format_double(r_hat) +
                                 " --theta 1.2 --xi-r 0 --xi-theta 0.3 --xi-phi 0.8 --direction future");
  ASSERT_EQ(explicit_data.code, 0) << explicit_data.err;
  EXPECT_EQ(json::parse(lines_of(explicit_data.out).back())["fate"], "Trapped");
}

TEST(CliTrace, CsvFormat) {
  const auto out = scratch_dir() / "trace.csv";
  const auto r = run("trace --spin 0.7 --r 5 --theta 1 --xi-r 1 --xi-theta 0.2 --xi-phi 0.3 --format csv --output " +
                     out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(slurp(out));
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines.front(), schema()["$defs"]["trajectory_csv"]["const"].get<std::string>());
  EXPECT_EQ(json::parse(r.out)["samples"].get<std::size_t>(), lines.size() - 1);
}

TEST(CliTrace, InvalidData) {
  // inside the horizon, on the axis, and a zero spatial covector are input errors
  EXPECT_EQ(run("trace --spin 0.7 --r 1 --xi-r 1").code, 2);
  EXPECT_EQ(run("trace --spin 0.7 --r 5 --theta 0 --xi-r 1").code, 2);
  EXPECT_EQ(run("trace --spin 0.7 --r 5 --xi-r 0 --xi-theta 0 --xi-phi 0").code, 2);
  EXPECT_EQ(run("trace --spin 1 --principal in").code, 2);
}

TEST(CliTrace, IntegratorFailureExit3) {
  const auto r = run("trace --principal in --spin 0.9 --max-steps 10");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("StepBudgetExceeded"), std::string::npos) << r.err;
  EXPECT_EQ(run("trace --principal in --spin 0.9 --s-max 0").code, 3);
}

TEST(CliVerify, Lemma65) {
  const auto out = scratch_dir() / "lemma65.json";
  const auto r = run("verify lemma65 --spin 0.999 --n 100000 --seed 7 --output " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(slurp(out));
  EXPECT_EQ(report["violations"], 0);
  EXPECT_EQ(report["validated"], 100000);
  EXPECT_TRUE(report["ok"].get<bool>());
  EXPECT_LE(report["worst_margin"].get<double>(), 0.0);
  expect_required_keys(report, "search_report");
}

TEST(CliVerify, PPositivity) {
  const auto r = run("verify p-positivity --spin 0.5");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["violations"], 0);
}

TEST(CliVerify, Prop67) {
  const auto r = run("verify prop67 --spin 0.9 --n 10000");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["violations"], 0);
  EXPECT_GT(report["validated"].get<int>(), 0);
}

TEST(CliVerify, Lemma33Small) {
  const auto r = run("verify lemma33 --spin 0.7 --n 200 --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["violations"], 0);
  EXPECT_LT(report["undecided"].get<int>(), 2);
}

TEST(CliVerify, NumericalFailureExit3) {
  EXPECT_EQ(run("verify lemma33 --spin 0.7 --n 10 --s-max 0").code, 3);
}

TEST(CliVerify, ExitCodeContract) {
  SearchReport r;
  r.ok = true;
  EXPECT_EQ(cli::verify_exit_code(r), 0);
  r.ok = false;
  EXPECT_EQ(cli::verify_exit_code(r), 3);
  r.violations = 1;
  EXPECT_EQ(cli::verify_exit_code(r), 4);
  r.ok = true;
  EXPECT_EQ(cli::verify_exit_code(r), 4);
}

TEST(CliVerify, DeterministicModuloWallTime) {
  auto strip = [](json j) {
    j.erase("wall_time_s");
    return j;
  };
  const auto a = json::parse(run("verify prop67 --spin 0.6 --n 3000 --seed 11 --jobs 1").out);
  const auto b = json::parse(run("verify prop67 --spin 0.6 --n 3000 --seed 11 --jobs 3").out);
  EXPECT_EQ(strip(a), strip(b));
}

TEST(CliSweep, NineSpinsDeterministic) {
  const auto dir = scratch_dir();
  const auto first = dir / "sweep1.csv";
  const auto second = dir / "sweep2.csv";
  const std::string args = "sweep --campaign lemma65 --spin-min 0.1 --spin-max 0.9 --spin-steps 9 --n 10000 --seed 5";
  ASSERT_EQ(run(args + " --output " + first.string()).code, 0);
  ASSERT_EQ(run(args + " --jobs 2 --output " + second.string()).code, 0);
  const std::string body = slurp(first);
  EXPECT_EQ(body, slurp(second));

  const auto lines = lines_of(body);
  ASSERT_EQ(lines.size(), 10u);
  EXPECT_EQ(lines[0], io::sweep_header);
  EXPECT_EQ(lines[0], schema()["$defs"]["sweep_csv"]["const"].get<std::string>());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cells;
    std::stringstream row(lines[i]);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 15u);
    EXPECT_EQ(cells[0], "lemma65");
    EXPECT_NEAR(std::stod(cells[2]), 0.1 * static_cast<double>(i), 1e-15);
    EXPECT_EQ(cells[5], "0");
    EXPECT_EQ(cells[14], "ok");
  }
}

TEST(CliSweep, SinglePointMatchesVerify) {
  const auto sweep = lines_of(run("sweep --campaign prop67 --spin-min 0.4 --spin-steps 1 --n 2000 --seed 9").out);
  ASSERT_EQ(sweep.size(), 2u);
  const auto report = json::parse(run("verify prop67 --spin 0.4 --n 2000 --seed 9").out);

  SearchReport r;
  r.campaign = report["campaign"];
  r.M = report["params"]["M"];
  r.a = report["params"]["a"];
  r.n = report["n"];
  r.seed = report["seed"];
  r.violations = report["violations"];
  if (!report["worst_margin"].is_null()) r.worst_margin = report["worst_margin"].get<double>();
  r.validated = report["validated"];
  r.attempts = report["attempts"];
  r.unresolved = report["unresolved"];
  r.excluded = report["excluded"];
  r.undecided = report["undecided"];
  r.errors = report["errors"];
  r.ok = report["ok"];
  EXPECT_EQ(sweep[1], io::sweep_row(r, "ok"));
}

TEST(CliSweep, FailedRowsExit5) {
  const auto r = run("sweep --campaign lemma33 --spin-min 0.2 --spin-max 0.4 --spin-steps 2 --n 5 --s-max 0");
  EXPECT_EQ(r.code, 5);
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_NE(lines[1].find("error:TolFailure"), std::string::npos) << lines[1];
  EXPECT_EQ(run("sweep --spin-max 1.0 --spin-steps 3 --n 10").code, 2);
}
