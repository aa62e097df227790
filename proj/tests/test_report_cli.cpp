#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "percobound/report.hpp"

using namespace percobound;

namespace {

std::string cli_path() { return PERCOBOUND_CLI_PATH; }

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = "cli_stdout.tmp";
  const std::string err_path = "cli_stderr.tmp";
  const std::string cmd =
      cli_path() + " " + args + " > " + out_path + " 2> " + err_path;
  int status = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = status;
#else
  r.exit_code = WEXITSTATUS(status);
#endif
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

}  // namespace

TEST_CASE("estimates serialize with exact counts and interval") {
  Estimate e = Estimate::from_counts(25, 100, 0.95);
  ordered_json j = json_of(e);
  REQUIRE(j["successes"] == 25);
  REQUIRE(j["replicas"] == 100);
  REQUIRE(j["point"] == 0.25);
  REQUIRE(j["ci_low"].get<double>() < 0.25);
  REQUIRE(j["ci_high"].get<double>() > 0.25);
}

TEST_CASE("report envelopes start with tool, version, kind and carry no timestamp") {
  ordered_json j = wrap_report("phi", ordered_json{{"x", 1}});
  auto it = j.begin();
  REQUIRE(it.key() == "tool");
  ++it;
  REQUIRE(it.key() == "version");
  REQUIRE(j["version"] == kVersion);
  ++it;
  REQUIRE(it.key() == "kind");
  std::string dumped = j.dump();
  REQUIRE(dumped.find("time") == std::string::npos);
  REQUIRE(dumped.find("date") == std::string::npos);
}

TEST_CASE("CSV writers emit a header line first") {
  PhiResult pr;
  pr.terms.push_back({7, 0.25, std::nullopt});
  std::string csv = csv_phi_terms(pr);
  REQUIRE(csv.rfind("y,value,ci_low,ci_high\n", 0) == 0);
  REQUIRE(csv.find("\n7,0.25,0.25,0.25\n") != std::string::npos);

  PcBoundResult pc;
  pc.probes.push_back({0.25, true, 3});
  REQUIRE(csv_pc_probes(pc).rfind("p,certified,max_radius\n", 0) == 0);
  REQUIRE(csv_pc_probes(pc).find("0.25,1,3") != std::string::npos);
}

TEST_CASE("degenerate verification reports omit the comparison block") {
  BoundReport r;
  r.degenerate = true;
  r.verdict = "degenerate";
  r.diagnostics.push_back("S is empty");
  ordered_json j = json_of(r);
  REQUIRE(j["degenerate"] == true);
  REQUIRE_FALSE(j.contains("empirical"));
  REQUIRE_FALSE(j.contains("theorem"));
}

TEST_CASE("CLI: exact phi on the unit ball needs no seed and prints 2.0") {
  RunResult r = run_cli("phi --graph lattice:2 --p 0.5 --ball 1");
  REQUIRE(r.exit_code == 0);
  ordered_json j = ordered_json::parse(r.out);
  REQUIRE(j["kind"] == "phi");
  REQUIRE(j["result"]["value"] == 2.0);
  REQUIRE(j["result"]["method"] == "exact");
}

TEST_CASE("CLI: sampling without a seed is a parameter error") {
  RunResult r = run_cli("phi --graph lattice:2 --p 0.5 --ball 2 --method mc");
  REQUIRE(r.exit_code == 1);
  REQUIRE(r.err.find("--seed is required") != std::string::npos);
}

TEST_CASE("CLI: oversized requests exit with the truncation code") {
  RunResult r = run_cli("phi --graph lattice:1 --rmax 3 --p 0.5 --ball 5");
  REQUIRE(r.exit_code == 2);
  REQUIRE(r.err.find("truncation") != std::string::npos);
}

TEST_CASE("CLI: verification exits 3 only on violation candidates") {
  // A healthy run on a small lattice: consistent, exit 0.
  RunResult ok = run_cli(
      "verify-bound --graph lattice:2 --rmax 14 --p 0.7 --seed 7 "
      "--replicas 1500 --segment-length 2 --dmax 2 --rproxy 5 "
      "--grid-ptilde 0.593 --grid-p1 2 --grid-eps 0.2 --grid-delta 0.2");
  REQUIRE(ok.exit_code == 0);
  ordered_json j = ordered_json::parse(ok.out);
  REQUIRE(j["report"]["verdict"] == "consistent");
}

TEST_CASE("CLI: verification of an empty set exits 1 with a degenerate report") {
  RunResult r = run_cli(
      "verify-bound --graph lattice:2 --rmax 8 --p 0.7 --seed 1 "
      "--replicas 100 --segment-length 0");
  REQUIRE(r.exit_code == 1);
  ordered_json j = ordered_json::parse(r.out);
  REQUIRE(j["report"]["degenerate"] == true);
  REQUIRE(j["report"]["verdict"] == "degenerate");
}

TEST_CASE("CLI: malformed invocations exit 1, help exits 0") {
  REQUIRE(run_cli("phi --graph nosuch:2 --ball 1").exit_code == 1);
  REQUIRE(run_cli("phi --not-a-flag").exit_code == 1);
  REQUIRE(run_cli("").exit_code == 1);  // a subcommand is required
  REQUIRE(run_cli("--help").exit_code == 0);
  REQUIRE(run_cli("phi --help").exit_code == 0);
  REQUIRE(run_cli("--version").exit_code == 0);
}

TEST_CASE("CLI: identical Monte Carlo invocations are byte-identical") {
  const std::string args =
      "simulate --graph lattice:2 --rmax 10 --p 0.6 --seed 99 --replicas 800 "
      "--set 0 --rlist 3,6,10";
  RunResult a = run_cli(args);
  RunResult b = run_cli(args);
  REQUIRE(a.exit_code == 0);
  REQUIRE(a.out == b.out);
  REQUIRE_FALSE(a.out.empty());
}

TEST_CASE("CLI: config files supply defaults but flags win") {
  {
    std::ofstream cfg("cli_cfg.tmp");
    cfg << "[phi]\n";
    cfg << "graph=\"lattice:2\"\n";
    cfg << "p=0.25\n";
    cfg << "ball=1\n";
  }
  RunResult from_cfg = run_cli("phi --config cli_cfg.tmp");
  REQUIRE(from_cfg.exit_code == 0);
  REQUIRE(ordered_json::parse(from_cfg.out)["result"]["value"] == 1.0);

  RunResult overridden = run_cli("phi --config cli_cfg.tmp --p 0.5");
  REQUIRE(overridden.exit_code == 0);
  REQUIRE(ordered_json::parse(overridden.out)["result"]["value"] == 2.0);
  std::remove("cli_cfg.tmp");
}

TEST_CASE("CLI: --out and --csv write files instead of stdout") {
  const std::string args =
      "phi --graph lattice:2 --p 0.5 --ball 2 --out cli_out.tmp --csv cli_csv.tmp";
  RunResult r = run_cli(args);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.empty());
  std::ifstream out("cli_out.tmp");
  REQUIRE(out.good());
  ordered_json j;
  out >> j;
  REQUIRE(j["result"]["terms"].size() == 8);
  std::ifstream csv("cli_csv.tmp");
  std::string header;
  std::getline(csv, header);
  REQUIRE(header == "y,value,ci_low,ci_high");
  std::remove("cli_out.tmp");
  std::remove("cli_csv.tmp");
}
