#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "percobound/bounds.hpp"

using namespace percobound;

TEST_CASE("the k-step bound evaluates its closed form") {
  REQUIRE(lemma_bound(0.1, 0.5, 1) == Catch::Approx(0.65).epsilon(1e-14));
  REQUIRE(lemma_bound(0.1, 0.5, 10) == Catch::Approx(0.10107421875).epsilon(1e-14));
  REQUIRE(lemma_bound(0.3, 1.0, 5) == 0.0);
  REQUIRE(lemma_bound(0.0, 0.5, 2) == Catch::Approx(0.25));
  // k = 0 leaves the bound vacuous but still well defined.
  REQUIRE(lemma_bound(0.1, 0.5, 0) == Catch::Approx(1.2));
  REQUIRE_THROWS_AS(lemma_bound(0.1, 0.0, 3), parameter_error);
  REQUIRE_THROWS_AS(lemma_bound(1.0, 0.5, 3), parameter_error);
  REQUIRE_THROWS_AS(lemma_bound(-0.1, 0.5, 3), parameter_error);
}

TEST_CASE("grid minimization with a stub oracle") {
  TheoremBoundInput inp = default_theorem_grid(0.7, 0.593);
  REQUIRE(inp.grid_p1.size() == 8);
  REQUIRE(inp.grid_p1.front() == Catch::Approx(0.603));
  REQUIRE(inp.grid_p1.back() == Catch::Approx(0.69));
  int calls = 0;
  inp.oracle = [&](double, double) -> std::uint64_t {
    ++calls;
    return 6;
  };
  inp.prune = false;
  TheoremBoundResult full = theorem_bound(inp);

  // Reference minimum computed independently from the substituted form.
  double expect = std::numeric_limits<double>::infinity();
  for (double delta : inp.grid_delta)
    for (double eps : inp.grid_eps)
      for (double p1 : inp.grid_p1) {
        double r = std::pow(0.3 / (1.0 - p1), 1.0 - eps);
        expect = std::min(expect, delta * r / (1.0 - r) + (1.0 + delta) * std::pow(r, 6));
      }
  REQUIRE(full.value == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(full.argmin.evaluated);
  REQUIRE(full.argmin.value == full.value);
  REQUIRE(full.points.size() == 8 * 4 * 4);
  int full_calls = calls;
  REQUIRE(full_calls <= 8 * 4 * 4);

  SECTION("pruning preserves the minimum and saves oracle calls") {
    calls = 0;
    inp.prune = true;
    TheoremBoundResult pruned = theorem_bound(inp);
    REQUIRE(pruned.value == full.value);
    REQUIRE(calls < full_calls);
    bool saw_pruned = false;
    for (const auto& pt : pruned.points)
      if (pt.pruned) {
        saw_pruned = true;
        REQUIRE(pt.value >= pruned.value);  // the floor alone already loses
      }
    REQUIRE(saw_pruned);
  }

  SECTION("invalid p1 points are skipped with a warning") {
    inp.grid_p1 = {0.65, 0.75};  // 0.75 >= p
    inp.prune = false;
    TheoremBoundResult res = theorem_bound(inp);
    REQUIRE(res.warnings.size() == 16);  // once per (eps, delta) combination
    int skipped = 0;
    for (const auto& pt : res.points)
      if (pt.skipped) ++skipped;
    REQUIRE(skipped == 16);
    REQUIRE(std::isfinite(res.value));
  }

  SECTION("an entirely invalid grid throws") {
    inp.grid_p1 = {0.99};
    REQUIRE_THROWS_AS(theorem_bound(inp), parameter_error);
  }
}

TEST_CASE("the oracle memo deduplicates repeated (delta, c) pairs") {
  TheoremBoundInput inp;
  inp.p = 0.7;
  inp.ptilde_c = 0.5;
  inp.grid_p1 = {0.6};
  inp.grid_eps = {0.1};
  inp.grid_delta = {0.1, 0.1, 0.1};  // duplicates on purpose
  inp.prune = false;
  int calls = 0;
  inp.oracle = [&](double, double) -> std::uint64_t {
    ++calls;
    return 3;
  };
  theorem_bound(inp);
  REQUIRE(calls == 1);
}

TEST_CASE("independence model obeys both inequalities across a parameter grid") {
  for (double eps : {0.0, 0.1, 0.3}) {
    for (double c : {0.2, 0.5, 0.8}) {
      for (std::uint64_t k : {1ull, 3ull, 10ull}) {
        InductionReport rep = induction_check(k, c, eps, 1234 + k);
        INFO("eps " << eps << " c " << c << " k " << k);
        REQUIRE(rep.pass);
        REQUIRE(rep.instances == 26);
        REQUIRE(rep.min_slack_bound >= -1e-12);
        REQUIRE(rep.min_slack_intermediate >= -1e-12);
      }
    }
  }

  SECTION("the extremal instance is tight when eps = 0") {
    InductionReport rep = induction_check(4, 0.5, 0.0, 9);
    REQUIRE(rep.pass);
    REQUIRE(rep.min_slack_intermediate == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(rep.min_slack_bound == Catch::Approx(0.0).margin(1e-15));
  }

  SECTION("domain checks") {
    REQUIRE_THROWS_AS(induction_check(0, 0.5, 0.1, 1), parameter_error);
    REQUIRE_THROWS_AS(induction_check(21, 0.5, 0.1, 1), parameter_error);
    REQUIRE_THROWS_AS(induction_check(3, 1.0, 0.1, 1), parameter_error);
  }
}

TEST_CASE("end-to-end verification on a small supercritical lattice") {
  GraphView view(TruncatedGraph::build(GraphSpec::lattice(2, 20)));
  VertexSet S = lattice_segment(view, 3);
  VerifyOptions opt;
  opt.eps = 0.2;
  opt.c = 0.5;
  opt.d_min = 1;
  opt.d_max = 2;
  opt.r_proxy = 8;
  opt.params.p = 0.7;
  opt.params.seed = 31337;
  opt.params.replicas = 3000;
  opt.ptilde_c = 0.593;
  opt.grid_p1_count = 3;
  opt.grid_eps = {0.1, 0.2};
  opt.grid_delta = {0.1, 0.2};

  BoundReport report = verify_disconnection(view, S, opt);
  REQUIRE_FALSE(report.degenerate);
  REQUIRE(report.verdict == "consistent");
  REQUIRE(report.radii.front() == 3);  // segment ends at distance 2
  REQUIRE(report.radii.back() == 20);
  // Disconnection is pathwise nondecreasing in the radius.
  for (std::size_t i = 1; i < report.disconnection.size(); ++i)
    REQUIRE(report.disconnection[i].point >= report.disconnection[i - 1].point);
  REQUIRE(report.empirical.point == report.disconnection.back().point);
  REQUIRE(report.certificate.k >= 1);
  REQUIRE(report.lemma_rhs ==
          Catch::Approx(lemma_bound(0.2, 0.5, report.certificate.k)));
  REQUIRE(std::isfinite(report.theorem.value));
  REQUIRE(report.rhs_min == std::min(report.lemma_rhs, report.theorem.value));
  REQUIRE(report.empirical.ci_high <= report.rhs_min + report.slack);

  SECTION("byte-level determinism of the whole report") {
    BoundReport again = verify_disconnection(view, S, opt);
    REQUIRE(again.empirical.successes == report.empirical.successes);
    REQUIRE(again.certificate.k == report.certificate.k);
    REQUIRE(again.theorem.value == report.theorem.value);
    REQUIRE(again.verdict == report.verdict);
  }

  SECTION("an empty S degenerates instead of comparing") {
    BoundReport deg = verify_disconnection(view, VertexSet(), opt);
    REQUIRE(deg.degenerate);
    REQUIRE(deg.verdict == "degenerate");
    REQUIRE_FALSE(deg.diagnostics.empty());
  }

  SECTION("ptilde_c is required to sit below p") {
    VerifyOptions bad = opt;
    bad.ptilde_c = 0.8;
    REQUIRE_THROWS_AS(verify_disconnection(view, S, bad), parameter_error);
  }
}
