#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "percobound/phi.hpp"

using namespace percobound;
using oracles::Fraction;

namespace {

/// Rational evaluation of an already-built polynomial: exact counterpart of
/// PhiPolynomial::evaluate for p = num/den (endpoint-interior terms only).
Fraction evaluate_rational(const PhiPolynomial& poly, long long num, long long den) {
  const Fraction p(num, den);
  const Fraction pc(den - num, den);
  const unsigned n = static_cast<unsigned>(poly.n_weight_bits);
  Fraction total(0);
  for (const auto& t : poly.terms) {
    REQUIRE(t.miss_m.empty());
    for (unsigned k = 0; k < t.hit.size(); ++k)
      if (t.hit[k])
        total = total + Fraction(static_cast<long long>(t.hit[k])) * p.pow(k) *
                            pc.pow(n - k);
  }
  return total;
}

}  // namespace

TEST_CASE("boundary terms are S minus its interior") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  VertexSet S = view.ball(view.origin(), 2);
  VertexSet bt = boundary_terms(view, S);
  REQUIRE(bt.size() == 8);  // 13 vertices, interior of 5
  for (VertexId y : bt) REQUIRE_FALSE(view.interior(S).contains(y));
  // Every vertex of S is interior or a boundary term, never both.
  REQUIRE(bt.size() + view.interior(S).size() == S.size());
}

TEST_CASE("unit balls have phi equal to degree times p") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 3));
  GraphView view(g);
  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = view.ball(view.origin(), 1);
  for (double p : {0.1, 0.25, 0.5, 0.9}) {
    q.p = p;
    PhiResult r = phi_exact(q);
    REQUIRE(r.value == Catch::Approx(4.0 * p).epsilon(1e-12));
    REQUIRE(r.terms.size() == 4);
    REQUIRE_FALSE(r.degenerate);
  }
}

TEST_CASE("path balls have phi 2 p^r") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(1, 5));
  GraphView view(g);
  for (int r = 1; r <= 4; ++r) {
    PhiQuery q;
    q.view = &view;
    q.v = view.origin();
    q.S = view.ball(view.origin(), r);
    for (double p : {0.3, 0.5, 0.8}) {
      q.p = p;
      REQUIRE(phi_exact(q).value ==
              Catch::Approx(2.0 * std::pow(p, r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("tree balls have phi (b p)^r") {
  auto g = TruncatedGraph::build(GraphSpec::regular_tree(2, 5));
  GraphView view(g);
  for (int r = 1; r <= 3; ++r) {
    PhiQuery q;
    q.view = &view;
    q.v = view.origin();
    q.S = view.ball(view.origin(), r);
    q.p = 0.4;
    REQUIRE(phi_exact(q).value ==
            Catch::Approx(std::pow(2.0 * 0.4, r)).epsilon(1e-12));
  }
}

TEST_CASE("phi is 1 when the source is not interior") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 3));
  GraphView view(g);
  auto side = g->lattice_vertex({1, 0});
  PhiQuery q;
  q.view = &view;
  q.v = *side;
  q.S = VertexSet::of({*side, 0});  // the side vertex has neighbors outside S
  q.p = 0.5;
  PhiResult r = phi(q);
  REQUIRE(r.degenerate);
  REQUIRE(r.value == 1.0);
  q.method = PhiQuery::Method::mc;
  q.params.seed = 9;
  q.params.replicas = 10;
  PhiResult m = phi(q);
  REQUIRE(m.degenerate);
  REQUIRE(m.value == 1.0);
}

TEST_CASE("exact phi matches the rational oracle exactly at dyadic-friendly p") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  VertexSet S = view.ball(view.origin(), 2);
  PhiPolynomial poly = build_phi_polynomial(view, view.origin(), S);
  for (auto [num, den] : {std::pair<long long, long long>{1, 2}, {1, 4}, {3, 4}}) {
    Fraction expect = oracles::phi_rational(view, view.origin(), S, num, den);
    Fraction got = evaluate_rational(poly, num, den);
    REQUIRE(got == expect);
    // The double evaluation is also exact here: dyadic weights, small counts.
    double pd = static_cast<double>(num) / static_cast<double>(den);
    REQUIRE(poly.evaluate(pd).value == expect.to_double());
  }
}

TEST_CASE("exact phi matches the rational oracle on random graphs") {
  std::mt19937_64 gen(2026);
  for (int trial = 0; trial < 12; ++trial) {
    auto edges = oracles::random_connected_edges(gen, 9, 0.25);
    auto g = TruncatedGraph::build(GraphSpec::from_edges(edges, 0));
    GraphView view(g);
    VertexSet S = oracles::random_connected_subset(view, gen, 0, 7);
    PhiOptions opts;
    for (bool endpoint_interior : {true, false}) {
      for (bool source_open : {true, false}) {
        opts.endpoint_interior = endpoint_interior;
        opts.requires_source_open = source_open;
        oracles::PhiOracleOptions oopts;
        oopts.endpoint_interior = endpoint_interior;
        oopts.requires_source_open = source_open;
        Fraction expect = oracles::phi_rational(view, 0, S, 2, 5, oopts);
        PhiQuery q;
        q.view = &view;
        q.v = 0;
        q.S = S;
        q.p = 0.4;
        q.opts = opts;
        PhiResult r = phi_exact(q);
        INFO("trial " << trial << " endpoint_interior " << endpoint_interior
                      << " source_open " << source_open);
        REQUIRE(r.value == Catch::Approx(expect.to_double()).margin(1e-13));
      }
    }
  }
}

TEST_CASE("exact phi is nondecreasing in p on a sample instance") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  PhiPolynomial poly =
      build_phi_polynomial(view, view.origin(), view.ball(view.origin(), 2));
  double prev = 0.0;
  for (double p = 0.05; p < 1.0; p += 0.05) {
    double cur = poly.evaluate(p).value;
    REQUIRE(cur >= prev - 1e-12);
    prev = cur;
  }
}

TEST_CASE("Monte Carlo phi covers the exact value") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = view.ball(view.origin(), 2);
  q.p = 0.6;
  double exact = phi_exact(q).value;
  q.method = PhiQuery::Method::mc;
  q.params.p = 0.6;
  q.params.seed = 4242;
  q.params.replicas = 30000;
  PhiResult r = phi(q);
  REQUIRE(r.method == "mc");
  REQUIRE(r.ci.has_value());
  REQUIRE(r.ci->first <= exact);
  REQUIRE(exact <= r.ci->second);
  REQUIRE(r.terms.size() == 8);
  for (const auto& t : r.terms) REQUIRE(t.estimate.has_value());
  // The summed interval is conservative: at least as wide as any single term.
  REQUIRE(r.ci->second - r.ci->first >=
          r.terms[0].estimate->ci_high - r.terms[0].estimate->ci_low);
}

TEST_CASE("exact enumeration refuses oversized interiors") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 5));
  GraphView view(g);
  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = view.ball(view.origin(), 3);  // interior of 13
  q.p = 0.5;
  q.opts.exact_cap = 12;
  REQUIRE_THROWS_AS(phi_exact(q), parameter_error);
  q.opts.exact_cap = 13;
  REQUIRE_NOTHROW(phi_exact(q));
}

TEST_CASE("rim-touching sets: interior mode stays exact, exterior mode throws") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(1, 3));
  GraphView view(g);
  VertexSet S = view.ball(view.origin(), 3);  // touches the stored rim
  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = S;
  q.p = 0.5;
  REQUIRE(phi_exact(q).value == Catch::Approx(2.0 * std::pow(0.5, 3)));
  q.opts.endpoint_interior = false;
  REQUIRE_THROWS_AS(phi_exact(q), truncation_error);
}

TEST_CASE("query validation") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 3));
  GraphView view(g);
  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = view.ball(view.origin(), 1);
  q.p = 0.0;
  REQUIRE_THROWS_AS(phi_exact(q), parameter_error);
  q.p = 0.5;
  q.S = VertexSet::of({1, 2});  // v not in S
  REQUIRE_THROWS_AS(phi_exact(q), parameter_error);
  q.S = VertexSet();
  REQUIRE_THROWS_AS(phi_exact(q), parameter_error);
}
