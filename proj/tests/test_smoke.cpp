// Compilation smoke check: pull in every public header and exercise one
// trivial call from each module.
#include <catch2/catch_amalgamated.hpp>

#include "percobound/bounds.hpp"
#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"
#include "percobound/packing.hpp"
#include "percobound/pc.hpp"
#include "percobound/phi.hpp"
#include "percobound/report.hpp"
#include "percobound/rng.hpp"
#include "percobound/version.hpp"

using namespace percobound;

TEST_CASE("all modules link and run a trivial call each") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  REQUIRE(view.stored_size() == 41);

  PhiQuery q;
  q.view = &view;
  q.v = view.origin();
  q.S = view.ball(view.origin(), 1);
  q.p = 0.5;
  PhiResult pr = phi(q);
  REQUIRE(pr.value == Catch::Approx(2.0));

  REQUIRE(connection_lower_bound(0.9, 0.5, 0.0) == Catch::Approx(0.8));
  REQUIRE(lemma_bound(0.1, 0.5, 1) == Catch::Approx(0.65));

  InductionReport ir = induction_check(3, 0.5, 0.1, 42);
  REQUIRE(ir.pass);

  ordered_json j = json_of(Estimate::from_counts(5, 10, 0.99));
  REQUIRE(j["successes"] == 5);
  REQUIRE_FALSE(std::string(kVersion).empty());
}
