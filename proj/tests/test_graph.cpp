#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "percobound/graph.hpp"

using namespace percobound;

TEST_CASE("square lattice truncation has the right ball sizes") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  // |B(r)| = 2r^2 + 2r + 1 in the square lattice.
  REQUIRE(view.stored_size() == 41);
  REQUIRE(view.ball(view.origin(), 1).size() == 5);
  REQUIRE(view.ball(view.origin(), 2).size() == 13);
  REQUIRE(view.ball(view.origin(), 3).size() == 25);
  REQUIRE(view.origin() == 0);

  SECTION("interior strips one layer from a ball") {
    VertexSet b2 = view.ball(view.origin(), 2);
    VertexSet inner = view.interior(b2);
    REQUIRE(inner == view.ball(view.origin(), 1));
  }

  SECTION("rim vertices are incomplete, inner vertices complete") {
    int complete = 0;
    for (std::uint32_t d = 0; d < view.stored_size(); ++d)
      if (g->complete(d)) ++complete;
    REQUIRE(complete == 25);  // exactly B(origin, 3)
  }

  SECTION("coordinate lookup round-trips") {
    auto v = g->lattice_vertex({2, -1});
    REQUIRE(v.has_value());
    REQUIRE(g->label(g->dense_of(*v)) == "(2,-1)");
    REQUIRE_FALSE(g->lattice_vertex({5, 0}).has_value());
    REQUIRE_THROWS_AS(g->lattice_vertex({1, 2, 3}), parameter_error);
  }

  SECTION("ball beyond the stored radius fails loudly") {
    // The full stored ball is still exact; one step further is not.
    REQUIRE(view.ball(view.origin(), 4).size() == 41);
    REQUIRE_THROWS_AS(view.ball(view.origin(), 5), truncation_error);
  }
}

TEST_CASE("regular tree truncation") {
  auto g = TruncatedGraph::build(GraphSpec::regular_tree(2, 3));
  GraphView view(g);
  REQUIRE(view.stored_size() == 15);  // 1 + 2 + 4 + 8
  REQUIRE(view.ball(view.origin(), 2).size() == 7);
  VertexSet b2 = view.ball(view.origin(), 2);
  REQUIRE(view.interior(b2) == view.ball(view.origin(), 1));
  // The root has degree 2 (it is the tree's root, not an interior vertex of
  // an unrooted tree); children have degree 3.
  REQUIRE(view.neighbors(view.origin()).size() == 2);
}

TEST_CASE("puncturing removes a vertex and its incident structure") {
  auto g = TruncatedGraph::build(GraphSpec::lattice(2, 4));
  GraphView view(g);
  auto right = g->lattice_vertex({1, 0});
  REQUIRE(right.has_value());
  GraphView cut = view.puncture({{*right, 0}});
  REQUIRE(cut.live_count() == view.live_count() - 1);
  REQUIRE_FALSE(cut.is_live(*right));
  REQUIRE(view.is_live(*right));  // original view untouched
  // Neighborhoods no longer report the removed vertex.
  VertexSet nbrs = cut.neighbors(view.origin());
  REQUIRE(nbrs.size() == 3);
  REQUIRE_FALSE(nbrs.contains(*right));
  // Distances must route around the hole.
  auto dist = cut.distances_from(cut.origin(), 10);
  auto two_right = g->lattice_vertex({2, 0});
  REQUIRE(dist[g->dense_of(*two_right)] == 4);
}

TEST_CASE("edge-list graphs build and expose inner boundaries") {
  // Path 0-1-2-3 plus a pendant 4 on vertex 1.
  auto g = TruncatedGraph::build(GraphSpec::from_edges(
      {{0, 1}, {1, 2}, {2, 3}, {1, 4}}, 0));
  GraphView view(g);
  REQUIRE(view.stored_size() == 5);
  VertexSet S = VertexSet::of({0, 1, 4});
  REQUIRE(view.interior(S) == VertexSet::of({0, 4}));
  REQUIRE(view.inner_boundary(0, 1) == VertexSet::of({1}));
}

TEST_CASE("file graphs parse, dedupe, and respect the truncation radius") {
  const std::string path = "test_graph_tmp.txt";
  {
    std::ofstream out(path);
    out << "vertices 7 origin 0\n";
    out << "# comment line\n";
    out << "0 1\n1 2\n2 3\n3 4\n";
    out << "7 8\n";  // separate component: dropped with a count
    out << "\n";
  }
  auto g = TruncatedGraph::build(GraphSpec::from_file(path, 2));
  GraphView view(g);
  REQUIRE(view.stored_size() == 3);           // 0, 1, 2 within radius 2
  REQUIRE(g->info().dropped_truncated == 1);  // 3 touches the kept ball
  REQUIRE(g->info().dropped_disconnected == 3);  // 4 (behind the rim), 7, 8
  REQUIRE(view.neighbors(0) == VertexSet::of({1}));

  SECTION("duplicate edges are rejected") {
    std::ofstream out(path);
    out << "vertices 2 origin 0\n0 1\n1 0\n";
    out.close();
    REQUIRE_THROWS_AS(TruncatedGraph::build(GraphSpec::from_file(path, 2)),
                      parse_error);
  }
  std::remove(path.c_str());
}

TEST_CASE("vertex sets behave like ordered sets") {
  VertexSet s = VertexSet::of({3, 1, 2, 1});
  REQUIRE(s.size() == 3);
  REQUIRE(s.contains(1));
  REQUIRE_FALSE(s.contains(4));
  std::vector<VertexId> order(s.begin(), s.end());
  REQUIRE(order == std::vector<VertexId>{1, 2, 3});
}
