#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "qgraph/graph.hpp"

using namespace qgraph;

namespace {

bool has(const std::vector<Violation>& vs, const std::string& subject, const std::string& condition) {
  for (const auto& v : vs) {
    if (v.subject == subject && v.condition == condition) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate reports every violated invariant") {
  GraphSpec s;
  s.u = 1.0;
  s.vertices = {"a", "b", "b"};
  s.edges = {{"e", 0.5, "a", "b", {}}, {"e", 2.0, "a", "zz", {}}, {"f", -1.0, "a", "b", {}}};
  const auto vs = validate(s);
  CHECK(has(vs, "edge:e", "LB"));
  CHECK(has(vs, "vertex:b", "duplicate-id"));
  CHECK(has(vs, "edge:e", "duplicate-id"));
  CHECK(has(vs, "edge:e", "endpoint"));
  CHECK(has(vs, "edge:f", "length"));
  CHECK_THROWS_AS(MetricGraph::build(s), InputError);

  GraphSpec bad_u;
  bad_u.u = 0.0;
  bad_u.vertices = {"a"};
  CHECK(has(validate(bad_u), "graph", "u"));
}

TEST_CASE("valid fixtures pass validation") {
  for (const char* name : {"interval_pi.json", "star3.json", "loop_multi.json", "path100.json", "half_line.json"}) {
    CHECK(validate(read_graph_file(fixtures::path(name))).empty());
  }
  const auto vs = validate(read_graph_file(fixtures::path("lb_violation.json")));
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].subject == "edge:short");
}

TEST_CASE("a loop contributes two ends and stars are ordered by edge index") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  const auto a = *g.find_vertex("a");
  CHECK(g.degree(a) == 4);
  const auto& ends = g.star(a).ends;
  CHECK(ends[0] == EdgeEnd{0, End::Init});
  CHECK(ends[1] == EdgeEnd{0, End::Term});
  CHECK(ends[2] == EdgeEnd{1, End::Init});
  CHECK(ends[3] == EdgeEnd{2, End::Init});
  for (std::size_t i = 0; i < ends.size(); ++i) {
    CHECK(g.slot_of(ends[i]) == i);
    CHECK(g.vertex_of(ends[i]) == a);
  }
  CHECK(g.edge(0).is_loop());
  CHECK(g.total_length() == doctest::Approx(6.0));
}

TEST_CASE("path metric on multigraphs") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  const Point a = Point::vertex(*g.find_vertex("a")), b = Point::vertex(*g.find_vertex("b"));
  CHECK(distance(g, a, b) == doctest::Approx(1.5));
  // Around the loop either way.
  CHECK(distance(g, a, g.point(0, 0.5)) == doctest::Approx(0.5));
  CHECK(distance(g, a, g.point(0, 1.5)) == doctest::Approx(0.5));
  // Midpoint of the long parallel edge is reached through b.
  CHECK(distance(g, a, g.point(2, 2.0)) == doctest::Approx(2.0));
  CHECK(distance(g, g.point(1, 0.75), g.point(2, 1.25)) == doctest::Approx(2.0));
  CHECK(distance(g, g.point(1, 0.25), g.point(1, 1.0)) == doctest::Approx(0.75));
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  std::vector<Point> pts = {Point::vertex(0), Point::vertex(1)};
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    for (double f : {0.1, 0.4, 0.8}) pts.push_back(g.point(e, f * g.edge(e).length));
  }
  for (const auto& x : pts) {
    for (const auto& y : pts) {
      CHECK(distance(g, x, y) == doctest::Approx(distance(g, y, x)));
      for (const auto& z : pts) CHECK(distance(g, x, z) <= distance(g, x, y) + distance(g, y, z) + 1e-12);
    }
  }
}

TEST_CASE("ball volumes") {
  const MetricGraph g = fixtures::graph("path100.json");
  const Point end = Point::vertex(0);
  CHECK(ball_volume(g, end, 2.5) == doctest::Approx(2.5));
  CHECK(ball_volume(g, end, 1000.0) == doctest::Approx(100.0));
  CHECK(ball_volume(g, Point::vertex(50), 3.0) == doctest::Approx(6.0));
  CHECK(ball_volume(g, g.point(0, 0.5), 1.0) == doctest::Approx(1.5));

  const MetricGraph star = fixtures::graph("star3.json");
  CHECK(ball_volume(star, Point::vertex(0), 1.0) == doctest::Approx(3.0));
  CHECK(ball_volume(star, Point::vertex(1), 3.0) == doctest::Approx(2.0 + 2.0 * 1.0));
}

TEST_CASE("disconnected graphs have infinite cross distances") {
  const MetricGraph g = fixtures::graph("two_pieces.json");
  CHECK_FALSE(g.connected());
  CHECK(std::isinf(distance(g, Point::vertex(0), Point::vertex(3))));
}

TEST_CASE("infinite edges") {
  const MetricGraph g = fixtures::graph("half_line.json");
  CHECK_FALSE(g.compact());
  CHECK(std::isinf(g.total_length()));
  CHECK(g.numeric_length(0) == 10.0);
  CHECK(distance(g, Point::vertex(0), g.point(0, 7.0)) == doctest::Approx(7.0));
}

TEST_CASE("points are normalized and checked") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  CHECK(g.point(0, 0.0) == Point::vertex(0));
  CHECK(g.point(0, std::numbers::pi) == Point::vertex(1));
  CHECK_FALSE(g.point(0, 1.0).is_vertex());
  CHECK_THROWS_AS(g.point(0, 4.0), InputError);
  CHECK_THROWS_AS(g.point(3, 1.0), InputError);
}

TEST_CASE("segments cover every edge") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  const auto segs = segments(g, 3.0, 0.1);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    double lo = kInfinity, hi = 0.0;
    for (const auto& s : segs) {
      if (s.edge != e) continue;
      CHECK(s.length() == doctest::Approx(std::min(3.0, g.edge(e).length)));
      lo = std::min(lo, s.t0);
      hi = std::max(hi, s.t1);
    }
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(g.edge(e).length));
  }
}

TEST_CASE("graph JSON round trip and strict keys") {
  const GraphSpec s = read_graph_file(fixtures::path("half_line.json"));
  const GraphSpec t = parse_graph_json(graph_to_json(s));
  REQUIRE(t.edges.size() == 1);
  CHECK(std::isinf(t.edges[0].length));
  CHECK(t.edges[0].truncation == 10.0);
  CHECK_THROWS_AS(parse_graph_json(R"({"u":1,"vertices":[],"edges":[],"extra":1})"), InputError);
  CHECK_THROWS_AS(parse_graph_json("not json"), InputError);
  CHECK_THROWS_AS(parse_graph_json(R"({"u":1,"vertices":["a"]})"), InputError);
  CHECK_THROWS_AS(read_graph_file("/nonexistent/graph.json"), InputError);
}
