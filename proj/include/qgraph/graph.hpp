#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qgraph/types.hpp"

namespace qgraph {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raw, unvalidated description of a metric graph as read from a file.
/// Endpoints are referenced by vertex id so that dangling references can be
/// reported by validate() instead of failing at parse time.
struct EdgeSpec {
  std::string id;
  double length = 0.0;  // may be +infinity
  std::string from;
  std::optional<std::string> to;          // absent for infinite edges
  std::optional<double> truncation;       // numerical stand-in length for infinite edges
};

struct GraphSpec {
  double u = 1.0;
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
};

struct Violation {
  std::string subject;    // "edge:<id>", "vertex:<id>" or "graph"
  std::string condition;  // "LB", "F", "endpoint", "length", "duplicate-id", "u"
  std::string message;
};

/// Every violated graph invariant. Empty iff the spec describes a metric graph
/// with finite vertex degrees, a uniform lower length bound u, and consistent
/// endpoints.
std::vector<Violation> validate(const GraphSpec& spec);

enum class End { Init, Term };

/// One end of an edge. A loop contributes two distinct EdgeEnds at its vertex.
struct EdgeEnd {
  std::size_t edge = 0;
  End end = End::Init;
  auto operator<=>(const EdgeEnd&) const = default;
};

/// Ordered edge-ends at a vertex: ascending edge index, Init before Term.
struct VertexStar {
  std::size_t vertex = 0;
  std::vector<EdgeEnd> ends;
  std::size_t degree() const { return ends.size(); }
};

struct Edge {
  std::string id;
  double length = 0.0;
  std::size_t init = 0;
  std::optional<std::size_t> term;
  std::optional<double> truncation;

  bool finite() const { return term.has_value(); }
  bool is_loop() const { return term && *term == init; }
};

/// A point of X: a vertex, or an interior point (e, t) with 0 < t < l(e).
struct Point {
  enum class Kind { Vertex, OnEdge };
  Kind kind = Kind::Vertex;
  std::size_t index = 0;  // vertex index or edge index
  double t = 0.0;

  static Point vertex(std::size_t v) { return {Kind::Vertex, v, 0.0}; }
  static Point on_edge(std::size_t e, double t) { return {Kind::OnEdge, e, t}; }
  bool is_vertex() const { return kind == Kind::Vertex; }
  bool operator==(const Point&) const = default;
};

/// Closed subinterval [t0, t1] of an edge.
struct EdgeSegment {
  std::size_t edge = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double length() const { return t1 - t0; }
};

/// Validated, immutable metric graph Γ = (E, V, i, j) with lower length bound u.
class MetricGraph {
 public:
  /// Throws InputError listing every violation if the spec is invalid.
  static MetricGraph build(const GraphSpec& spec);

  double u() const { return u_; }
  std::size_t num_vertices() const { return vertex_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::string& vertex_id(std::size_t v) const { return vertex_ids_.at(v); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<Edge>& edges() const { return edges_; }
  const VertexStar& star(std::size_t v) const { return stars_.at(v); }
  std::size_t degree(std::size_t v) const { return stars_.at(v).degree(); }

  /// Vertex index of an edge end (the init vertex or the terminal vertex).
  std::size_t vertex_of(EdgeEnd end) const;
  /// Position of an edge end within its vertex star.
  std::size_t slot_of(EdgeEnd end) const;

  std::optional<std::size_t> find_vertex(const std::string& id) const;
  std::optional<std::size_t> find_edge(const std::string& id) const;

  bool compact() const;  // no infinite edges
  bool connected() const { return num_components_ <= 1; }
  std::size_t component(std::size_t v) const { return component_.at(v); }
  /// Sum of edge lengths (infinite if any edge is infinite).
  double total_length() const;
  /// Length used for numerical work: l(e), or the truncation of an infinite edge.
  double numeric_length(std::size_t e) const;

  /// Normalizes (e, 0) and (e, l(e)) to vertex points; throws InputError for
  /// unknown edges/vertices or t outside [0, l(e)].
  Point point(std::size_t e, double t) const;
  void check_point(const Point& p) const;

  struct Adjacent {
    std::size_t to;
    double length;
  };
  const std::vector<Adjacent>& neighbours(std::size_t v) const { return adjacency_.at(v); }

 private:
  double u_ = 1.0;
  std::vector<std::string> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<VertexStar> stars_;
  std::vector<std::size_t> init_slot_, term_slot_;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::vector<std::size_t> component_;
  std::size_t num_components_ = 0;
};

/// Path-metric distances from a fixed base point, with vertex distances cached.
class DistanceField {
 public:
  DistanceField(const MetricGraph& g, const Point& origin);

  const Point& origin() const { return origin_; }
  double to_vertex(std::size_t v) const { return vertex_dist_.at(v); }
  /// d(origin, (e, t)) for any t in [0, l(e)].
  double to_edge_point(std::size_t e, double t) const;
  double to(const Point& p) const;

  /// m(B_r(origin)), edge-Lebesgue measure of the closed ball.
  double ball_volume(double r) const;
  /// Measure of {t in (0, l(e)) : d(origin, (e,t)) <= r}.
  double ball_volume_on_edge(std::size_t e, double r) const;

 private:
  const MetricGraph* g_;
  Point origin_;
  std::vector<double> vertex_dist_;
};

/// Good-polygon infimum distance; +infinity across components.
double distance(const MetricGraph& g, const Point& x, const Point& y);

double ball_volume(const MetricGraph& g, const Point& x0, double r);

/// Sliding windows of length min(max_len, l(e)) at offsets k*step, plus a final
/// window flush with the edge end, so that every edge is covered.
std::vector<EdgeSegment> segments(const MetricGraph& g, double max_len, double step);

// graph_io.cpp

/// Parses the graph JSON document; unknown keys are rejected with InputError.
GraphSpec parse_graph_json(const std::string& text);
GraphSpec read_graph_file(const std::string& path);
std::string graph_to_json(const GraphSpec& spec);

}  // namespace qgraph
